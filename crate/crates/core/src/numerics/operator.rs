//! Matrix-free linear operators.

use rayon::prelude::*;

use super::scalar::{dot, dot_plain, Scalar};
use crate::rng::Rng;

/// A linear map `C^cols -> C^rows` (or the real analogue) with its adjoint.
pub trait LinearOperator<T: Scalar>: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[T], out: &mut [T]);
    fn apply_adjoint(&self, u: &[T], out: &mut [T]);

    /// `out = A^H diag(weights) A v`.
    fn weighted_gram(&self, weights: &[f64], v: &[T], out: &mut [T]) {
        let mut tmp = vec![T::zero(); self.rows()];
        self.apply(v, &mut tmp);
        for (t, &w) in tmp.iter_mut().zip(weights) {
            *t = t.scale(w);
        }
        self.apply_adjoint(&tmp, out);
    }

    fn apply_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows()];
        self.apply(x, &mut out);
        out
    }

    fn apply_adjoint_vec(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols()];
        self.apply_adjoint(u, &mut out);
        out
    }
}

/// `|<Ax, u> - <x, A^H u>|` for the given vectors.
pub fn adjoint_mismatch<T: Scalar, Op: LinearOperator<T> + ?Sized>(op: &Op, x: &[T], u: &[T]) -> f64 {
    let ax = op.apply_vec(x);
    let ahu = op.apply_adjoint_vec(u);
    let lhs = dot(u, &ax);
    let rhs = dot(&ahu, x);
    (lhs - rhs).abs2().sqrt()
}

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Rows per block in reductions; fixed so results do not depend on the
/// number of worker threads.
const ROW_BLOCK: usize = 256;

impl<T: Scalar> DenseMatrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// I.i.d. Gaussian entries with `E|a_ij|^2 = variance`. Each block of rows
    /// draws from its own stream of `rng`.
    pub fn gaussian(rows: usize, cols: usize, variance: f64, rng: &mut Rng) -> Self {
        let base = rng.split();
        let sd = variance.sqrt();
        let mut data = vec![T::zero(); rows * cols];
        if cols > 0 {
            data.par_chunks_mut(cols * 64).enumerate().for_each(|(k, chunk)| {
                let mut r = base.stream(k as u64);
                for v in chunk.iter_mut() {
                    *v = T::gaussian(&mut r).scale(sd);
                }
            });
        }
        Self { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    fn block_reduce(&self, per_row: impl Fn(usize, &[T]) -> Option<T> + Sync, out: &mut [T]) {
        let d = self.cols;
        let partials: Vec<Vec<T>> = self
            .data
            .par_chunks(d * ROW_BLOCK)
            .enumerate()
            .map(|(b, block)| {
                let mut acc = vec![T::zero(); d];
                for (r, row) in block.chunks_exact(d).enumerate() {
                    if let Some(c) = per_row(b * ROW_BLOCK + r, row) {
                        for (a, &x) in acc.iter_mut().zip(row) {
                            *a += x.conj() * c;
                        }
                    }
                }
                acc
            })
            .collect();
        out.iter_mut().for_each(|v| *v = T::zero());
        for p in partials {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        let d = self.cols;
        if d == 0 {
            out.iter_mut().for_each(|v| *v = T::zero());
            return;
        }
        out.par_iter_mut()
            .zip(self.data.par_chunks(d))
            .with_min_len(64)
            .for_each(|(o, row)| *o = dot_plain(row, x));
    }

    fn apply_adjoint(&self, u: &[T], out: &mut [T]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        if self.cols == 0 {
            return;
        }
        self.block_reduce(|i, _| Some(u[i]), out);
    }

    fn weighted_gram(&self, weights: &[f64], v: &[T], out: &mut [T]) {
        assert_eq!(weights.len(), self.rows);
        if self.cols == 0 {
            return;
        }
        self.block_reduce(
            |i, row| {
                let w = weights[i];
                (w != 0.0).then(|| dot_plain(row, v).scale(w))
            },
            out,
        );
    }
}

/// The Hermitian operator `A^H diag(weights) A`.
pub struct WeightedGram<'a, T: Scalar, Op: LinearOperator<T> + ?Sized> {
    pub op: &'a Op,
    pub weights: &'a [f64],
    _marker: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar, Op: LinearOperator<T> + ?Sized> WeightedGram<'a, T, Op> {
    pub fn new(op: &'a Op, weights: &'a [f64]) -> Self {
        assert_eq!(weights.len(), op.rows());
        Self {
            op,
            weights,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<T: Scalar, Op: LinearOperator<T> + ?Sized> LinearOperator<T> for WeightedGram<'_, T, Op> {
    fn rows(&self) -> usize {
        self.op.cols()
    }
    fn cols(&self) -> usize {
        self.op.cols()
    }
    fn apply(&self, x: &[T], out: &mut [T]) {
        self.op.weighted_gram(self.weights, x, out)
    }
    fn apply_adjoint(&self, u: &[T], out: &mut [T]) {
        self.op.weighted_gram(self.weights, u, out)
    }
}

/// `B + shift * I` for a square operator `B`.
pub struct Shifted<'a, T: Scalar, Op: LinearOperator<T> + ?Sized> {
    pub inner: &'a Op,
    pub shift: f64,
    _marker: std::marker::PhantomData<T>,
}

impl<'a, T: Scalar, Op: LinearOperator<T> + ?Sized> Shifted<'a, T, Op> {
    pub fn new(inner: &'a Op, shift: f64) -> Self {
        assert_eq!(inner.rows(), inner.cols());
        Self {
            inner,
            shift,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<T: Scalar, Op: LinearOperator<T> + ?Sized> LinearOperator<T> for Shifted<'_, T, Op> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply(&self, x: &[T], out: &mut [T]) {
        self.inner.apply(x, out);
        for (o, &v) in out.iter_mut().zip(x) {
            *o += v.scale(self.shift);
        }
    }
    fn apply_adjoint(&self, u: &[T], out: &mut [T]) {
        self.inner.apply_adjoint(u, out);
        for (o, &v) in out.iter_mut().zip(u) {
            *o += v.scale(self.shift);
        }
    }
}
