//! Lanczos iteration with full reorthogonalization, used to warm-start the
//! power method on slowly converging spectra.

use super::operator::LinearOperator;
use super::scalar::{dot, norm2, Scalar};
use crate::error::{invalid, numeric, Result};
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct LanczosResult<T> {
    /// Unit-norm Ritz vector of the largest Ritz value.
    pub vector: Vec<T>,
    /// Ritz values in decreasing order.
    pub ritz_values: Vec<f64>,
    pub steps: usize,
    /// `||B v - theta v||` for the returned pair.
    pub residual: f64,
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and eigenvectors (as columns, row-major).
pub fn symmetric_eigen(a: &[f64], m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j].powi(2))
            .sum();
        let diag: f64 = (0..m).map(|i| a[i * m + i].powi(2)).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let vkp = v[k * m + p];
                    let vkq = v[k * m + q];
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..m).map(|i| a[i * m + i]).collect(), v)
}

/// Runs Lanczos on a Hermitian operator until the top Ritz pair has residual
/// below `tol * max(|theta|, 1)` or `max_steps` is reached.
pub fn lanczos_top<T: Scalar, Op: LinearOperator<T> + ?Sized>(
    op: &Op,
    max_steps: usize,
    tol: f64,
    rng: &mut Rng,
) -> Result<LanczosResult<T>> {
    let d = op.cols();
    if d == 0 || op.rows() != d {
        return Err(invalid("Lanczos needs a non-empty square operator"));
    }
    let max_steps = max_steps.min(d).max(1);
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut v: Vec<T> = (0..d).map(|_| T::gaussian(rng)).collect();
    let n0 = norm2(&v).sqrt();
    v.iter_mut().for_each(|x| *x = x.scale(1.0 / n0));
    let mut w = vec![T::zero(); d];
    let mut best: Option<LanczosResult<T>> = None;
    for j in 0..max_steps {
        op.apply(&v, &mut w);
        let a = dot(&v, &w).re();
        basis.push(v.clone());
        alpha.push(a);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, &y)| *x -= y * c);
            }
        }
        let b = norm2(&w).sqrt();
        let m = j + 1;
        let check = m % 5 == 0 || m == max_steps || b <= 1e-14 * a.abs().max(1.0);
        if check {
            let mut t = vec![0.0; m * m];
            for i in 0..m {
                t[i * m + i] = alpha[i];
                if i + 1 < m {
                    t[i * m + i + 1] = beta[i];
                    t[(i + 1) * m + i] = beta[i];
                }
            }
            let (vals, vecs) = symmetric_eigen(&t, m);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&p, &q| vals[q].total_cmp(&vals[p]));
            let top = order[0];
            let theta = vals[top];
            // Residual of the Ritz pair is |beta_m * s_m|.
            let residual = (b * vecs[(m - 1) * m + top]).abs();
            let mut y = vec![T::zero(); d];
            for (i, q) in basis.iter().enumerate() {
                let s = vecs[i * m + top];
                y.iter_mut().zip(q).for_each(|(x, &qq)| *x += qq.scale(s));
            }
            let ny = norm2(&y).sqrt();
            if !(ny.is_finite() && ny > 0.0) {
                return Err(numeric("Lanczos Ritz vector vanished"));
            }
            y.iter_mut().for_each(|x| *x = x.scale(1.0 / ny));
            let done = residual <= tol * theta.abs().max(1.0) || b <= 1e-14 * a.abs().max(1.0);
            best = Some(LanczosResult {
                vector: y,
                ritz_values: order.iter().map(|&i| vals[i]).collect(),
                steps: m,
                residual,
            });
            if done {
                break;
            }
        }
        if b <= 1e-14 * a.abs().max(1.0) {
            break;
        }
        beta.push(b);
        v = w.iter().map(|x| x.scale(1.0 / b)).collect();
    }
    best.ok_or_else(|| numeric("Lanczos produced no Ritz pair"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;

    #[test]
    fn jacobi_diagonalizes() {
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        let (vals, vecs) = symmetric_eigen(&a, 3);
        for k in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|j| a[i * 3 + j] * vecs[j * 3 + k]).sum();
                assert!((av - vals[k] * vecs[i * 3 + k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn finds_top_eigenpair_of_diagonal() {
        let m = DenseMatrix::from_fn(60, 60, |i, j| if i == j { (i as f64) / 10.0 - 2.0 } else { 0.0 });
        let r = lanczos_top(&m, 60, 1e-12, &mut Rng::new(3)).unwrap();
        assert!((r.ritz_values[0] - 3.9).abs() < 1e-10);
        assert!((r.vector[59].abs() - 1.0).abs() < 1e-8);
    }
}
