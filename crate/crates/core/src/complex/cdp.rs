//! Coded diffraction patterns: random quaternary masks followed by a unitary 2-D DFT.
//!
//! Row `r = (l, k1, k2)` is `a_r(t1, t2) = m_l(t1, t2) exp(2 pi i (k1 t1 / d1 + k2 t2 / d2)) / sqrt(d)`,
//! so `(A x)_r = sum_t a_r(t) x(t)` and every entry has modulus `1/sqrt(d)`.
//! Rows are stored pattern-major, then `k1`-major.

use std::sync::Arc;

use rand::seq::index;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::numerics::{Complex64, LinearOperator};
use crate::rng::Rng;

pub struct CdpOperator {
    d1: usize,
    d2: usize,
    masks: Vec<Vec<Complex64>>,
    /// Sorted indices into the `L d` full rows that are kept.
    kept: Vec<usize>,
    /// Position of each full row in `kept`, or `usize::MAX` when zeroed.
    slot: Vec<usize>,
    inverse_rows: Arc<dyn Fft<f64>>,
    inverse_cols: Arc<dyn Fft<f64>>,
    forward_rows: Arc<dyn Fft<f64>>,
    forward_cols: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CdpOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CdpOperator")
            .field("d1", &self.d1)
            .field("d2", &self.d2)
            .field("patterns", &self.masks.len())
            .field("rows", &self.kept.len())
            .finish()
    }
}

/// Number of full rows removed to reach `n = round(delta d)`.
pub fn zeroed_row_count(d: usize, patterns: usize, delta: f64) -> usize {
    patterns * d - (delta * d as f64).round() as usize
}

impl CdpOperator {
    /// `patterns` masks with entries uniform on `{1, -1, i, -i}`; rows are then
    /// removed uniformly at random so that `n = round(delta d)`.
    pub fn new(d1: usize, d2: usize, patterns: usize, delta: f64, rng: &mut Rng) -> Result<Self> {
        if d1 == 0 || d2 == 0 || patterns == 0 {
            return Err(invalid("image dimensions and pattern count must be positive"));
        }
        if !(delta > 0.0) || delta > patterns as f64 {
            return Err(invalid(format!("delta = {delta} must lie in (0, {patterns}]")));
        }
        let d = d1 * d2;
        let units = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        let masks: Vec<Vec<Complex64>> =
            (0..patterns).map(|_| (0..d).map(|_| units[rng.below(4)]).collect()).collect();
        let full = patterns * d;
        let n = full - zeroed_row_count(d, patterns, delta);
        if n == 0 {
            return Err(invalid("delta leaves no measurements"));
        }
        let mut kept = index::sample(rng, full, n).into_vec();
        kept.sort_unstable();
        Ok(Self::assemble(d1, d2, masks, kept))
    }

    /// Operator with given masks and every row kept.
    pub fn from_masks(d1: usize, d2: usize, masks: Vec<Vec<Complex64>>) -> Result<Self> {
        if masks.is_empty() || masks.iter().any(|m| m.len() != d1 * d2) || d1 * d2 == 0 {
            return Err(invalid("each mask must have d1 * d2 entries"));
        }
        let full = masks.len() * d1 * d2;
        Ok(Self::assemble(d1, d2, masks, (0..full).collect()))
    }

    fn assemble(d1: usize, d2: usize, masks: Vec<Vec<Complex64>>, kept: Vec<usize>) -> Self {
        let full = masks.len() * d1 * d2;
        let mut slot = vec![usize::MAX; full];
        for (i, &r) in kept.iter().enumerate() {
            slot[r] = i;
        }
        let mut planner = FftPlanner::new();
        Self {
            d1,
            d2,
            inverse_rows: planner.plan_fft_inverse(d2),
            inverse_cols: planner.plan_fft_inverse(d1),
            forward_rows: planner.plan_fft_forward(d2),
            forward_cols: planner.plan_fft_forward(d1),
            masks,
            kept,
            slot,
        }
    }

    pub fn patterns(&self) -> usize {
        self.masks.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    pub fn masks(&self) -> &[Vec<Complex64>] {
        &self.masks
    }

    /// Full-row indices that were zeroed.
    pub fn zeroed_rows(&self) -> Vec<usize> {
        (0..self.slot.len()).filter(|&r| self.slot[r] == usize::MAX).collect()
    }

    /// Unnormalized 2-D transform of a row-major `d1 x d2` buffer in place.
    fn fft2(&self, buf: &mut [Complex64], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        let (d1, d2) = (self.d1, self.d2);
        rows.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); d1 * d2];
        for i in 0..d1 {
            for j in 0..d2 {
                t[j * d1 + i] = buf[i * d2 + j];
            }
        }
        cols.process(&mut t);
        for j in 0..d2 {
            for i in 0..d1 {
                buf[i * d2 + j] = t[j * d1 + i];
            }
        }
    }
}

impl LinearOperator<Complex64> for CdpOperator {
    fn rows(&self) -> usize {
        self.kept.len()
    }

    fn cols(&self) -> usize {
        self.d1 * self.d2
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let d = self.cols();
        let norm = 1.0 / (d as f64).sqrt();
        let blocks: Vec<Vec<Complex64>> = self
            .masks
            .par_iter()
            .map(|mask| {
                let mut buf: Vec<Complex64> = mask.iter().zip(x).map(|(m, v)| m * v).collect();
                self.fft2(&mut buf, self.inverse_rows.as_ref(), self.inverse_cols.as_ref());
                buf
            })
            .collect();
        for (o, &r) in out.iter_mut().zip(&self.kept) {
            *o = blocks[r / d][r % d] * norm;
        }
    }

    fn apply_adjoint(&self, u: &[Complex64], out: &mut [Complex64]) {
        let d = self.cols();
        let norm = 1.0 / (d as f64).sqrt();
        let parts: Vec<Vec<Complex64>> = self
            .masks
            .par_iter()
            .enumerate()
            .map(|(l, mask)| {
                let mut buf: Vec<Complex64> = (0..d)
                    .map(|k| match self.slot[l * d + k] {
                        usize::MAX => Complex64::new(0.0, 0.0),
                        i => u[i],
                    })
                    .collect();
                self.fft2(&mut buf, self.forward_rows.as_ref(), self.forward_cols.as_ref());
                buf.iter_mut().zip(mask).for_each(|(b, m)| *b *= m.conj());
                buf
            })
            .collect();
        for (k, o) in out.iter_mut().enumerate() {
            *o = parts.iter().map(|p| p[k]).sum::<Complex64>() * norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{adjoint_mismatch, Scalar};

    #[test]
    fn zeroed_fraction() {
        let mut rng = Rng::new(2);
        let op = CdpOperator::new(8, 8, 3, 2.4, &mut rng).unwrap();
        assert_eq!(op.zeroed_rows().len(), zeroed_row_count(64, 3, 2.4));
        assert_eq!(op.rows(), (2.4f64 * 64.0).round() as usize);
    }

    #[test]
    fn adjoint_holds() {
        let mut rng = Rng::new(5);
        let op = CdpOperator::new(6, 10, 2, 1.7, &mut rng).unwrap();
        let x: Vec<Complex64> = (0..op.cols()).map(|_| Complex64::gaussian(&mut rng)).collect();
        let u: Vec<Complex64> = (0..op.rows()).map(|_| Complex64::gaussian(&mut rng)).collect();
        assert!(adjoint_mismatch(&op, &x, &u) < 1e-10);
    }

    #[test]
    fn rejects_too_many_measurements() {
        assert!(CdpOperator::new(4, 4, 2, 2.5, &mut Rng::new(0)).is_err());
    }
}
