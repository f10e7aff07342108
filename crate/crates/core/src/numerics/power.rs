//! Power iteration for the leading eigenpair of a Hermitian operator.

use std::collections::VecDeque;

use super::operator::LinearOperator;
use super::scalar::{dot, norm2, Scalar};
use crate::error::{invalid, numeric, Result};
use crate::rng::Rng;

/// Lag between the iterates compared by the stopping rule.
const LAG: usize = 10;

#[derive(Clone, Copy, Debug)]
pub struct PowerOptions {
    /// Stop once `|<v_T, v_{T-10}>| > 1 - tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PowerResult<T> {
    /// Unit-norm eigenvector estimate.
    pub vector: Vec<T>,
    /// Rayleigh quotient `<v, Bv>`.
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power method started from a Gaussian vector drawn from `rng`.
///
/// The operator must be Hermitian and its leading eigenvalue must dominate in
/// magnitude; callers shift indefinite operators beforehand.
pub fn power_method<T: Scalar, Op: LinearOperator<T> + ?Sized>(
    op: &Op,
    opts: PowerOptions,
    rng: &mut Rng,
) -> Result<PowerResult<T>> {
    let d = op.cols();
    if d == 0 || op.rows() != d {
        return Err(invalid("power method needs a non-empty square operator"));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("power method tolerance must be positive"));
    }
    let v: Vec<T> = (0..d).map(|_| T::gaussian(rng)).collect();
    power_method_from(op, v, opts)
}

/// Power method started from `start`.
pub fn power_method_from<T: Scalar, Op: LinearOperator<T> + ?Sized>(
    op: &Op,
    start: Vec<T>,
    opts: PowerOptions,
) -> Result<PowerResult<T>> {
    let d = op.cols();
    if d == 0 || op.rows() != d || start.len() != d {
        return Err(invalid("power method needs a square operator matching the start vector"));
    }
    if !(opts.tol > 0.0) {
        return Err(invalid("power method tolerance must be positive"));
    }
    let mut v = start;
    normalize(&mut v)?;
    let mut history: VecDeque<Vec<T>> = VecDeque::with_capacity(LAG + 1);
    history.push_back(v.clone());
    let mut next = vec![T::zero(); d];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        op.apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        normalize(&mut v)?;
        iterations += 1;
        if history.len() == LAG + 1 {
            history.pop_front();
        }
        history.push_back(v.clone());
        if iterations >= LAG && history.len() == LAG + 1 {
            let c = dot(&history[0], &v).abs2().sqrt();
            if c > 1.0 - opts.tol {
                converged = true;
                break;
            }
        }
    }
    op.apply(&v, &mut next);
    let eigenvalue = dot(&v, &next).re();
    Ok(PowerResult {
        vector: v,
        eigenvalue,
        iterations,
        converged,
    })
}

fn normalize<T: Scalar>(v: &mut [T]) -> Result<()> {
    let n = norm2(v).sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(numeric("power iterate vanished or became non-finite"));
    }
    let inv = 1.0 / n;
    v.iter_mut().for_each(|x| *x = x.scale(inv));
    Ok(())
}
