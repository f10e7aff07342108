//! Random GLM instances with i.i.d. Gaussian sensing matrices.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::models::{Channel, Prior};
use crate::numerics::{DenseMatrix, LinearOperator};
use crate::rng::Rng;

/// `y = q(A x, w)` with `A` of size `n x d`, entries `N(0, 1/d)` and `||x||^2 = d`.
#[derive(Clone, Debug)]
pub struct Instance {
    pub x: Vec<f64>,
    pub a: DenseMatrix<f64>,
    pub y: Vec<f64>,
    pub delta: f64,
    pub prior: Arc<dyn Prior>,
    pub channel: Arc<dyn Channel>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }

    /// Aspect ratio `n / d` actually realized.
    pub fn realized_delta(&self) -> f64 {
        self.n() as f64 / self.d() as f64
    }
}

/// Number of measurements for a target ratio: `round(delta * d)`.
pub fn measurement_count(d: usize, delta: f64) -> Result<usize> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    let n = (delta * d as f64).round() as usize;
    if n == 0 {
        return Err(invalid("delta * d rounds to zero measurements"));
    }
    Ok(n)
}

/// Samples `x` from the prior (rescaled to `||x||^2 = d`), `A`, and `y`.
pub fn sample_instance(
    prior: Arc<dyn Prior>,
    channel: Arc<dyn Channel>,
    d: usize,
    delta: f64,
    rng: &mut Rng,
) -> Result<Instance> {
    let n = measurement_count(d, delta)?;
    let mut rx = rng.split();
    let mut x: Vec<f64> = (0..d).map(|_| prior.sample(&mut rx)).collect();
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if !(norm2 > 0.0) {
        return Err(invalid("sampled signal is identically zero"));
    }
    let scale = (d as f64 / norm2).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    let a = DenseMatrix::gaussian(n, d, 1.0 / d as f64, rng);
    let g = a.apply_vec(&x);
    let mut ry = rng.split();
    let y = g.iter().map(|&gi| channel.sample(gi, &mut ry)).collect();
    Ok(Instance {
        x,
        a,
        y,
        delta,
        prior,
        channel,
    })
}
