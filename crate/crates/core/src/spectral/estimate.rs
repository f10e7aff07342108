//! Matrix-free computation of the leading eigenvector of `A^H diag(T_s(y)) A`.

use crate::error::Result;
use crate::models::{Instance, Preprocessing};
use crate::numerics::{
    dot, lanczos_top, power_method_from, LinearOperator, PowerOptions, Scalar, Shifted,
    WeightedGram,
};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    pub power: PowerOptions,
    /// Flip (or rotate) the estimate so that `<x_hat, x> >= 0` when the
    /// signal is known.
    pub align: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            power: PowerOptions::default(),
            align: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralEstimate<T> {
    /// Unit-norm estimate of the signal direction.
    pub direction: Vec<T>,
    /// Leading eigenvalue of `A^H diag(z) A`.
    pub eigenvalue: f64,
    pub lanczos_steps: usize,
    pub iterations: usize,
    /// `false` when the power method hit its iteration cap.
    pub converged: bool,
    /// Spectral shift applied to make the leading eigenvalue dominant.
    pub shift: f64,
}

/// Lanczos steps used for the warm start.
const LANCZOS_STEPS: usize = 150;
const LANCZOS_TOL: f64 = 1e-9;

/// Leading eigenvector of `A^H diag(z) A` for a generic operator `A`.
///
/// A Lanczos run supplies a warm start together with the extreme Ritz values.
/// The operator is then shifted by `-(theta_2 + theta_min) / 2`, which makes
/// the top eigenvalue strictly dominant in magnitude, and the power method
/// finishes from the warm start with its usual stopping rule.
pub fn spectral_estimate_op<T: Scalar, Op: LinearOperator<T> + ?Sized>(
    op: &Op,
    z: &[f64],
    reference: Option<&[T]>,
    opts: SpectralOptions,
    rng: &mut Rng,
) -> Result<SpectralEstimate<T>> {
    let gram = WeightedGram::new(op, z);
    let warm = lanczos_top(&gram, LANCZOS_STEPS, LANCZOS_TOL, rng)?;
    let ritz = &warm.ritz_values;
    let shift = match ritz.len() {
        0 | 1 => 0.0,
        k => (-(ritz[1] + ritz[k - 1]) / 2.0).max(0.0),
    };
    let shifted = Shifted::new(&gram, shift);
    let r = power_method_from(&shifted, warm.vector, opts.power)?;
    let mut direction = r.vector;
    if let (true, Some(x)) = (opts.align, reference) {
        let c = dot(&direction, x);
        let mag = c.abs2().sqrt();
        if mag > 0.0 {
            // Multiply by the phase of <x_hat, x> so that the inner product is real and non-negative.
            let phase = c.scale(1.0 / mag);
            direction.iter_mut().for_each(|v| *v = *v * phase);
        }
    }
    Ok(SpectralEstimate {
        direction,
        eigenvalue: r.eigenvalue - shift,
        lanczos_steps: warm.steps,
        iterations: r.iterations,
        converged: r.converged,
        shift,
    })
}

/// Spectral estimate for a real instance with preprocessing `preproc`.
pub fn spectral_estimate(
    instance: &Instance,
    preproc: &Preprocessing,
    opts: SpectralOptions,
    rng: &mut Rng,
) -> Result<SpectralEstimate<f64>> {
    let z = preproc.apply_all(&instance.y);
    spectral_estimate_op(&instance.a, &z, Some(&instance.x), opts, rng)
}
