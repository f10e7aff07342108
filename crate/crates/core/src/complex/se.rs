//! Single-parameter state evolution of complex GAMP with `f = identity`, `h = sqrt(delta) h*`.

use crate::error::{invalid, numeric, Result};
use crate::numerics::{integrate, AdaptiveOptions, QuadratureRule};

use super::denoiser::ComplexHStar;

/// `mu` above which the recursion is reported as perfect recovery (`sigma^2 / mu^2 = 1/mu`).
pub const COMPLEX_PERFECT_RECOVERY: f64 = 1e10;

/// `E|h*(U; Y)|^2` with `mu_u = mu / sqrt(delta)` and `sigma_u^2 = mu / delta`.
///
/// `U` is rotated to the positive real axis; `|U|^2 / E|U|^2 = w^2` has density
/// `2 w exp(-w^2)` and is integrated adaptively, while `G | U ~ CN(rho U, s^2)`
/// uses a tensor Gauss-Hermite rule.
pub fn expected_h_star_sq(mu: f64, delta: f64, rule: &QuadratureRule) -> Result<f64> {
    let h = ComplexHStar::from_mu(mu, delta)?;
    let (rho, s2) = (h.rho(), h.s2());
    let s = s2.sqrt();
    let v = (mu / delta.sqrt()).powi(2) + mu / delta;
    let snr = (rho * rho * v / s2).max(1.0);
    let mut breakpoints = vec![0.0];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let w = k / snr.sqrt();
        if w < 9.0 {
            breakpoints.push(w);
        }
    }
    let mut failure = None;
    let inner = |w: f64| -> f64 {
        let r = (v).sqrt() * w;
        let mut acc = 0.0;
        for (g1, w1) in rule.iter() {
            for (g2, w2) in rule.iter() {
                let re = rho * r + s * g1 / std::f64::consts::SQRT_2;
                let im = s * g2 / std::f64::consts::SQRT_2;
                let y = re * re + im * im;
                let (val, _) = h.eval(crate::numerics::Complex64::new(r, 0.0), y);
                acc += w1 * w2 * val.norm_sqr();
            }
        }
        2.0 * w * (-w * w).exp() * acc
    };
    let opts = AdaptiveOptions { rel_tol: 1e-10, max_intervals: 400, ..Default::default() };
    let value = integrate(
        |w| {
            let r = inner(w);
            if !r.is_finite() && failure.is_none() {
                failure = Some(w);
            }
            r
        },
        0.0,
        9.0,
        &breakpoints,
        opts,
    )?;
    if let Some(w) = failure {
        return Err(numeric(format!("non-finite integrand in complex state evolution at w = {w}")));
    }
    Ok(value)
}

/// `mu_{t+1} = delta E|h*(U_t; Y)|^2`.
pub fn complex_se_step(mu: f64, delta: f64, rule: &QuadratureRule) -> Result<f64> {
    Ok(delta * expected_h_star_sq(mu, delta, rule)?)
}

/// `mu_0 = a^2 / (1 - a^2)`.
pub fn complex_se_init(a2: f64) -> Result<f64> {
    if !(a2 > 0.0 && a2 < 1.0) {
        return Err(invalid(format!("initial squared overlap must lie in (0, 1), got {a2}")));
    }
    Ok(a2 / (1.0 - a2))
}

/// Squared normalized overlap of `x^t` when `x^t ~ mu x + sqrt(mu) W`.
pub fn complex_overlap(mu: f64) -> f64 {
    mu / (mu + 1.0)
}

#[derive(Clone, Debug)]
pub struct ComplexSeTrace {
    pub mu: Vec<f64>,
    pub perfect_recovery: bool,
    pub converged: bool,
}

/// Iterates the recursion until `|mu_{t+1} - mu_t| <= tol (1 + mu_t)`,
/// perfect recovery, or `max_iter` steps.
pub fn complex_se_run(mu0: f64, delta: f64, rule: &QuadratureRule, max_iter: usize, tol: f64) -> Result<ComplexSeTrace> {
    let mut mu = vec![mu0];
    for _ in 0..max_iter {
        let cur = *mu.last().unwrap();
        if cur > COMPLEX_PERFECT_RECOVERY {
            return Ok(ComplexSeTrace { mu, perfect_recovery: true, converged: true });
        }
        let next = complex_se_step(cur, delta, rule)?;
        mu.push(next);
        if (next - cur).abs() <= tol * (1.0 + cur) {
            return Ok(ComplexSeTrace { mu, perfect_recovery: false, converged: true });
        }
    }
    Ok(ComplexSeTrace { mu, perfect_recovery: false, converged: false })
}
