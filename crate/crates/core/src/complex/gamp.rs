//! Complex GAMP for noiseless phase retrieval with a scaled spectral start.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::gamp::StopReason;
use crate::numerics::{dot, norm2, Complex64, DenseMatrix, LinearOperator, QuadratureRule, Scalar};
use crate::rng::Rng;

use super::cdp::CdpOperator;
use super::denoiser::ComplexHStar;
use super::se::{complex_se_init, complex_se_step, COMPLEX_PERFECT_RECOVERY};

/// Sensing operator of a complex instance.
#[derive(Debug)]
pub enum Sensing {
    /// Rows i.i.d. `CN(0, I/d)`.
    Gaussian(DenseMatrix<Complex64>),
    Cdp(CdpOperator),
}

impl LinearOperator<Complex64> for Sensing {
    fn rows(&self) -> usize {
        match self {
            Sensing::Gaussian(a) => a.rows(),
            Sensing::Cdp(a) => a.rows(),
        }
    }

    fn cols(&self) -> usize {
        match self {
            Sensing::Gaussian(a) => a.cols(),
            Sensing::Cdp(a) => a.cols(),
        }
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        match self {
            Sensing::Gaussian(a) => a.apply(x, out),
            Sensing::Cdp(a) => a.apply(x, out),
        }
    }

    fn apply_adjoint(&self, u: &[Complex64], out: &mut [Complex64]) {
        match self {
            Sensing::Gaussian(a) => a.apply_adjoint(u, out),
            Sensing::Cdp(a) => a.apply_adjoint(u, out),
        }
    }

    fn weighted_gram(&self, weights: &[f64], v: &[Complex64], out: &mut [Complex64]) {
        match self {
            Sensing::Gaussian(a) => a.weighted_gram(weights, v, out),
            Sensing::Cdp(a) => a.weighted_gram(weights, v, out),
        }
    }
}

/// Signal, sensing operator and observations `y_i = |(A x)_i|^2`.
#[derive(Debug)]
pub struct ComplexInstance {
    pub x: Vec<Complex64>,
    pub a: Sensing,
    pub y: Vec<f64>,
}

impl ComplexInstance {
    pub fn new(x: Vec<Complex64>, a: Sensing) -> Result<Self> {
        if x.len() != a.cols() {
            return Err(invalid("signal length does not match the operator"));
        }
        let y = a.apply_vec(&x).iter().map(|g| g.norm_sqr()).collect();
        Ok(Self { x, a, y })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }

    pub fn realized_delta(&self) -> f64 {
        self.n() as f64 / self.d() as f64
    }
}

/// `x ~ CN(0, I)` rescaled to `||x||^2 = d` with Gaussian sensing, `n = round(delta d)`.
pub fn sample_complex_gaussian(d: usize, delta: f64, rng: &mut Rng) -> Result<ComplexInstance> {
    if d == 0 || !(delta > 0.0) {
        return Err(invalid("dimension and delta must be positive"));
    }
    let n = (delta * d as f64).round() as usize;
    let mut xr = rng.split();
    let mut x: Vec<Complex64> = (0..d).map(|_| Complex64::gaussian(&mut xr)).collect();
    let scale = (d as f64 / norm2(&x)).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    let a = DenseMatrix::gaussian(n, d, 1.0 / d as f64, rng);
    ComplexInstance::new(x, Sensing::Gaussian(a))
}

/// `|<x_hat, x>|^2 / (||x_hat||^2 ||x||^2)`, the squared overlap maximized over a global phase.
pub fn phase_aligned_overlap(xhat: &[Complex64], x: &[Complex64]) -> Result<f64> {
    if xhat.len() != x.len() {
        return Err(invalid("vectors must have equal length"));
    }
    let (na, nb) = (norm2(xhat), norm2(x));
    if !(na > 0.0 && nb > 0.0) {
        return Err(invalid("overlap is undefined for a zero vector"));
    }
    Ok((dot(xhat, x).norm_sqr() / (na * nb)).min(1.0))
}

/// Source of the parameter `mu_t` that sets `h*_t`.
#[derive(Clone, Debug, PartialEq)]
pub enum MuSource {
    /// The state-evolution recursion (valid for Gaussian sensing).
    StateEvolution,
    /// A precomputed state-evolution trajectory `mu_0, mu_1, ...`; its last
    /// value is reused once the trajectory is exhausted.
    Schedule(Arc<[f64]>),
    /// `delta ||h*(u^t; y)||^2 / n`.
    NormEstimate,
    /// Positive root of `mu^2 + mu = ||x^{t+1}||^2 / d`.
    QuadraticEstimate,
}

#[derive(Clone, Debug)]
pub struct ComplexGampConfig {
    pub max_iter: usize,
    /// Stop once `||x^{t+1}/||x^{t+1}|| - x^t/||x^t|| ||^2 < stop_tol`.
    pub stop_tol: f64,
    pub mu_source: MuSource,
}

impl Default for ComplexGampConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            stop_tol: 1e-9,
            mu_source: MuSource::StateEvolution,
        }
    }
}

/// Spectral estimate with the asymptotic quantities used to scale it.
#[derive(Clone, Copy, Debug)]
pub struct ComplexStart<'a> {
    pub direction: &'a [Complex64],
    pub z: &'a [f64],
    pub lambda_star: f64,
    pub a2: f64,
}

#[derive(Clone, Debug)]
pub struct ComplexGampTrace {
    /// Phase-aligned squared overlap of `x^t` with the signal, when known.
    pub overlaps: Vec<f64>,
    /// `mu_t` used to build `h*_t`.
    pub mu: Vec<f64>,
    /// `delta ||h*(u^t; y)||^2 / n` for `t = 0, 1, ...` (estimates `mu_{t+1}`).
    pub mu_hat_norm: Vec<f64>,
    /// Positive root of `mu^2 + mu = ||x^{t+1}||^2 / d`.
    pub mu_hat_quadratic: Vec<f64>,
    pub c: Vec<f64>,
    pub diffs: Vec<f64>,
    pub estimate: Vec<Complex64>,
    pub stop: StopReason,
}

impl ComplexGampTrace {
    pub fn iterations(&self) -> usize {
        self.diffs.len()
    }

    pub fn final_overlap(&self) -> Option<f64> {
        self.overlaps.last().copied()
    }
}

fn positive_root(q: f64) -> f64 {
    // mu^2 + mu - q = 0, written to avoid cancellation for small q.
    2.0 * q / (1.0 + (1.0 + 4.0 * q).sqrt())
}

fn normalized_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let (na, nb) = (norm2(a).sqrt(), norm2(b).sqrt());
    a.iter().zip(b).map(|(p, q)| (p / na - q / nb).norm_sqr()).sum()
}

/// Runs complex GAMP from `x^0 = sqrt(d) a / (1 - a^2) x_hat` and
/// `u^0 = (A x^0 - Z A x^0 / lambda*) / sqrt(delta)`.
pub fn complex_gamp_run(
    a: &dyn LinearOperator<Complex64>,
    y: &[f64],
    truth: Option<&[Complex64]>,
    start: &ComplexStart<'_>,
    config: &ComplexGampConfig,
    rule: &QuadratureRule,
) -> Result<ComplexGampTrace> {
    let (n, d) = (a.rows(), a.cols());
    if y.len() != n || start.z.len() != n || start.direction.len() != d {
        return Err(invalid("complex GAMP inputs do not match the operator dimensions"));
    }
    if !(start.lambda_star.is_finite() && start.lambda_star > 0.0) {
        return Err(invalid("lambda* must be positive and finite"));
    }
    let delta = n as f64 / d as f64;
    let sd = delta.sqrt();
    let mu0 = complex_se_init(start.a2)?;
    let scale = (d as f64).sqrt() * start.a2.sqrt() / (1.0 - start.a2);
    let mut x: Vec<Complex64> = start.direction.iter().map(|v| v * scale).collect();
    let ax = a.apply_vec(&x);
    let mut u: Vec<Complex64> = ax
        .iter()
        .zip(start.z)
        .map(|(g, &z)| g * ((1.0 - z / start.lambda_star) / sd))
        .collect();
    let overlap = |x: &[Complex64]| truth.map(|t| phase_aligned_overlap(x, t)).transpose();

    let mut trace = ComplexGampTrace {
        overlaps: overlap(&x)?.into_iter().collect(),
        mu: vec![mu0],
        mu_hat_norm: vec![],
        mu_hat_quadratic: vec![],
        c: vec![],
        diffs: vec![],
        estimate: vec![],
        stop: StopReason::MaxIter,
    };
    for t in 0..config.max_iter {
        let mu = trace.mu[t];
        let h = ComplexHStar::from_mu(mu, delta)?;
        let (hv, dh): (Vec<Complex64>, Vec<f64>) =
            u.par_iter().zip(y.par_iter()).with_min_len(512).map(|(&ui, &yi)| h.eval(ui, yi)).unzip();
        let c = sd * dh.iter().sum::<f64>() / n as f64;
        let ath = a.apply_adjoint_vec(&hv);
        let x_next: Vec<Complex64> = ath.iter().zip(&x).map(|(p, q)| p - q * c).collect();
        let ax = a.apply_vec(&x_next);
        let u_next: Vec<Complex64> = ax.iter().zip(&hv).map(|(p, q)| (p - q) / sd).collect();
        if !(x_next.iter().chain(&u_next).all(|v| v.is_finite())) {
            trace.stop = StopReason::Diverged { step: t + 1 };
            break;
        }
        let mu_norm = delta * norm2(&hv) / n as f64;
        let mu_quad = positive_root(norm2(&x_next) / d as f64);
        let mu_next = match &config.mu_source {
            MuSource::Schedule(s) => *s.get(t + 1).or(s.last()).unwrap_or(&mu),
            MuSource::StateEvolution => complex_se_step(mu, delta, rule)?,
            MuSource::NormEstimate => mu_norm,
            MuSource::QuadraticEstimate => mu_quad,
        };
        let diff = normalized_diff(&x_next, &x);
        trace.c.push(c);
        trace.mu_hat_norm.push(mu_norm);
        trace.mu_hat_quadratic.push(mu_quad);
        trace.diffs.push(diff);
        trace.mu.push(mu_next);
        if let Some(o) = overlap(&x_next)? {
            trace.overlaps.push(o);
        }
        x = x_next;
        u = u_next;
        if diff < config.stop_tol {
            trace.stop = StopReason::Converged;
            break;
        }
        if !(mu_next > 0.0) {
            trace.stop = StopReason::Diverged { step: t + 1 };
            break;
        }
        if mu_next > COMPLEX_PERFECT_RECOVERY {
            trace.stop = StopReason::PerfectRecovery;
            break;
        }
    }
    trace.estimate = x;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_is_phase_invariant() {
        let mut rng = Rng::new(1);
        let x: Vec<Complex64> = (0..50).map(|_| Complex64::gaussian(&mut rng)).collect();
        let rot = Complex64::from_polar(1.0, 0.83);
        let xr: Vec<Complex64> = x.iter().map(|v| v * rot).collect();
        assert!((phase_aligned_overlap(&xr, &x).unwrap() - 1.0).abs() < 1e-14);
        assert!(phase_aligned_overlap(&vec![Complex64::new(0.0, 0.0); 50], &x).is_err());
    }

    #[test]
    fn quadratic_root() {
        for q in [1e-12, 0.3, 2.0, 1e8] {
            let m = positive_root(q);
            assert!((m * m + m - q).abs() <= 1e-12 * q.max(1.0));
        }
    }
}
