//! Output channels `Y = q(G, W)` and the conditional moments they induce.

use std::f64::consts::PI;
use std::fmt::Debug;

use crate::error::{invalid, numeric, Error, Result};
use crate::numerics::{integrate_vec, AdaptiveOptions, QuadratureRule};
use crate::rng::Rng;

/// Posterior mean and variance of `G` given `Y = y` under a Gaussian prior on `G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorMoments {
    pub mean: f64,
    pub var: f64,
}

/// Moments `E{G^k p(y | G)}`, `k = 0, 1, 2`, stored as `value * exp(log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMoments {
    pub m: [f64; 3],
    pub log_scale: f64,
}

impl DensityMoments {
    pub fn unscaled(&self) -> [f64; 3] {
        let s = self.log_scale.exp();
        [self.m[0] * s, self.m[1] * s, self.m[2] * s]
    }
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -(x - mean).powi(2) / (2.0 * var) - 0.5 * (2.0 * PI * var).ln()
}

/// A scalar output channel.
pub trait Channel: Send + Sync + Debug {
    fn name(&self) -> String;

    /// Draws `Y` given `G = g`.
    fn sample(&self, g: f64, rng: &mut Rng) -> f64;

    /// Log of the conditional density `p(y | g)`; `None` for channels
    /// without a density (deterministic outputs).
    fn log_density(&self, y: f64, g: f64) -> Option<f64>;

    /// Discrete approximation `(y, weight)` of the law of `Y` given `G = g`.
    fn conditional_atoms(&self, g: f64, rule: &QuadratureRule) -> Vec<(f64, f64)>;

    /// Finite interval carrying all but a negligible part of the law of `Y`.
    fn y_domain(&self) -> (f64, f64);

    /// Points in `y` where the marginal density of `Y` varies sharply.
    fn y_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Points in `g` where `p(y | g)` varies sharply, for a fixed `y`.
    fn g_breakpoints(&self, _y: f64) -> Vec<f64> {
        Vec::new()
    }

    /// `true` when `p(y | g) = p(y | -g)` for all `y`, `g`.
    fn is_even(&self) -> bool {
        false
    }

    /// `E{G^k p(y | G)}` for `G ~ N(mean, var)`, `k = 0, 1, 2`.
    fn density_moments(&self, y: f64, mean: f64, var: f64) -> Result<DensityMoments> {
        generic_density_moments(self, y, mean, var)
    }

    /// Mean and variance of `G` given `Y = y` when `G ~ N(mean, var)`.
    fn posterior_g(&self, y: f64, mean: f64, var: f64) -> Result<PosteriorMoments> {
        let dm = self.density_moments(y, mean, var)?;
        let [m0, m1, m2] = dm.m;
        if !(m0 > 0.0) {
            return Err(numeric(format!("observation y = {y} has zero likelihood")));
        }
        let mu = m1 / m0;
        Ok(PosteriorMoments {
            mean: mu,
            var: (m2 / m0 - mu * mu).max(0.0),
        })
    }

    /// `E{p(y|G)} / E{G^2 p(y|G)}` for `G ~ N(0, 1)`; may be `+inf`.
    fn second_moment_ratio(&self, y: f64) -> Result<f64> {
        let dm = self.density_moments(y, 0.0, 1.0)?;
        let [m0, _, m2] = dm.m;
        if m2 > 0.0 {
            Ok(m0 / m2)
        } else if m0 > 0.0 {
            Ok(f64::INFINITY)
        } else {
            Err(numeric(format!("observation y = {y} has zero likelihood")))
        }
    }
}

fn generic_density_moments<C: Channel + ?Sized>(
    channel: &C,
    y: f64,
    mean: f64,
    var: f64,
) -> Result<DensityMoments> {
    if !(var > 0.0) {
        return Err(invalid("density moments need positive variance"));
    }
    if channel.log_density(y, mean).is_none() {
        return Err(invalid(format!(
            "channel {} has no density; override density_moments",
            channel.name()
        )));
    }
    let sd = var.sqrt();
    let mut pts = channel.g_breakpoints(y);
    pts.push(mean);
    // Cover both the Gaussian factor and the sharp features of the likelihood.
    let lo = pts.iter().copied().fold(mean - 12.0 * sd, f64::min);
    let hi = pts.iter().copied().fold(mean + 12.0 * sd, f64::max);
    let log_f = |g: f64| log_normal_pdf(g, mean, var) + channel.log_density(y, g).unwrap_or(f64::NEG_INFINITY);
    // Scale by the largest integrand value over a probe grid and the breakpoints.
    let mut log_scale = f64::NEG_INFINITY;
    for k in 0..=400 {
        log_scale = log_scale.max(log_f(lo + (hi - lo) * k as f64 / 400.0));
    }
    for &p in &pts {
        if p > lo && p < hi {
            log_scale = log_scale.max(log_f(p));
        }
    }
    if !log_scale.is_finite() {
        return Ok(DensityMoments { m: [0.0; 3], log_scale: 0.0 });
    }
    let m = integrate_vec(
        |g| {
            let w = (log_f(g) - log_scale).exp();
            [w, w * g, w * g * g]
        },
        lo,
        hi,
        &pts,
        AdaptiveOptions { rel_tol: 1e-10, ..Default::default() },
    )?;
    Ok(DensityMoments { m, log_scale })
}

/// Real phase retrieval `Y = G^2 + sigma W`, `W ~ N(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseRetrieval {
    Noiseless,
    Noisy { sigma: f64 },
    /// Noiseless retrieval regularized by a tiny Gaussian perturbation.
    Smoothed { eps: f64 },
}

impl PhaseRetrieval {
    pub const DEFAULT_SMOOTHING: f64 = 1e-3;

    pub fn noisy(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("noise level must be positive, got {sigma}")));
        }
        Ok(Self::Noisy { sigma })
    }

    pub fn smoothed(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("smoothing must be positive, got {eps}")));
        }
        Ok(Self::Smoothed { eps })
    }

    pub fn noise_sd(&self) -> f64 {
        match *self {
            Self::Noiseless => 0.0,
            Self::Noisy { sigma } => sigma,
            Self::Smoothed { eps } => eps,
        }
    }
}

/// Largest `|g|` accounted for when truncating the support of `Y`.
const MAX_G_NOISY: f64 = 6.0;
const MAX_G_NOISELESS: f64 = 12.0;

impl Channel for PhaseRetrieval {
    fn name(&self) -> String {
        match *self {
            Self::Noiseless => "noiseless-pr".into(),
            Self::Noisy { sigma } => format!("noisy-pr:{sigma}"),
            Self::Smoothed { eps } => format!("smoothed-pr:{eps}"),
        }
    }

    fn sample(&self, g: f64, rng: &mut Rng) -> f64 {
        match *self {
            Self::Noiseless => g * g,
            _ => g * g + self.noise_sd() * rng.normal(),
        }
    }

    fn log_density(&self, y: f64, g: f64) -> Option<f64> {
        let s = self.noise_sd();
        (s > 0.0).then(|| log_normal_pdf(y, g * g, s * s))
    }

    fn conditional_atoms(&self, g: f64, rule: &QuadratureRule) -> Vec<(f64, f64)> {
        match *self {
            Self::Noiseless => vec![(g * g, 1.0)],
            _ => {
                let s = self.noise_sd();
                rule.iter().map(|(w, p)| (g * g + s * w, p)).collect()
            }
        }
    }

    fn y_domain(&self) -> (f64, f64) {
        match *self {
            Self::Noiseless => (0.0, MAX_G_NOISELESS * MAX_G_NOISELESS),
            _ => {
                let s = self.noise_sd();
                (-8.0 * s, MAX_G_NOISY * MAX_G_NOISY + 8.0 * s)
            }
        }
    }

    fn y_breakpoints(&self) -> Vec<f64> {
        let s = self.noise_sd();
        if s == 0.0 {
            return Vec::new();
        }
        [-4.0, -1.0, 0.0, 1.0, 4.0, 16.0, 64.0].iter().map(|k| k * s).collect()
    }

    fn g_breakpoints(&self, y: f64) -> Vec<f64> {
        let s = self.noise_sd();
        if s == 0.0 {
            return Vec::new();
        }
        let mut pts = vec![0.0];
        // The likelihood concentrates near g = +-sqrt(y) with width s / (2 sqrt(y)),
        // or width sqrt(s) when y is within a few s of zero.
        let centre = y.max(0.0).sqrt();
        let width = if y > 4.0 * s { s / (2.0 * centre) } else { s.sqrt() };
        for k in [0.0, 1.0, 3.0, 8.0, 20.0, 50.0] {
            for sign in [-1.0, 1.0] {
                pts.push(sign * (centre + k * width));
                pts.push(sign * (centre - k * width));
            }
        }
        pts
    }

    fn is_even(&self) -> bool {
        true
    }

    fn density_moments(&self, y: f64, mean: f64, var: f64) -> Result<DensityMoments> {
        match *self {
            Self::Noiseless => {
                if !(var > 0.0) {
                    return Err(invalid("density moments need positive variance"));
                }
                if !(y > 0.0) {
                    return Err(Error::Domain {
                        value: y,
                        reason: "noiseless phase retrieval moments need y > 0".into(),
                    });
                }
                // p(y|g) = [delta(g - r) + delta(g + r)] / (2 r) with r = sqrt(y).
                let r = y.sqrt();
                let lp = log_normal_pdf(r, mean, var);
                let lm = log_normal_pdf(-r, mean, var);
                let top = lp.max(lm);
                let (wp, wm) = ((lp - top).exp(), (lm - top).exp());
                let c = 1.0 / (2.0 * r);
                Ok(DensityMoments {
                    m: [c * (wp + wm), c * r * (wp - wm), c * y * (wp + wm)],
                    log_scale: top,
                })
            }
            _ => generic_density_moments(self, y, mean, var),
        }
    }

    fn posterior_g(&self, y: f64, mean: f64, var: f64) -> Result<PosteriorMoments> {
        match *self {
            Self::Noiseless => {
                if !(var > 0.0) {
                    return Err(invalid("posterior needs positive variance"));
                }
                if y <= 0.0 {
                    return Ok(PosteriorMoments { mean: 0.0, var: 0.0 });
                }
                let r = y.sqrt();
                let t = (r * mean / var).tanh();
                Ok(PosteriorMoments {
                    mean: r * t,
                    var: y * (1.0 - t * t),
                })
            }
            _ => {
                let dm = self.density_moments(y, mean, var)?;
                let [m0, m1, m2] = dm.m;
                if !(m0 > 0.0) {
                    return Err(numeric(format!("observation y = {y} has zero likelihood")));
                }
                let mu = m1 / m0;
                Ok(PosteriorMoments {
                    mean: mu,
                    var: (m2 / m0 - mu * mu).max(0.0),
                })
            }
        }
    }

    fn second_moment_ratio(&self, y: f64) -> Result<f64> {
        match *self {
            Self::Noiseless => Ok(if y > 0.0 { 1.0 / y } else { f64::INFINITY }),
            _ => {
                let [m0, _, m2] = self.density_moments(y, 0.0, 1.0)?.m;
                if m2 > 0.0 {
                    Ok(m0 / m2)
                } else if m0 > 0.0 {
                    Ok(f64::INFINITY)
                } else {
                    Err(numeric(format!("observation y = {y} has zero likelihood")))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noisy_moments_approach_noiseless() {
        let exact = PhaseRetrieval::Noiseless;
        let noisy = PhaseRetrieval::smoothed(1e-5).unwrap();
        for (y, m, v) in [(0.3, 0.2, 0.7), (2.5, -1.0, 0.4), (9.0, 2.0, 1.5)] {
            let a = exact.posterior_g(y, m, v).unwrap();
            let b = noisy.posterior_g(y, m, v).unwrap();
            assert!((a.mean - b.mean).abs() < 1e-3, "{a:?} {b:?}");
            assert!((a.var - b.var).abs() < 1e-3, "{a:?} {b:?}");
        }
    }

    #[test]
    fn noisy_marginal_density_integrates_to_one() {
        let ch = PhaseRetrieval::noisy(0.3).unwrap();
        let (lo, hi) = ch.y_domain();
        let v = crate::numerics::integrate(
            |y| ch.density_moments(y, 0.0, 1.0).unwrap().unscaled()[0],
            lo,
            hi,
            &ch.y_breakpoints(),
            AdaptiveOptions { rel_tol: 1e-8, ..Default::default() },
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }
}
