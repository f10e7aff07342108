//! The functions `phi`, `psi_delta`, `zeta_delta` and the overlap they predict.

use crate::error::{numeric, Error, Result};
use crate::models::{Channel, Preprocessing};
use crate::numerics::{find_root_monotone, minimize_convex, QuadratureRule};

use super::law::JointLaw;

/// Initial width of the search window above `tau`, and its cap after widening.
const WINDOW: f64 = 1e3;
const WINDOW_CAP: f64 = 1e6;
const ROOT_TOL: f64 = 1e-10;
/// `psi'` below this is treated as a vanishing eigen-gap.
const DEGENERATE_SLOPE: f64 = 1e-4;

/// Asymptotic description of the spectral estimator at one aspect ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPrediction {
    pub delta: f64,
    pub lambda_star: f64,
    pub lambda_bar: f64,
    /// `psi_delta'(lambda_star)` by central difference.
    pub psi_prime: f64,
    /// Limiting squared normalized correlation with the signal.
    pub a2: f64,
    pub informative: bool,
    /// Set when no interior crossing exists or the eigen-gap vanishes.
    pub boundary_warning: bool,
}

impl SpectralPrediction {
    pub fn a(&self) -> f64 {
        self.a2.sqrt()
    }
}

/// `phi` and `psi_delta` for one joint law of `(|G|^2, Z)`.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    law: JointLaw,
    tau: f64,
}

impl SpectralModel {
    /// Uses `tau = max(sup T_s, largest Z carried by the law)`.
    pub fn new(law: JointLaw, preproc_tau: f64) -> Self {
        let tau = preproc_tau.max(law.max_z());
        Self { law, tau }
    }

    pub fn real(channel: &dyn Channel, preproc: &Preprocessing, rule: &QuadratureRule) -> Result<Self> {
        Ok(Self::new(JointLaw::real(channel, preproc, rule)?, preproc.tau()))
    }

    pub fn complex_noiseless(preproc: &Preprocessing, rule: &QuadratureRule) -> Result<Self> {
        Ok(Self::new(JointLaw::complex_noiseless(preproc, rule)?, preproc.tau()))
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn law(&self) -> &JointLaw {
        &self.law
    }

    fn check(&self, lambda: f64) -> Result<()> {
        if lambda > self.tau {
            Ok(())
        } else {
            Err(Error::Domain {
                value: lambda,
                reason: format!("need lambda > tau = {}", self.tau),
            })
        }
    }

    /// `phi(lambda) = lambda E{Z G^2 / (lambda - Z)}`.
    pub fn phi(&self, lambda: f64) -> Result<f64> {
        self.check(lambda)?;
        Ok(lambda * self.law.expect(|g2, z| z * g2 / (lambda - z)))
    }

    /// `psi_delta(lambda) = lambda / delta + lambda E{Z / (lambda - Z)}`.
    pub fn psi(&self, lambda: f64, delta: f64) -> Result<f64> {
        self.check(lambda)?;
        Ok(lambda / delta + lambda * self.law.expect(|_, z| z / (lambda - z)))
    }

    pub fn phi_prime(&self, lambda: f64) -> Result<f64> {
        self.check(lambda)?;
        Ok(-self.law.expect(|g2, z| z * z * g2 / (lambda - z).powi(2)))
    }

    pub fn psi_prime(&self, lambda: f64, delta: f64) -> Result<f64> {
        self.check(lambda)?;
        Ok(1.0 / delta - self.law.expect(|_, z| z * z / (lambda - z).powi(2)))
    }

    /// Minimizer of `psi_delta` over `(tau, inf)`.
    pub fn lambda_bar(&self, delta: f64) -> Result<f64> {
        let lo = self.lower_end();
        let mut window = WINDOW;
        loop {
            let hi = self.tau + window;
            let m = minimize_convex(|l| self.psi(l, delta), lo, hi, ROOT_TOL)?;
            if hi - m > 1e-3 * window || window >= WINDOW_CAP {
                return Ok(m);
            }
            window *= 10.0;
        }
    }

    /// `zeta_delta(lambda) = psi_delta(max(lambda, lambda_bar))`.
    pub fn zeta(&self, lambda: f64, delta: f64, lambda_bar: f64) -> Result<f64> {
        self.check(lambda)?;
        self.psi(lambda.max(lambda_bar), delta)
    }

    fn lower_end(&self) -> f64 {
        self.tau + 1e-9 * self.tau.abs().max(1.0)
    }

    /// Solves `zeta_delta(lambda) = phi(lambda)` and evaluates the limiting overlap.
    pub fn solve(&self, delta: f64) -> Result<SpectralPrediction> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let lambda_bar = self.lambda_bar(delta)?;
        let gap = |l: f64| -> Result<f64> { Ok(self.zeta(l, delta, lambda_bar)? - self.phi(l)?) };
        let lo = self.lower_end();
        let uninformative = |lambda_star: f64| SpectralPrediction {
            delta,
            lambda_star,
            lambda_bar,
            psi_prime: 0.0,
            a2: 0.0,
            informative: false,
            boundary_warning: true,
        };
        if gap(lo)? >= 0.0 {
            // No crossing inside (tau, inf): the top eigenvector carries no
            // information about the signal.
            return Ok(uninformative(lo));
        }
        let mut window = WINDOW;
        let mut hi = self.tau + window;
        while gap(hi)? < 0.0 {
            if window >= WINDOW_CAP {
                return Err(Error::Assumption(format!(
                    "zeta - phi stays negative up to lambda = {hi}"
                )));
            }
            window *= 10.0;
            hi = self.tau + window;
        }
        let lambda_star = find_root_monotone(gap, lo, hi, ROOT_TOL)?;
        let psi_prime = self.central_difference(lambda_star, |l| self.psi(l, delta))?;
        if psi_prime.abs() < DEGENERATE_SLOPE || lambda_star <= lambda_bar {
            return Ok(SpectralPrediction {
                psi_prime,
                ..uninformative(lambda_star)
            });
        }
        let a2 = self.overlap_closed_form(lambda_star, delta)?;
        Ok(SpectralPrediction {
            delta,
            lambda_star,
            lambda_bar,
            psi_prime,
            a2,
            informative: a2 > 0.0,
            boundary_warning: false,
        })
    }

    /// Squared overlap from the explicit expectations
    /// `(1/delta - E{Z^2/(l-Z)^2}) / (1/delta + E{Z^2 (G^2-1)/(l-Z)^2})`.
    pub fn overlap_closed_form(&self, lambda_star: f64, delta: f64) -> Result<f64> {
        self.check(lambda_star)?;
        let num = 1.0 / delta - self.law.expect(|_, z| z * z / (lambda_star - z).powi(2));
        let den = 1.0 / delta + self.law.expect(|g2, z| z * z * (g2 - 1.0) / (lambda_star - z).powi(2));
        if !(den > 0.0) {
            return Err(numeric(format!("overlap denominator {den} is not positive")));
        }
        Ok((num / den).clamp(0.0, 1.0))
    }

    /// Squared overlap `psi'/(psi' - phi')` with both derivatives taken by
    /// central differences of `psi_delta` and `phi`.
    pub fn overlap_from_derivatives(&self, lambda_star: f64, delta: f64) -> Result<f64> {
        let dpsi = self.central_difference(lambda_star, |l| self.psi(l, delta))?;
        if dpsi <= 0.0 {
            return Ok(0.0);
        }
        let dphi = self.central_difference(lambda_star, |l| self.phi(l))?;
        let den = dpsi - dphi;
        if !(den > 0.0) {
            return Err(numeric(format!("overlap denominator {den} is not positive")));
        }
        Ok((dpsi / den).clamp(0.0, 1.0))
    }

    fn central_difference(&self, lambda: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        let h = (1e-5 * lambda.abs().max(1.0)).min(0.5 * (lambda - self.tau));
        Ok((f(lambda + h)? - f(lambda - h)?) / (2.0 * h))
    }
}
