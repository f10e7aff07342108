//! Posterior-mean output denoiser for noiseless complex phase retrieval `Y = |G|^2`.

use crate::error::{invalid, Result};
use crate::numerics::Complex64;

use super::bessel::bessel_ratio;

/// `h*(u; y) = (E{G | U = u, Y = y} - rho u) / s^2` with `G | U = u ~ CN(rho u, s^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexHStar {
    rho: f64,
    s2: f64,
}

/// Posterior mean and total variance `E|G - m|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPosterior {
    pub mean: Complex64,
    pub var: f64,
}

impl ComplexHStar {
    /// From `U = mu_u G + sigma_u W` with `G, W ~ CN(0, 1)`.
    pub fn new(mu_u: f64, sig2_u: f64) -> Result<Self> {
        if !(sig2_u > 0.0 && sig2_u.is_finite() && mu_u.is_finite()) {
            return Err(invalid(format!("output denoiser needs positive finite variance, got {sig2_u}")));
        }
        let v = mu_u * mu_u + sig2_u;
        Ok(Self {
            rho: mu_u / v,
            s2: sig2_u / v,
        })
    }

    /// Single-parameter form `mu_u = mu / sqrt(delta)`, `sigma_u^2 = mu / delta`.
    pub fn from_mu(mu: f64, delta: f64) -> Result<Self> {
        if !(mu > 0.0 && delta > 0.0) {
            return Err(invalid(format!("mu and delta must be positive, got {mu}, {delta}")));
        }
        Ok(Self {
            rho: delta.sqrt() / (mu + 1.0),
            s2: 1.0 / (mu + 1.0),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn s2(&self) -> f64 {
        self.s2
    }

    /// On `|G| = sqrt(y)` the posterior of the phase is von Mises with
    /// concentration `2 sqrt(y) rho |u| / s^2` around `arg u`.
    pub fn posterior(&self, u: Complex64, y: f64) -> ComplexPosterior {
        let y = y.max(0.0);
        let r = u.norm();
        if y == 0.0 {
            return ComplexPosterior { mean: Complex64::new(0.0, 0.0), var: 0.0 };
        }
        if r == 0.0 {
            return ComplexPosterior { mean: Complex64::new(0.0, 0.0), var: y };
        }
        let root = y.sqrt();
        let ratio = bessel_ratio(2.0 * root * self.rho * r / self.s2);
        ComplexPosterior {
            mean: u * (root * ratio / r),
            var: y * (1.0 - ratio * ratio),
        }
    }

    /// `(h*(u; y), dh*/du)`, where the Wirtinger derivative is real:
    /// `rho (Var{G | u, y} / s^2 - 1) / s^2`.
    pub fn eval(&self, u: Complex64, y: f64) -> (Complex64, f64) {
        let p = self.posterior(u, y);
        let h = (p.mean - u * self.rho) / self.s2;
        (h, self.rho * (p.var / self.s2 - 1.0) / self.s2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_points() {
        let h = ComplexHStar::new(0.7, 0.4).unwrap();
        let (v, _) = h.eval(Complex64::new(0.0, 0.0), 2.0);
        assert_eq!(v, Complex64::new(0.0, 0.0));
        let u = Complex64::new(0.3, -1.1);
        let (v, d) = h.eval(u, 0.0);
        assert!((v + u * h.rho() / h.s2()).norm() < 1e-15);
        assert!((d + h.rho() / h.s2()).abs() < 1e-15);
    }

    #[test]
    fn single_parameter_form_matches_general() {
        let (mu, delta) = (1.7, 2.5);
        let a = ComplexHStar::from_mu(mu, delta).unwrap();
        let b = ComplexHStar::new(mu / delta.sqrt(), mu / delta).unwrap();
        assert!((a.rho - b.rho).abs() < 1e-15 && (a.s2 - b.s2).abs() < 1e-15);
    }
}
