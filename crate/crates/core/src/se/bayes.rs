//! Bayes-optimal denoisers `f*` and `h*`.

use std::sync::Arc;

use crate::error::{invalid, numeric, Result};
use crate::models::{Channel, Prior};
use crate::numerics::QuadratureRule;

use super::denoisers::{OutputDenoiser, SignalDenoiser};

/// `f*(s) = E{X | mu X + sigma W = s}`.
#[derive(Clone, Debug)]
pub struct BayesSignal {
    prior: Arc<dyn Prior>,
    mu: f64,
    sig2: f64,
    rule: Arc<QuadratureRule>,
}

pub fn bayes_f_star(prior: Arc<dyn Prior>, mu: f64, sig2: f64, rule: Arc<QuadratureRule>) -> Result<BayesSignal> {
    if !(sig2 > 0.0 && sig2.is_finite()) {
        return Err(invalid(format!("posterior-mean denoiser needs sigma^2 > 0, got {sig2}")));
    }
    if !mu.is_finite() {
        return Err(invalid("posterior-mean denoiser needs finite mu"));
    }
    Ok(BayesSignal { prior, mu, sig2, rule })
}

impl SignalDenoiser for BayesSignal {
    fn eval(&self, s: f64) -> Result<(f64, f64)> {
        let (mean, var) = self.prior.posterior(s, self.mu, self.sig2, &self.rule)?;
        // d/ds E{X | s} = (mu / sigma^2) Var{X | s}.
        Ok((mean, self.mu / self.sig2 * var))
    }
}

/// `scale * h*(u; y)` with `h*(u; y) = (E{G | U = u, Y = y} - rho u) / (1 - rho mu_U)`.
#[derive(Clone, Debug)]
pub struct BayesOutput {
    channel: Arc<dyn Channel>,
    rho: f64,
    s2: f64,
    scale: f64,
}

pub fn bayes_h_star(channel: Arc<dyn Channel>, mu_u: f64, sig2_u: f64) -> Result<BayesOutput> {
    let v = mu_u * mu_u + sig2_u;
    if !(v > 0.0 && v.is_finite() && sig2_u >= 0.0) {
        return Err(invalid(format!(
            "output denoiser needs mu_U^2 + sigma_U^2 > 0 (mu_U = {mu_u}, sigma_U^2 = {sig2_u})"
        )));
    }
    let rho = mu_u / v;
    // 1 - rho mu_U, written to avoid cancellation when sigma_U << mu_U.
    let s2 = sig2_u / v;
    if !(s2 > 0.0) {
        return Err(numeric(format!("conditional variance 1 - rho mu_U = {s2} is not positive")));
    }
    Ok(BayesOutput {
        channel,
        rho,
        s2,
        scale: 1.0,
    })
}

impl BayesOutput {
    pub fn scaled(mut self, scale: f64) -> Self {
        self.scale *= scale;
        self
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `Var{G | U}` under the state-evolution law.
    pub fn conditional_var(&self) -> f64 {
        self.s2
    }
}

impl OutputDenoiser for BayesOutput {
    fn eval(&self, u: f64, y: f64) -> Result<(f64, f64)> {
        let prior_mean = self.rho * u;
        let post = self.channel.posterior_g(y, prior_mean, self.s2)?;
        let h = (post.mean - prior_mean) / self.s2;
        // d/du E{G | u, y} = rho Var{G | u, y} / s^2.
        let dh = self.rho * (post.var / self.s2 - 1.0) / self.s2;
        Ok((self.scale * h, self.scale * dh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BinaryPrior, PhaseRetrieval};
    use crate::numerics::gauss_hermite;

    #[test]
    fn noiseless_h_star_special_values() {
        let h = bayes_h_star(Arc::new(PhaseRetrieval::Noiseless), 0.6, 0.3).unwrap();
        for y in [0.1, 1.0, 4.0] {
            assert_eq!(h.eval(0.0, y).unwrap().0, 0.0);
        }
        let (v, _) = h.eval(0.8, 0.0).unwrap();
        assert!((v + h.rho() * 0.8 / h.conditional_var()).abs() < 1e-14);
    }

    #[test]
    fn binary_f_star_limits() {
        let rule = Arc::new(gauss_hermite(61).unwrap());
        let f = bayes_f_star(Arc::new(BinaryPrior::new(0.5).unwrap()), 0.5, 0.25, rule).unwrap();
        assert_eq!(f.eval(0.0).unwrap().0, 0.0);
        assert!((f.eval(50.0).unwrap().0 - 1.0).abs() < 1e-12);
        assert!((f.eval(0.3).unwrap().0 - (0.3_f64 * 0.5 / 0.25).tanh()).abs() < 1e-14);
    }

    #[test]
    fn zero_variance_rejected() {
        let rule = Arc::new(gauss_hermite(5).unwrap());
        assert!(bayes_f_star(Arc::new(BinaryPrior::new(0.5).unwrap()), 1.0, 0.0, rule).is_err());
        assert!(bayes_h_star(Arc::new(PhaseRetrieval::Noiseless), 0.0, 0.0).is_err());
    }
}
