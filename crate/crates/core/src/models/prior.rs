//! Priors on the signal entries. All built-in priors have `E{X^2} = 1`.

use std::fmt::Debug;

use crate::error::{invalid, numeric, Result};
use crate::numerics::QuadratureRule;
use crate::rng::Rng;

/// Law of one signal coordinate.
pub trait Prior: Send + Sync + Debug {
    fn name(&self) -> String;

    fn sample(&self, rng: &mut Rng) -> f64;

    /// Discrete approximation `(value, probability)` of the law; exact for
    /// finitely supported priors, a quadrature rule otherwise.
    fn atoms(&self, rule: &QuadratureRule) -> Vec<(f64, f64)>;

    /// `E{X | mu X + sigma W = s}` and `Var{X | mu X + sigma W = s}` for
    /// `W ~ N(0, 1)` and `sigma^2 = sig2 > 0`.
    fn posterior(&self, s: f64, mu: f64, sig2: f64, rule: &QuadratureRule) -> Result<(f64, f64)> {
        discrete_posterior(&self.atoms(rule), s, mu, sig2)
    }
}

pub(crate) fn discrete_posterior(atoms: &[(f64, f64)], s: f64, mu: f64, sig2: f64) -> Result<(f64, f64)> {
    if !(sig2 > 0.0) {
        return Err(invalid("posterior needs positive noise variance"));
    }
    let logs: Vec<f64> = atoms
        .iter()
        .map(|&(x, p)| p.ln() - (s - mu * x).powi(2) / (2.0 * sig2))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(numeric("posterior weights vanished"));
    }
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (&(x, _), l) in atoms.iter().zip(&logs) {
        let w = (l - top).exp();
        z += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    let mean = m1 / z;
    Ok((mean, (m2 / z - mean * mean).max(0.0)))
}

/// `X ~ N(0, 1)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaussianPrior;

impl Prior for GaussianPrior {
    fn name(&self) -> String {
        "gaussian".into()
    }
    fn sample(&self, rng: &mut Rng) -> f64 {
        rng.normal()
    }
    fn atoms(&self, rule: &QuadratureRule) -> Vec<(f64, f64)> {
        rule.iter().collect()
    }
    fn posterior(&self, s: f64, mu: f64, sig2: f64, _rule: &QuadratureRule) -> Result<(f64, f64)> {
        if !(sig2 > 0.0) {
            return Err(invalid("posterior needs positive noise variance"));
        }
        let denom = mu * mu + sig2;
        Ok((mu * s / denom, sig2 / denom))
    }
}

/// `X = 1` with probability `p`, `X = -1` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinaryPrior {
    p: f64,
}

impl BinaryPrior {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("binary prior needs p in (0, 1), got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl Prior for BinaryPrior {
    fn name(&self) -> String {
        format!("binary:{}", self.p)
    }
    fn sample(&self, rng: &mut Rng) -> f64 {
        if rng.uniform() < self.p {
            1.0
        } else {
            -1.0
        }
    }
    fn atoms(&self, _rule: &QuadratureRule) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0 - self.p), (1.0, self.p)]
    }
    fn posterior(&self, s: f64, mu: f64, sig2: f64, _rule: &QuadratureRule) -> Result<(f64, f64)> {
        if !(sig2 > 0.0) {
            return Err(invalid("posterior needs positive noise variance"));
        }
        let m = (s * mu / sig2 + 0.5 * (self.p / (1.0 - self.p)).ln()).tanh();
        Ok((m, 1.0 - m * m))
    }
}

/// Finitely supported prior given by values and probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePrior {
    atoms: Vec<(f64, f64)>,
}

impl DiscretePrior {
    /// Probabilities are normalized; values are rescaled to unit second moment.
    pub fn new(values: &[f64], probs: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(invalid("discrete prior needs matching non-empty values and probabilities"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid("probabilities must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        let second: f64 = values.iter().zip(probs).map(|(v, p)| v * v * p).sum::<f64>() / total;
        if !(total > 0.0 && second > 0.0) {
            return Err(invalid("discrete prior is degenerate"));
        }
        let scale = second.sqrt().recip();
        Ok(Self {
            atoms: values.iter().zip(probs).map(|(v, p)| (v * scale, p / total)).collect(),
        })
    }
}

impl Prior for DiscretePrior {
    fn name(&self) -> String {
        "discrete".into()
    }
    fn sample(&self, rng: &mut Rng) -> f64 {
        let u = rng.uniform();
        let mut acc = 0.0;
        for &(x, p) in &self.atoms {
            acc += p;
            if u < acc {
                return x;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
    fn atoms(&self, _rule: &QuadratureRule) -> Vec<(f64, f64)> {
        self.atoms.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_hermite;

    #[test]
    fn binary_closed_form_matches_generic_posterior() {
        let rule = gauss_hermite(61).unwrap();
        let prior = BinaryPrior::new(0.3).unwrap();
        for s in [-2.0, -0.1, 0.0, 0.7, 3.0] {
            let (m, v) = prior.posterior(s, 0.8, 0.5, &rule).unwrap();
            let (mg, vg) = discrete_posterior(&prior.atoms(&rule), s, 0.8, 0.5).unwrap();
            assert!((m - mg).abs() < 1e-13 && (v - vg).abs() < 1e-13);
        }
    }

    #[test]
    fn gaussian_closed_form_matches_quadrature_posterior() {
        let rule = gauss_hermite(61).unwrap();
        for s in [-1.5, 0.2, 2.0] {
            let (m, v) = GaussianPrior.posterior(s, 0.6, 1.3, &rule).unwrap();
            let (mg, vg) = discrete_posterior(&GaussianPrior.atoms(&rule), s, 0.6, 1.3).unwrap();
            assert!((m - mg).abs() < 1e-10 && (v - vg).abs() < 1e-10);
        }
    }

    #[test]
    fn invalid_binary_rejected() {
        assert!(BinaryPrior::new(1.0).is_err());
        assert!(BinaryPrior::new(0.0).is_err());
    }
}
