//! Discretized joint law of `(|G|^2, Z)` with `Z = T_s(Y)`.

use crate::error::{numeric, Result};
use crate::models::{Channel, Preprocessing};
use crate::numerics::QuadratureRule;

/// Weighted atoms `(g2, z)`; weights sum to one.
#[derive(Clone, Debug)]
pub struct JointLaw {
    pub g2: Vec<f64>,
    pub z: Vec<f64>,
    pub weight: Vec<f64>,
}

impl JointLaw {
    /// Real model: `G ~ N(0, 1)` on the nodes of `rule`, `Y | G` from the channel.
    pub fn real(channel: &dyn Channel, preproc: &Preprocessing, rule: &QuadratureRule) -> Result<Self> {
        let mut law = JointLaw { g2: vec![], z: vec![], weight: vec![] };
        for (g, wg) in rule.iter() {
            for (y, wy) in channel.conditional_atoms(g, rule) {
                law.push(g * g, preproc.apply(y), wg * wy)?;
            }
        }
        Ok(law)
    }

    /// Complex noiseless phase retrieval: `G ~ CN(0, 1)`, `Y = |G|^2`.
    pub fn complex_noiseless(preproc: &Preprocessing, rule: &QuadratureRule) -> Result<Self> {
        let mut law = JointLaw { g2: vec![], z: vec![], weight: vec![] };
        for (g1, w1) in rule.iter() {
            for (g2, w2) in rule.iter() {
                let y = 0.5 * (g1 * g1 + g2 * g2);
                law.push(y, preproc.apply(y), w1 * w2)?;
            }
        }
        Ok(law)
    }

    fn push(&mut self, g2: f64, z: f64, w: f64) -> Result<()> {
        if !z.is_finite() {
            return Err(numeric(format!("preprocessing is not finite at |g|^2 = {g2}")));
        }
        self.g2.push(g2);
        self.z.push(z);
        self.weight.push(w);
        Ok(())
    }

    pub fn max_z(&self) -> f64 {
        self.z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `E{f(|G|^2, Z)}`.
    pub fn expect(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.g2
            .iter()
            .zip(&self.z)
            .zip(&self.weight)
            .map(|((&g2, &z), &w)| w * f(g2, z))
            .sum()
    }
}
