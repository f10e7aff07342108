//! Signal denoisers `f_t` and output denoisers `h_t`, each with its derivative.

use std::sync::Arc;

use crate::error::Result;
use crate::models::{Channel, Prior};
use crate::numerics::QuadratureRule;

use super::bayes::{bayes_f_star, bayes_h_star};

/// `f_t: R -> R`.
pub trait SignalDenoiser: Send + Sync {
    /// `(f(x), f'(x))`.
    fn eval(&self, x: f64) -> Result<(f64, f64)>;
}

/// `h_t: R x R -> R`, differentiated in its first argument.
pub trait OutputDenoiser: Send + Sync {
    /// `(h(u; y), dh/du(u; y))`.
    fn eval(&self, u: f64, y: f64) -> Result<(f64, f64)>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl SignalDenoiser for Identity {
    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        Ok((x, 1.0))
    }
}

/// `f(x) = scale * x`.
#[derive(Clone, Copy, Debug)]
pub struct LinearSignal {
    pub scale: f64,
}

impl SignalDenoiser for LinearSignal {
    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        Ok((self.scale * x, self.scale))
    }
}

/// `h(u; y) = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroOutput;

impl OutputDenoiser for ZeroOutput {
    fn eval(&self, _u: f64, _y: f64) -> Result<(f64, f64)> {
        Ok((0.0, 0.0))
    }
}

/// Builds the denoisers used at iteration `t` from the state-evolution parameters.
pub trait DenoiserSchedule: Send + Sync {
    fn signal(&self, t: usize, mu_x: f64, sig2_x: f64) -> Result<Arc<dyn SignalDenoiser>>;
    fn output(&self, t: usize, mu_u: f64, sig2_u: f64) -> Result<Arc<dyn OutputDenoiser>>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SignalKind {
    Identity,
    /// Posterior mean `f*` for the prior.
    Bayes,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutputKind {
    /// `scale * h*`.
    Bayes { scale: f64 },
}

/// Identity or Bayes signal denoiser combined with a scaled Bayes output denoiser.
#[derive(Clone, Debug)]
pub struct StandardSchedule {
    pub prior: Arc<dyn Prior>,
    pub channel: Arc<dyn Channel>,
    pub signal: SignalKind,
    pub output: OutputKind,
    pub rule: Arc<QuadratureRule>,
}

impl StandardSchedule {
    /// `f = identity` or `f*`, and `h = sqrt(delta) h*`.
    pub fn new(
        prior: Arc<dyn Prior>,
        channel: Arc<dyn Channel>,
        signal: SignalKind,
        delta: f64,
        rule: Arc<QuadratureRule>,
    ) -> Self {
        Self {
            prior,
            channel,
            signal,
            output: OutputKind::Bayes { scale: delta.sqrt() },
            rule,
        }
    }
}

impl DenoiserSchedule for StandardSchedule {
    fn signal(&self, _t: usize, mu_x: f64, sig2_x: f64) -> Result<Arc<dyn SignalDenoiser>> {
        Ok(match self.signal {
            SignalKind::Identity => Arc::new(Identity),
            SignalKind::Bayes => Arc::new(bayes_f_star(self.prior.clone(), mu_x, sig2_x, self.rule.clone())?),
        })
    }

    fn output(&self, _t: usize, mu_u: f64, sig2_u: f64) -> Result<Arc<dyn OutputDenoiser>> {
        let OutputKind::Bayes { scale } = self.output;
        Ok(Arc::new(bayes_h_star(self.channel.clone(), mu_u, sig2_u)?.scaled(scale)))
    }
}
