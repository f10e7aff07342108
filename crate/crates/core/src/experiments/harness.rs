//! One run of the two-phase artificial GAMP on a fresh noiseless instance.

use std::sync::Arc;

use crate::error::Result;
use crate::gamp::{artificial_run, ArtificialConfig, ArtificialTrace, SpectralStart};
use crate::models::{sample_instance, Channel, GaussianPrior, PhaseRetrieval, Prior};
use crate::numerics::QuadratureRule;
use crate::rng::Rng;
use crate::se::{SignalKind, StandardSchedule};
use crate::spectral::{spectral_estimate, SpectralOptions, SpectralPrediction};

use super::sweep::real_spectral_setup;

#[derive(Clone, Debug)]
pub struct ArtificialReport {
    pub prediction: SpectralPrediction,
    /// Phase-one state-evolution limit `(a / sqrt(delta), (1 - a^2) / delta)`.
    pub target: (f64, f64),
    /// `|mu_T - a / sqrt(delta)|` and `|sigma_T^2 - (1 - a^2) / delta|`.
    pub se_error: (f64, f64),
    pub trace: ArtificialTrace,
}

/// Gaussian prior, noiseless phase retrieval, `T-bar`, `f = identity`.
pub fn artificial_check(
    d: usize,
    delta: f64,
    config: &ArtificialConfig,
    rule: &Arc<QuadratureRule>,
    rng: &mut Rng,
) -> Result<ArtificialReport> {
    let prior: Arc<dyn Prior> = Arc::new(GaussianPrior);
    let channel: Arc<dyn Channel> = Arc::new(PhaseRetrieval::Noiseless);
    let instance = sample_instance(prior.clone(), channel.clone(), d, delta, rng)?;
    let delta = instance.realized_delta();
    let (preproc, prediction) = real_spectral_setup(channel.clone(), delta, rule)?;
    let est = spectral_estimate(&instance, &preproc, SpectralOptions::default(), rng)?;
    let z = preproc.apply_all(&instance.y);
    let start = SpectralStart {
        direction: &est.direction,
        z: &z,
        lambda_star: prediction.lambda_star,
        a2: prediction.a2,
    };
    let schedule = StandardSchedule::new(prior, channel, SignalKind::Identity, delta, rule.clone());
    let trace = artificial_run(&instance, &preproc, &start, &schedule, config, rule, rng)?;
    let target = (prediction.a() / delta.sqrt(), (1.0 - prediction.a2) / delta);
    let last = trace.phase1_se.last().expect("phase one has at least one state");
    Ok(ArtificialReport {
        prediction,
        target,
        se_error: ((last.mu_x - target.0).abs(), (last.sig2_x - target.1).abs()),
        trace,
    })
}
