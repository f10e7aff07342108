//! Monte-Carlo sweeps over the sampling ratio with theory columns.

use std::sync::Arc;

use rayon::prelude::*;

use crate::complex::image::{image_experiment, Image, ImageExperimentConfig};
use crate::complex::{
    complex_gamp_run, complex_overlap, complex_prediction, complex_se_init, complex_se_run, complex_t_bar,
    phase_aligned_overlap, sample_complex_gaussian, ComplexGampConfig, ComplexSeTrace, ComplexStart, MuSource,
    COMPLEX_DELTA_U,
};
use crate::error::{invalid, Error, Result};
use crate::gamp::{gamp_run, GampConfig, SpectralStart, StopReason};
use crate::models::instance::measurement_count;
use crate::models::{sample_instance, Channel, Preprocessing, Prior};
use crate::numerics::{gauss_hermite, QuadratureRule};
use crate::rng::Rng;
use crate::se::{overlap_from_se, se_fixed_point, se_init, DenoiserSchedule, SeOutcome, StandardSchedule};
use crate::spectral::{delta_u, optimal_t_bar, spectral_estimate, SpectralModel, SpectralOptions, SpectralPrediction};

use super::config::{ExperimentConfig, Preset};

/// Quadrature order used throughout the sweeps.
pub const SWEEP_RULE_ORDER: usize = 61;
/// Tolerance of the state-evolution fixed-point iteration.
const SE_TOL: f64 = 1e-9;
/// Cap on state-evolution steps when solving for the fixed point.
const SE_MAX_ITER: usize = 2000;

/// One line of a sweep: Monte-Carlo averages next to their asymptotic predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub spectral_mc_mean: f64,
    pub spectral_mc_std: f64,
    /// Predicted squared overlap of the spectral estimator (Gaussian sensing).
    pub spectral_theory: f64,
    /// `None` when no GAMP run completed (e.g. an uninformative start).
    pub gamp_mc_mean: Option<f64>,
    pub gamp_mc_std: Option<f64>,
    /// State-evolution fixed point; `None` where no recursion applies (coded diffraction).
    pub gamp_se: Option<f64>,
    pub iterations_mean: Option<f64>,
    /// Trials whose GAMP run finished without diverging.
    pub completed_trials: usize,
    pub failed_trials: usize,
}

#[derive(Clone, Copy, Debug)]
struct TrialOutcome {
    spectral: f64,
    /// `None` for a skipped or diverged GAMP run.
    gamp: Option<(f64, usize)>,
    failed: bool,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(delta: f64, spectral_theory: f64, gamp_se: Option<f64>, trials: &[TrialOutcome]) -> SweepRow {
    let spectral: Vec<f64> = trials.iter().map(|t| t.spectral).collect();
    let (spectral_mc_mean, spectral_mc_std) = mean_std(&spectral);
    let gamp: Vec<(f64, usize)> = trials.iter().filter_map(|t| t.gamp).collect();
    let (gamp_mc_mean, gamp_mc_std, iterations_mean) = if gamp.is_empty() {
        (None, None, None)
    } else {
        let overlaps: Vec<f64> = gamp.iter().map(|g| g.0).collect();
        let (m, s) = mean_std(&overlaps);
        let it = gamp.iter().map(|g| g.1 as f64).sum::<f64>() / gamp.len() as f64;
        (Some(m), Some(s), Some(it))
    };
    SweepRow {
        delta,
        spectral_mc_mean,
        spectral_mc_std,
        spectral_theory,
        gamp_mc_mean,
        gamp_mc_std,
        gamp_se,
        iterations_mean,
        completed_trials: gamp.len(),
        failed_trials: trials.iter().filter(|t| t.failed).count(),
    }
}

/// Preprocessing design point for real channels: `T-bar` for `delta`, or for
/// `1.1 delta_u` when `delta` is at or below the weak-recovery threshold.
pub fn real_design_delta(delta: f64, delta_u: f64) -> f64 {
    delta.max(1.1 * delta_u)
}

/// `T-bar` at the design point and the spectral prediction for a real channel.
pub fn real_spectral_setup(
    channel: Arc<dyn Channel>,
    delta: f64,
    rule: &QuadratureRule,
) -> Result<(Preprocessing, SpectralPrediction)> {
    let du = delta_u(channel.as_ref())?;
    let preproc = optimal_t_bar(channel.clone(), real_design_delta(delta, du), du)?;
    let prediction = SpectralModel::real(channel.as_ref(), &preproc, rule)?.solve(delta)?;
    Ok((preproc, prediction))
}

/// Complex `T-bar` at the design point and the Gaussian-sensing prediction.
pub fn complex_spectral_setup(delta: f64, rule: &QuadratureRule) -> Result<(Preprocessing, SpectralPrediction)> {
    let preproc = complex_t_bar(delta.max(1.1 * COMPLEX_DELTA_U))?;
    let prediction = complex_prediction(&preproc, delta, rule)?;
    Ok((preproc, prediction))
}

/// Final squared overlap of the complex state evolution from `a2`, with its trajectory.
pub fn complex_se_overlap(a2: f64, delta: f64, rule: &QuadratureRule, max_iter: usize) -> Result<(f64, ComplexSeTrace)> {
    let se = complex_se_run(complex_se_init(a2)?, delta, rule, max_iter, SE_TOL)?;
    let last = *se.mu.last().expect("trace holds mu_0");
    let overlap = if se.perfect_recovery { 1.0 } else { complex_overlap(last) };
    Ok((overlap, se))
}

/// Squared overlap of `f_T(X_T)` at the state-evolution fixed point started from `a2`.
pub fn real_se_overlap(
    prior: &dyn Prior,
    channel: &dyn Channel,
    schedule: &dyn DenoiserSchedule,
    a2: f64,
    delta: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let trace = se_fixed_point(se_init(a2, delta)?, prior, channel, schedule, delta, rule, SE_MAX_ITER, SE_TOL)?;
    if trace.outcome == SeOutcome::PerfectRecovery {
        return Ok(1.0);
    }
    let last = trace.last();
    let f = schedule.signal(last.t, last.mu_x, last.sig2_x)?;
    Ok(overlap_from_se(last, prior, f.as_ref(), rule)?.powi(2))
}

/// Everything a real-valued trial needs that does not depend on the seed.
struct RealSetting {
    prior: Arc<dyn Prior>,
    channel: Arc<dyn Channel>,
    preproc: Preprocessing,
    prediction: SpectralPrediction,
    schedule: StandardSchedule,
    gamp: GampConfig,
}

fn real_trial(s: &RealSetting, d: usize, delta: f64, rule: &QuadratureRule, mut rng: Rng) -> Result<TrialOutcome> {
    let instance = sample_instance(s.prior.clone(), s.channel.clone(), d, delta, &mut rng)?;
    let est = spectral_estimate(&instance, &s.preproc, SpectralOptions::default(), &mut rng)?;
    let c = crate::numerics::dot(&est.direction, &instance.x) / (d as f64).sqrt();
    let spectral = c * c;
    if !(s.prediction.a2 > 0.0 && s.prediction.a2 < 1.0) {
        return Ok(TrialOutcome { spectral, gamp: None, failed: false });
    }
    let z = s.preproc.apply_all(&instance.y);
    let start = SpectralStart {
        direction: &est.direction,
        z: &z,
        lambda_star: s.prediction.lambda_star,
        a2: s.prediction.a2,
    };
    match gamp_run(&instance, &start, &s.schedule, &s.gamp, rule) {
        Ok(tr) if !matches!(tr.stop, StopReason::Diverged { .. }) => Ok(TrialOutcome {
            spectral,
            gamp: Some((tr.final_squared_overlap(), tr.iterations())),
            failed: false,
        }),
        Ok(_) | Err(Error::Divergence { .. } | Error::Numeric(_) | Error::NonFinite { .. }) => {
            Ok(TrialOutcome { spectral, gamp: None, failed: true })
        }
        Err(e) => Err(e),
    }
}

fn trial_rng(root: &Rng, delta_index: usize, trial: usize) -> Rng {
    root.stream(((delta_index as u64) << 32) | trial as u64)
}

fn run_trials(
    config: &ExperimentConfig,
    delta_index: usize,
    f: impl Fn(Rng) -> Result<TrialOutcome> + Sync,
) -> Result<Vec<TrialOutcome>> {
    let root = Rng::new(config.seed);
    // Indexed collection keeps trial order, so the reduction below is order-independent.
    (0..config.n_trials)
        .into_par_iter()
        .map(|k| f(trial_rng(&root, delta_index, k)))
        .collect()
}

fn real_row(config: &ExperimentConfig, delta_index: usize, rule: &Arc<QuadratureRule>) -> Result<SweepRow> {
    let nominal = config.delta_grid[delta_index];
    let delta = measurement_count(config.d, nominal)? as f64 / config.d as f64;
    let prior = config.prior.build()?;
    let channel = config.channel.build()?;
    let (preproc, prediction) = real_spectral_setup(channel.clone(), delta, rule)?;
    let schedule = StandardSchedule::new(prior.clone(), channel.clone(), config.denoiser, delta, rule.clone());
    let gamp_se = if prediction.a2 > 0.0 && prediction.a2 < 1.0 {
        real_se_overlap(prior.as_ref(), channel.as_ref(), &schedule, prediction.a2, delta, rule)?
    } else {
        prediction.a2
    };
    let setting = RealSetting {
        prior,
        channel,
        preproc,
        prediction,
        schedule,
        gamp: GampConfig {
            max_iter: config.max_iter,
            stop_tol: config.stop_tol,
            damping: config.damping,
            ..Default::default()
        },
    };
    let trials = run_trials(config, delta_index, |rng| real_trial(&setting, config.d, nominal, rule, rng))?;
    Ok(aggregate(delta, prediction.a2, Some(gamp_se), &trials))
}

fn complex_row(config: &ExperimentConfig, delta_index: usize, rule: &QuadratureRule) -> Result<SweepRow> {
    let nominal = config.delta_grid[delta_index];
    let delta = measurement_count(config.d, nominal)? as f64 / config.d as f64;
    let (preproc, prediction) = complex_spectral_setup(delta, rule)?;
    let informative = prediction.a2 > 0.0 && prediction.a2 < 1.0;
    let (gamp_se, schedule) = if informative {
        let (overlap, se) = complex_se_overlap(prediction.a2, delta, rule, config.max_iter)?;
        (overlap, Some(Arc::<[f64]>::from(se.mu)))
    } else {
        (prediction.a2, None)
    };
    let gamp_config = ComplexGampConfig {
        max_iter: config.max_iter,
        stop_tol: config.stop_tol,
        mu_source: schedule.map_or(MuSource::StateEvolution, MuSource::Schedule),
    };
    let trials = run_trials(config, delta_index, |mut rng| {
        let instance = sample_complex_gaussian(config.d, nominal, &mut rng)?;
        let z = preproc.apply_all(&instance.y);
        let est = crate::spectral::spectral_estimate_op(
            &instance.a,
            &z,
            Some(&instance.x),
            SpectralOptions::default(),
            &mut rng,
        )?;
        let spectral = phase_aligned_overlap(&est.direction, &instance.x)?;
        if !informative {
            return Ok(TrialOutcome { spectral, gamp: None, failed: false });
        }
        let start = ComplexStart {
            direction: &est.direction,
            z: &z,
            lambda_star: prediction.lambda_star,
            a2: prediction.a2,
        };
        let tr = complex_gamp_run(&instance.a, &instance.y, Some(&instance.x), &start, &gamp_config, rule)?;
        Ok(match (tr.stop, tr.final_overlap()) {
            (StopReason::Diverged { .. }, _) | (_, None) => TrialOutcome { spectral, gamp: None, failed: true },
            (_, Some(o)) => TrialOutcome {
                spectral,
                gamp: Some((o, tr.iterations())),
                failed: false,
            },
        })
    })?;
    Ok(aggregate(delta, prediction.a2, Some(gamp_se), &trials))
}

fn cdp_row(config: &ExperimentConfig, image: &Image, delta_index: usize, rule: &QuadratureRule) -> Result<SweepRow> {
    let delta = config.delta_grid[delta_index];
    let d = image.width * image.height;
    let realized = measurement_count(d, delta)? as f64 / d as f64;
    let theory = complex_spectral_setup(realized, rule)?.1.a2;
    let trials = run_trials(config, delta_index, |mut rng| {
        let mut cfg = ImageExperimentConfig::new(delta, rng.next_u64());
        cfg.gamp.max_iter = config.max_iter;
        cfg.gamp.stop_tol = config.stop_tol;
        let r = image_experiment(image, &cfg, rule)?;
        let failed = r.channels.iter().any(|c| matches!(c.stop, Some(StopReason::Diverged { .. })));
        let ran = r.channels.iter().all(|c| c.gamp_overlap.is_some());
        let iterations = r.channels.iter().map(|c| c.iterations).max().unwrap_or(0);
        Ok(TrialOutcome {
            spectral: r.mean_spectral_overlap(),
            gamp: (ran && !failed).then(|| (r.mean_gamp_overlap(), iterations)),
            failed,
        })
    })?;
    Ok(aggregate(realized, theory, None, &trials))
}

/// Runs every trial of every grid point. Trials run on a pool of
/// `config.threads` workers; results are deterministic given the seed.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let rule = Arc::new(gauss_hermite(SWEEP_RULE_ORDER)?);
    let image = match (config.preset, &config.image) {
        (Preset::Cdp, Some(path)) => Some(Image::read(path)?),
        _ => None,
    };
    let work = || -> Result<Vec<SweepRow>> {
        (0..config.delta_grid.len())
            .map(|k| match config.preset {
                Preset::Fig1Gaussian | Preset::Fig2Binary | Preset::Custom => real_row(config, k, &rule),
                Preset::Fig5Complex => complex_row(config, k, &rule),
                Preset::Cdp => cdp_row(config, image.as_ref().expect("image loaded above"), k, &rule),
            })
            .collect()
    };
    match config.threads {
        None => work(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| invalid(format!("cannot build a pool of {t} threads: {e}")))?
            .install(work),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_statistics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn failed_trials_are_counted_not_averaged() {
        let t = |s, g: Option<f64>, failed| TrialOutcome { spectral: s, gamp: g.map(|o| (o, 10)), failed };
        let row = aggregate(2.0, 0.5, Some(0.8), &[t(0.4, Some(0.9), false), t(0.6, None, true), t(0.5, Some(0.7), false)]);
        assert_eq!((row.completed_trials, row.failed_trials), (2, 1));
        assert!((row.gamp_mc_mean.unwrap() - 0.8).abs() < 1e-15);
        assert!((row.spectral_mc_mean - 0.5).abs() < 1e-15);
        assert_eq!(row.iterations_mean, Some(10.0));
    }
}
