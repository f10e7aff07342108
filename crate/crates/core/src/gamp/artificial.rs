//! Two-phase artificial GAMP: a first phase that converges to the spectral
//! estimator from an initialization correlated with the signal, followed by a
//! second phase that reuses the denoisers of the true GAMP.
//!
//! The construction needs the ground-truth signal and exists to validate the
//! spectral initialization, not to estimate anything.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::models::{Instance, Preprocessing};
use crate::numerics::{LinearOperator, QuadratureRule};
use crate::rng::Rng;
use crate::se::{se_init, se_step, DenoiserSchedule, LinearSignal, OutputDenoiser, SeState, SignalDenoiser};
use crate::spectral::JointLaw;

use super::run::{gamp_step, GampState, Onsager, SpectralStart};

#[derive(Clone, Copy, Debug)]
pub struct ArtificialConfig {
    /// Correlation of the initialization with the signal, in `(0, 1)`.
    pub alpha: f64,
    /// Number of first-phase iterations `T`.
    pub phase1_len: usize,
    /// Number of second-phase iterations.
    pub phase2_len: usize,
}

impl Default for ArtificialConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            phase1_len: 40,
            phase2_len: 3,
        }
    }
}

/// First-phase state-evolution parameters with `beta_t = sqrt(mu^2 + sigma^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phase1State {
    pub t: usize,
    pub mu_x: f64,
    pub sig2_x: f64,
    pub beta: f64,
}

/// First-phase state evolution started from `(alpha, 1 - alpha^2)`:
/// `mu_{t+1} = mu_t / (sqrt(delta) beta_t)` and
/// `sig2_{t+1} = E{Z^2 (G^2 mu_t^2 + sig2_t) / (lambda* - Z)^2} / beta_t^2`.
pub fn phase1_se(law: &JointLaw, lambda_star: f64, delta: f64, alpha: f64, steps: usize) -> Result<Vec<Phase1State>> {
    check_alpha(alpha)?;
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    if !(lambda_star > law.max_z()) {
        return Err(Error::Domain {
            value: lambda_star,
            reason: "lambda* must exceed every value of the preprocessed law".into(),
        });
    }
    let r = |z: f64| z / (lambda_star - z);
    let e_g2 = law.expect(|g2, z| r(z).powi(2) * g2);
    let e_1 = law.expect(|_, z| r(z).powi(2));
    let mut states = vec![Phase1State {
        t: 0,
        mu_x: alpha,
        sig2_x: 1.0 - alpha * alpha,
        beta: 1.0,
    }];
    for t in 0..steps {
        let s = states[t];
        let mu_x = s.mu_x / (delta.sqrt() * s.beta);
        let sig2_x = (e_g2 * s.mu_x * s.mu_x + e_1 * s.sig2_x) / (s.beta * s.beta);
        states.push(Phase1State {
            t: t + 1,
            mu_x,
            sig2_x,
            beta: (mu_x * mu_x + sig2_x).sqrt(),
        });
    }
    Ok(states)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `h(u; y) = sqrt(delta) u T(y) / (lambda* - T(y))`.
#[derive(Clone)]
pub struct Phase1Output {
    preproc: Preprocessing,
    lambda_star: f64,
    scale: f64,
}

impl OutputDenoiser for Phase1Output {
    fn eval(&self, u: f64, y: f64) -> Result<(f64, f64)> {
        let z = self.preproc.apply(y);
        if !(self.lambda_star > z) {
            return Err(Error::Domain {
                value: self.lambda_star,
                reason: "lambda* must exceed the preprocessed observation".into(),
            });
        }
        let slope = self.scale * z / (self.lambda_star - z);
        Ok((slope * u, slope))
    }
}

/// First-phase denoisers `f(x) = x / beta` and
/// `h(u; y) = sqrt(delta) u T(y) / (lambda* - T(y))`.
pub fn phase1_functions(
    beta: f64,
    lambda_star: f64,
    delta: f64,
    preproc: &Preprocessing,
) -> Result<(LinearSignal, Phase1Output)> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    if !(lambda_star > preproc.tau()) {
        return Err(Error::Domain {
            value: lambda_star,
            reason: "lambda* must exceed the supremum of the preprocessing".into(),
        });
    }
    Ok((
        LinearSignal { scale: 1.0 / beta },
        Phase1Output {
            preproc: preproc.clone(),
            lambda_star,
            scale: delta.sqrt(),
        },
    ))
}

/// `x~0 = alpha x + sqrt(1 - alpha^2) n` with fresh noise `n`, and
/// `u~0 = A f0(x~0) / sqrt(delta)`.
pub fn artificial_init(instance: &Instance, alpha: f64, f0: &dyn SignalDenoiser, rng: &mut Rng) -> Result<GampState> {
    check_alpha(alpha)?;
    let c = (1.0 - alpha * alpha).sqrt();
    let x: Vec<f64> = instance.x.iter().map(|&v| alpha * v + c * rng.normal()).collect();
    let fx = x.iter().map(|&v| f0.eval(v).map(|p| p.0)).collect::<Result<Vec<_>>>()?;
    let sd = instance.realized_delta().sqrt();
    let u = instance.a.apply_vec(&fx).into_iter().map(|v| v / sd).collect();
    Ok(GampState { t: 0, x, u })
}

#[derive(Clone, Debug)]
pub struct ArtificialTrace {
    pub phase1_se: Vec<Phase1State>,
    /// `||x~^{t+1} - x~^t||^2 / d` for every iteration.
    pub diffs: Vec<f64>,
    /// `||sqrt(d) x_hat - sqrt(delta) x~^T||^2 / d`.
    pub gap: f64,
    /// `1 - cos^2(x_hat, x~^T)`: the gap after the best rescaling of `x~^T`.
    pub direction_gap: f64,
    /// `x~^T, x~^{T+1}, ...`.
    pub phase2_iterates: Vec<Vec<f64>>,
    /// True-GAMP state evolution used to parameterize the second phase.
    pub phase2_se: Vec<SeState>,
    pub c: Vec<f64>,
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / a.len() as f64
}

/// Runs both phases of the artificial GAMP on `instance`.
///
/// `start` carries the independently computed spectral estimate. The second
/// phase uses the denoisers of `schedule` evaluated along the true state
/// evolution from `(a/sqrt(delta), (1 - a^2)/delta)`.
#[allow(clippy::too_many_arguments)]
pub fn artificial_run(
    instance: &Instance,
    preproc: &Preprocessing,
    start: &SpectralStart<'_>,
    schedule: &dyn DenoiserSchedule,
    config: &ArtificialConfig,
    rule: &QuadratureRule,
    rng: &mut Rng,
) -> Result<ArtificialTrace> {
    if config.phase1_len == 0 {
        return Err(invalid("the first phase needs at least one iteration"));
    }
    let delta = instance.realized_delta();
    let d = instance.d();
    let law = JointLaw::real(instance.channel.as_ref(), preproc, rule)?;
    let phase1 = phase1_se(&law, start.lambda_star, delta, config.alpha, config.phase1_len)?;

    let mut se_states = vec![se_init(start.a2, delta)?];
    let (prior, channel) = (instance.prior.as_ref(), instance.channel.as_ref());
    let f_true0 = schedule.signal(0, se_states[0].mu_x, se_states[0].sig2_x)?;

    let (mut f_t, _) = phase1_functions(phase1[0].beta, start.lambda_star, delta, preproc)?;
    let mut state = artificial_init(instance, config.alpha, &f_t, rng)?;
    let mut diffs = Vec::new();
    let mut c = Vec::new();
    for t in 0..config.phase1_len {
        let (_, h_t) = phase1_functions(phase1[t].beta, start.lambda_star, delta, preproc)?;
        let next: Arc<dyn SignalDenoiser> = if t + 1 < config.phase1_len {
            Arc::new(phase1_functions(phase1[t + 1].beta, start.lambda_star, delta, preproc)?.0)
        } else {
            f_true0.clone()
        };
        let (new_state, _, ct) = gamp_step(&state, instance, &f_t, next.as_ref(), &h_t, 1.0, Onsager::default())?;
        diffs.push(mean_sq_diff(&new_state.x, &state.x));
        c.push(ct);
        state = new_state;
        if t + 1 < config.phase1_len {
            f_t = phase1_functions(phase1[t + 1].beta, start.lambda_star, delta, preproc)?.0;
        }
    }
    let scale = (d as f64).sqrt();
    let sd = delta.sqrt();
    let gap = start
        .direction
        .iter()
        .zip(&state.x)
        .map(|(&p, &q)| (scale * p - sd * q).powi(2))
        .sum::<f64>()
        / d as f64;
    let dot: f64 = start.direction.iter().zip(&state.x).map(|(p, q)| p * q).sum();
    let norm2: f64 = state.x.iter().map(|v| v * v).sum();
    let direction_gap = if norm2 > 0.0 { 1.0 - dot * dot / norm2 } else { 1.0 };

    let mut phase2_iterates = vec![state.x.clone()];
    let mut f_cur = f_true0;
    for k in 0..config.phase2_len {
        let step = se_step(&se_states[k], prior, channel, schedule, delta, rule)?;
        let h = schedule.output(k, step.mu_u, step.sig2_u)?;
        let f_next = schedule.signal(k + 1, step.next.mu_x, step.next.sig2_x)?;
        let (new_state, _, ct) =
            gamp_step(&state, instance, f_cur.as_ref(), f_next.as_ref(), h.as_ref(), 1.0, Onsager::default())?;
        if !new_state.x.iter().chain(&new_state.u).all(|v| v.is_finite()) {
            return Err(Error::Divergence { step: config.phase1_len + k + 1 });
        }
        diffs.push(mean_sq_diff(&new_state.x, &state.x));
        c.push(ct);
        se_states.push(step.next);
        phase2_iterates.push(new_state.x.clone());
        state = new_state;
        f_cur = f_next;
    }
    Ok(ArtificialTrace {
        phase1_se: phase1,
        diffs,
        gap,
        direction_gap,
        phase2_iterates,
        phase2_se: se_states,
        c,
    })
}
