use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::models::Instance;
use crate::numerics::{LinearOperator, QuadratureRule};
use crate::se::{
    se_init, se_step, signal_moments, DenoiserSchedule, OutputDenoiser, SeState, SeStep, SignalDenoiser,
};

/// How the Onsager coefficients `b_t`, `c_t` are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnsagerMode {
    /// Empirical averages of denoiser derivatives (the algorithm proper).
    Empirical,
    /// State-evolution expectations (the modified algorithm used in the analysis).
    Deterministic,
}

#[derive(Clone, Copy, Debug)]
pub struct GampConfig {
    pub max_iter: usize,
    /// Stop once `||x^{t+1}/||x^{t+1}|| - x^t/||x^t|| ||^2 < stop_tol`.
    pub stop_tol: f64,
    /// Convex-combination weight of the new iterate, in `(0, 1]`.
    pub damping: f64,
    pub onsager: OnsagerMode,
    /// Number of leading iterates `x^0, x^1, ...` kept in the trace.
    pub keep_iterates: usize,
}

impl Default for GampConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            stop_tol: 1e-9,
            damping: 1.0,
            onsager: OnsagerMode::Empirical,
            keep_iterates: 0,
        }
    }
}

impl GampConfig {
    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(invalid("stop tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Spectral estimate and the quantities of its asymptotic description.
#[derive(Clone, Copy, Debug)]
pub struct SpectralStart<'a> {
    /// Unit-norm estimate with `<x_hat, x> >= 0`.
    pub direction: &'a [f64],
    /// Preprocessed observations `T_s(y_i)`.
    pub z: &'a [f64],
    pub lambda_star: f64,
    pub a2: f64,
}

#[derive(Clone, Debug)]
pub struct GampState {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

/// Onsager coefficients for one step; `None` means "use the empirical average".
#[derive(Clone, Copy, Debug, Default)]
pub struct Onsager {
    pub b_next: Option<f64>,
    pub c: Option<f64>,
}

fn eval_signal(f: &dyn SignalDenoiser, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = x.par_iter().with_min_len(512).map(|&v| f.eval(v)).collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

fn eval_output(h: &dyn OutputDenoiser, u: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = u
        .par_iter()
        .zip(y.par_iter())
        .with_min_len(512)
        .map(|(&a, &b)| h.eval(a, b))
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `x^0 = sqrt(d) x_hat / sqrt(delta)` and
/// `u^0 = A f_0(x^0) / sqrt(delta) - b_0 (sqrt(delta) / lambda_star) Z A x^0`.
///
/// `b0` overrides the empirical `(1/n) sum_i f_0'(x^0_i)`. Returns the state and
/// the coefficient used.
pub fn gamp_init_spectral(
    instance: &Instance,
    start: &SpectralStart<'_>,
    f0: &dyn SignalDenoiser,
    b0: Option<f64>,
) -> Result<(GampState, f64)> {
    let (n, d) = (instance.n(), instance.d());
    if start.direction.len() != d || start.z.len() != n {
        return Err(invalid("spectral start does not match the instance dimensions"));
    }
    let delta = instance.realized_delta();
    let sd = delta.sqrt();
    let scale = (d as f64).sqrt() / sd;
    let x: Vec<f64> = start.direction.iter().map(|v| v * scale).collect();
    let (fx, dfx) = eval_signal(f0, &x)?;
    let b = b0.unwrap_or_else(|| dfx.iter().sum::<f64>() / n as f64);
    let afx = instance.a.apply_vec(&fx);
    let ax = instance.a.apply_vec(&x);
    let coef = b * sd / start.lambda_star;
    let u = afx
        .iter()
        .zip(&ax)
        .zip(start.z)
        .map(|((&p, &q), &z)| p / sd - coef * z * q)
        .collect();
    Ok((GampState { t: 0, x, u }, b))
}

/// One iteration:
/// `x^{t+1} = A^T h_t(u^t; y) / sqrt(delta) - c_t f_t(x^t)` and
/// `u^{t+1} = A f_{t+1}(x^{t+1}) / sqrt(delta) - b_{t+1} h_t(u^t; y)`.
///
/// Returns the new state and the coefficients `(b_{t+1}, c_t)` that were used.
pub fn gamp_step(
    state: &GampState,
    instance: &Instance,
    f_t: &dyn SignalDenoiser,
    f_next: &dyn SignalDenoiser,
    h_t: &dyn OutputDenoiser,
    damping: f64,
    onsager: Onsager,
) -> Result<(GampState, f64, f64)> {
    let n = instance.n();
    let sd = instance.realized_delta().sqrt();
    let (hv, dh) = eval_output(h_t, &state.u, &instance.y)?;
    let c = onsager.c.unwrap_or_else(|| mean(&dh));
    let (fx, _) = eval_signal(f_t, &state.x)?;
    let ath = instance.a.apply_adjoint_vec(&hv);
    let mut x: Vec<f64> = ath.iter().zip(&fx).map(|(&p, &q)| p / sd - c * q).collect();
    if damping != 1.0 {
        x.iter_mut().zip(&state.x).for_each(|(v, &old)| *v = damping * *v + (1.0 - damping) * old);
    }
    let (fx1, dfx1) = eval_signal(f_next, &x)?;
    let b = onsager.b_next.unwrap_or_else(|| dfx1.iter().sum::<f64>() / n as f64);
    let afx = instance.a.apply_vec(&fx1);
    let mut u: Vec<f64> = afx.iter().zip(&hv).map(|(&p, &q)| p / sd - b * q).collect();
    if damping != 1.0 {
        u.iter_mut().zip(&state.u).for_each(|(v, &old)| *v = damping * *v + (1.0 - damping) * old);
    }
    Ok((GampState { t: state.t + 1, x, u }, b, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Normalized successive difference fell below `stop_tol`.
    Converged,
    /// State evolution reached perfect recovery; no further denoisers exist.
    PerfectRecovery,
    MaxIter,
    /// A non-finite value appeared at the recorded step.
    Diverged { step: usize },
}

#[derive(Clone, Debug)]
pub struct GampTrace {
    /// Normalized correlation `<x, x^t> / (||x|| ||x^t||)` for `t = 0..=T`.
    pub overlaps: Vec<f64>,
    /// Normalized correlation of the estimate `f_t(x^t)` with the signal.
    pub estimate_overlaps: Vec<f64>,
    /// `(1/d) sum_i x_i x^t_i`.
    pub mean_product: Vec<f64>,
    /// `(1/d) sum_i (x^t_i)^2`.
    pub mean_square: Vec<f64>,
    /// Normalized successive differences.
    pub diffs: Vec<f64>,
    /// Coefficients `b_t` (from `t = 0`) and `c_t` actually used.
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// State-evolution states for `t = 0..=T`.
    pub se_states: Vec<SeState>,
    pub se_steps: Vec<SeStep>,
    /// `x^0, x^1, ...` up to `keep_iterates`.
    pub iterates: Vec<Vec<f64>>,
    pub final_state: GampState,
    /// `f_T(x^T)`.
    pub estimate: Vec<f64>,
    pub stop: StopReason,
}

impl GampTrace {
    pub fn iterations(&self) -> usize {
        self.final_state.t
    }

    pub fn final_squared_overlap(&self) -> f64 {
        self.estimate_overlaps.last().map_or(0.0, |c| c * c)
    }

    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::Converged | StopReason::PerfectRecovery)
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (&p, &q) in a.iter().zip(b) {
        ab += p * q;
        aa += p * p;
        bb += q * q;
    }
    if aa > 0.0 && bb > 0.0 {
        ab / (aa * bb).sqrt()
    } else {
        0.0
    }
}

fn normalized_diff(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    a.iter().zip(b).map(|(&p, &q)| (p / na - q / nb).powi(2)).sum()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Runs GAMP from the spectral start with denoisers from `schedule`,
/// parameterized by the state evolution started at `(a/sqrt(delta), (1-a^2)/delta)`.
pub fn gamp_run(
    instance: &Instance,
    start: &SpectralStart<'_>,
    schedule: &dyn DenoiserSchedule,
    config: &GampConfig,
    rule: &QuadratureRule,
) -> Result<GampTrace> {
    config.validate()?;
    let delta = instance.realized_delta();
    let (prior, channel) = (instance.prior.as_ref(), instance.channel.as_ref());
    let d = instance.d() as f64;
    let se0 = se_init(start.a2, delta)?;
    let mut se_states = vec![se0];
    let mut se_steps: Vec<SeStep> = Vec::new();

    let mut f_t: Arc<dyn SignalDenoiser> = schedule.signal(0, se0.mu_x, se0.sig2_x)?;
    let b0 = match config.onsager {
        OnsagerMode::Empirical => None,
        OnsagerMode::Deterministic => {
            Some(signal_moments(prior, se0.mu_x, se0.sig2_x, f_t.as_ref(), rule)?.e_fprime / delta)
        }
    };
    let (mut state, b_init) = gamp_init_spectral(instance, start, f_t.as_ref(), b0)?;

    let mut trace = GampTrace {
        overlaps: vec![],
        estimate_overlaps: vec![],
        mean_product: vec![],
        mean_square: vec![],
        diffs: vec![],
        b: vec![b_init],
        c: vec![],
        se_states: vec![],
        se_steps: vec![],
        iterates: vec![],
        final_state: state.clone(),
        estimate: vec![],
        stop: StopReason::MaxIter,
    };
    let record = |trace: &mut GampTrace, state: &GampState, f: &dyn SignalDenoiser| -> Result<()> {
        let (fx, _) = eval_signal(f, &state.x)?;
        trace.overlaps.push(correlation(&instance.x, &state.x));
        trace.estimate_overlaps.push(correlation(&instance.x, &fx));
        trace.mean_product.push(instance.x.iter().zip(&state.x).map(|(a, b)| a * b).sum::<f64>() / d);
        trace.mean_square.push(state.x.iter().map(|v| v * v).sum::<f64>() / d);
        if trace.iterates.len() < config.keep_iterates {
            trace.iterates.push(state.x.clone());
        }
        trace.estimate = fx;
        Ok(())
    };
    record(&mut trace, &state, f_t.as_ref())?;

    for t in 0..config.max_iter {
        let cur = se_states[t];
        let step = match se_step(&cur, prior, channel, schedule, delta, rule) {
            Ok(s) => s,
            Err(Error::PerfectRecovery { .. }) => {
                trace.stop = StopReason::PerfectRecovery;
                break;
            }
            Err(e) => return Err(e),
        };
        let next = step.next;
        let h_t = schedule.output(t, step.mu_u, step.sig2_u)?;
        let f_next = schedule.signal(t + 1, next.mu_x, next.sig2_x)?;
        let onsager = match config.onsager {
            OnsagerMode::Empirical => Onsager::default(),
            OnsagerMode::Deterministic => Onsager {
                c: Some(step.c_bar()),
                b_next: Some(signal_moments(prior, next.mu_x, next.sig2_x, f_next.as_ref(), rule)?.e_fprime / delta),
            },
        };
        let (new_state, b, c) =
            gamp_step(&state, instance, f_t.as_ref(), f_next.as_ref(), h_t.as_ref(), config.damping, onsager)?;
        se_steps.push(step);
        se_states.push(next);
        if !(all_finite(&new_state.x) && all_finite(&new_state.u)) {
            trace.stop = StopReason::Diverged { step: t + 1 };
            break;
        }
        let diff = normalized_diff(&new_state.x, &state.x);
        trace.diffs.push(diff);
        trace.b.push(b);
        trace.c.push(c);
        state = new_state;
        f_t = f_next;
        record(&mut trace, &state, f_t.as_ref())?;
        if diff < config.stop_tol {
            trace.stop = StopReason::Converged;
            break;
        }
    }
    trace.se_states = se_states;
    trace.se_steps = se_steps;
    trace.final_state = state;
    Ok(trace)
}

/// `(1/n) sum_i psi(a_i, b_i)`.
pub fn empirical_pl2(a: &[f64], b: &[f64], psi: impl Fn(f64, f64) -> f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(invalid("empirical averages need equal non-empty vectors"));
    }
    Ok(a.iter().zip(b).map(|(&p, &q)| psi(p, q)).sum::<f64>() / a.len() as f64)
}
