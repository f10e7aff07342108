//! The scalar state-evolution recursion.

use std::sync::Arc;

use crate::error::{invalid, numeric, Error, Result};
use crate::models::{Channel, Prior};
use crate::numerics::{integrate_vec, AdaptiveOptions, QuadratureRule};

use super::denoisers::{DenoiserSchedule, OutputDenoiser, SignalDenoiser};

/// `sigma_X^2 / mu_X^2` below which the iterate is treated as exact.
const PERFECT_RECOVERY_RATIO: f64 = 1e-10;

/// Parameters of `X_t = mu_x X + sigma_x W`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeState {
    pub t: usize,
    pub mu_x: f64,
    pub sig2_x: f64,
}

/// State at `t = 0` for a spectral initialization with squared overlap `a2`.
pub fn se_init(a2: f64, delta: f64) -> Result<SeState> {
    if !(0.0..=1.0).contains(&a2) {
        return Err(invalid(format!("squared overlap must lie in [0, 1], got {a2}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(SeState {
        t: 0,
        mu_x: a2.sqrt() / delta.sqrt(),
        sig2_x: (1.0 - a2) / delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalMoments {
    pub e_xf: f64,
    pub e_f2: f64,
    pub e_fprime: f64,
}

/// `E{X f(X_t)}`, `E{f(X_t)^2}`, `E{f'(X_t)}` for `X_t = mu X + sigma W`.
pub fn signal_moments(
    prior: &dyn Prior,
    mu_x: f64,
    sig2_x: f64,
    f: &dyn SignalDenoiser,
    rule: &QuadratureRule,
) -> Result<SignalMoments> {
    if !(sig2_x >= 0.0) {
        return Err(invalid(format!("negative variance {sig2_x}")));
    }
    let sd = sig2_x.sqrt();
    let noise: Vec<(f64, f64)> = if sd > 0.0 { rule.iter().collect() } else { vec![(0.0, 1.0)] };
    let mut m = SignalMoments { e_xf: 0.0, e_f2: 0.0, e_fprime: 0.0 };
    for (x, px) in prior.atoms(rule) {
        for &(w, pw) in &noise {
            let s = mu_x * x + sd * w;
            let (v, dv) = f.eval(s)?;
            if !(v.is_finite() && dv.is_finite()) {
                return Err(Error::NonFinite { node: s, value: if v.is_finite() { dv } else { v } });
            }
            let p = px * pw;
            m.e_xf += p * x * v;
            m.e_f2 += p * v * v;
            m.e_fprime += p * dv;
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputMoments {
    pub e_gh: f64,
    pub e_h2: f64,
    pub e_hprime: f64,
}

/// `E{G h(U; Y)}`, `E{h(U; Y)^2}`, `E{h'(U; Y)}` for `U = mu_U G + sigma_U W`.
///
/// Integrates over `U` first and then over `G | U ~ N(rho U, 1 - rho mu_U)`.
/// When `mu_U >> sigma_U` the sign of `G` is ambiguous only for `|U|` within
/// about `sqrt(mu_U^2 + sigma_U^2) sigma_U / mu_U` of zero, so the outer
/// integral is adaptive with breakpoints on that scale.
pub fn output_moments(
    channel: &dyn Channel,
    mu_u: f64,
    sig2_u: f64,
    h: &dyn OutputDenoiser,
    rule: &QuadratureRule,
) -> Result<OutputMoments> {
    if !(sig2_u >= 0.0) {
        return Err(invalid(format!("negative variance {sig2_u}")));
    }
    let v = mu_u * mu_u + sig2_u;
    let (rho, s2) = if v > 0.0 { (mu_u / v, sig2_u / v) } else { (0.0, 1.0) };
    let (su, sg) = (v.sqrt(), s2.sqrt());
    let mut failure: Option<Error> = None;
    let mut inner = |w1: f64| -> [f64; 3] {
        let u = su * w1;
        let mut acc = [0.0; 3];
        for (w2, p2) in rule.iter() {
            let g = rho * u + sg * w2;
            for (y, p3) in channel.conditional_atoms(g, rule) {
                match h.eval(u, y) {
                    Ok((hv, dh)) if hv.is_finite() && dh.is_finite() => {
                        let p = p2 * p3;
                        acc[0] += p * g * hv;
                        acc[1] += p * hv * hv;
                        acc[2] += p * dh;
                    }
                    Ok((hv, dh)) => {
                        failure.get_or_insert(Error::NonFinite { node: u, value: if hv.is_finite() { dh } else { hv } });
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                    }
                }
            }
        }
        let w = (-0.5 * w1 * w1).exp() / (2.0 * std::f64::consts::PI).sqrt();
        [w * acc[0], w * acc[1], w * acc[2]]
    };
    let snr = if sig2_u > 0.0 { (mu_u.abs() / sig2_u.sqrt()).max(1.0) } else { 1.0 };
    let mut pts = vec![0.0];
    for k in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        pts.push(k / snr);
        pts.push(-k / snr);
    }
    let m = integrate_vec(
        &mut inner,
        -OUTER_RANGE,
        OUTER_RANGE,
        &pts,
        AdaptiveOptions { rel_tol: 1e-10, abs_tol: 1e-300, max_intervals: 400 },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(OutputMoments { e_gh: m[0], e_h2: m[1], e_hprime: m[2] })
}

/// Half-width, in standard deviations, of the outer integral over `U`.
const OUTER_RANGE: f64 = 9.0;

/// One application of the recursion, with the intermediate quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeStep {
    pub state: SeState,
    pub mu_u: f64,
    pub sig2_u: f64,
    pub signal: SignalMoments,
    pub output: OutputMoments,
    pub next: SeState,
}

impl SeStep {
    /// Deterministic Onsager coefficient `E{f'(X_t)} / delta` for the `u` update.
    pub fn b_bar(&self, delta: f64) -> f64 {
        self.signal.e_fprime / delta
    }

    /// Deterministic Onsager coefficient `E{h'(U_t; Y)}` for the `x` update.
    pub fn c_bar(&self) -> f64 {
        self.output.e_hprime
    }
}

fn check_state(state: &SeState) -> Result<()> {
    if !(state.mu_x.is_finite() && state.sig2_x.is_finite() && state.sig2_x >= 0.0) {
        return Err(numeric(format!("invalid state {state:?}")));
    }
    if state.mu_x == 0.0 && state.sig2_x == 0.0 {
        return Err(numeric(format!("degenerate state (0, 0) at step {}", state.t)));
    }
    if state.sig2_x <= PERFECT_RECOVERY_RATIO * state.mu_x * state.mu_x {
        return Err(Error::PerfectRecovery { step: state.t });
    }
    Ok(())
}

/// One step with a fixed signal denoiser and an output denoiser built from
/// `(mu_U, sigma_U^2)`.
pub fn se_step_with(
    state: &SeState,
    prior: &dyn Prior,
    channel: &dyn Channel,
    f: &dyn SignalDenoiser,
    h: impl FnOnce(f64, f64) -> Result<Arc<dyn OutputDenoiser>>,
    delta: f64,
    rule: &QuadratureRule,
) -> Result<SeStep> {
    check_state(state)?;
    let sig = signal_moments(prior, state.mu_x, state.sig2_x, f, rule)?;
    let sd = delta.sqrt();
    let mu_u = sig.e_xf / sd;
    let sig2_u = sig.e_f2 / delta - mu_u * mu_u;
    if sig2_u <= PERFECT_RECOVERY_RATIO * mu_u * mu_u {
        return Err(Error::PerfectRecovery { step: state.t });
    }
    let h = h(mu_u, sig2_u)?;
    let out = output_moments(channel, mu_u, sig2_u, h.as_ref(), rule)?;
    let next = SeState {
        t: state.t + 1,
        mu_x: sd * out.e_gh - out.e_hprime * sig.e_xf,
        sig2_x: out.e_h2,
    };
    Ok(SeStep {
        state: *state,
        mu_u,
        sig2_u,
        signal: sig,
        output: out,
        next,
    })
}

/// One step with denoisers taken from `schedule`.
pub fn se_step(
    state: &SeState,
    prior: &dyn Prior,
    channel: &dyn Channel,
    schedule: &dyn DenoiserSchedule,
    delta: f64,
    rule: &QuadratureRule,
) -> Result<SeStep> {
    check_state(state)?;
    let f = schedule.signal(state.t, state.mu_x, state.sig2_x)?;
    se_step_with(
        state,
        prior,
        channel,
        f.as_ref(),
        |mu_u, sig2_u| schedule.output(state.t, mu_u, sig2_u),
        delta,
        rule,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SeOutcome {
    Converged,
    /// `sigma_X^2 / mu_X^2` dropped below the perfect-recovery threshold.
    PerfectRecovery,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct SeTrace {
    /// States `t = 0, 1, ...`; the last one is the terminal state.
    pub states: Vec<SeState>,
    pub steps: Vec<SeStep>,
    pub outcome: SeOutcome,
}

impl SeTrace {
    pub fn last(&self) -> &SeState {
        self.states.last().expect("trace holds the initial state")
    }

    /// Squared normalized correlation `mu^2 / (mu^2 + sigma^2)` of the raw iterates.
    pub fn squared_correlations(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| s.mu_x * s.mu_x / (s.mu_x * s.mu_x + s.sig2_x))
            .collect()
    }
}

/// Iterates until successive states differ by less than `tol` in sup norm,
/// perfect recovery, or `max_iter` steps.
pub fn se_fixed_point(
    init: SeState,
    prior: &dyn Prior,
    channel: &dyn Channel,
    schedule: &dyn DenoiserSchedule,
    delta: f64,
    rule: &QuadratureRule,
    max_iter: usize,
    tol: f64,
) -> Result<SeTrace> {
    let mut states = vec![init];
    let mut steps = Vec::new();
    let mut outcome = SeOutcome::MaxIter;
    for _ in 0..max_iter {
        let cur = *states.last().expect("non-empty");
        let step = match se_step(&cur, prior, channel, schedule, delta, rule) {
            Ok(s) => s,
            Err(Error::PerfectRecovery { .. }) => {
                outcome = SeOutcome::PerfectRecovery;
                break;
            }
            Err(e) => return Err(e),
        };
        let next = step.next;
        steps.push(step);
        states.push(next);
        let diff = (next.mu_x - cur.mu_x).abs().max((next.sig2_x - cur.sig2_x).abs());
        if diff < tol {
            outcome = SeOutcome::Converged;
            break;
        }
    }
    Ok(SeTrace { states, steps, outcome })
}

/// `|E{X f(X_t)}| / sqrt(E{X^2} E{f(X_t)^2})`.
pub fn overlap_from_se(state: &SeState, prior: &dyn Prior, f: &dyn SignalDenoiser, rule: &QuadratureRule) -> Result<f64> {
    let m = signal_moments(prior, state.mu_x, state.sig2_x, f, rule)?;
    if !(m.e_f2 > 0.0) {
        return Err(numeric("overlap undefined: E{f(X_t)^2} = 0"));
    }
    let ex2: f64 = prior.atoms(rule).iter().map(|(x, p)| p * x * x).sum();
    Ok(m.e_xf.abs() / (m.e_f2 * ex2).sqrt())
}

/// `E{(X - f(X_t))^2}`.
pub fn mse_from_se(state: &SeState, prior: &dyn Prior, f: &dyn SignalDenoiser, rule: &QuadratureRule) -> Result<f64> {
    let m = signal_moments(prior, state.mu_x, state.sig2_x, f, rule)?;
    let ex2: f64 = prior.atoms(rule).iter().map(|(x, p)| p * x * x).sum();
    Ok(ex2 - 2.0 * m.e_xf + m.e_f2)
}
