//! Sweep configuration, flag-style values and the key-value config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::models::{BinaryPrior, Channel, GaussianPrior, PhaseRetrieval, Prior};
use crate::se::SignalKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Gaussian prior, noiseless real phase retrieval, `f = identity`.
    Fig1Gaussian,
    /// Symmetric binary prior, noiseless real phase retrieval, `f = f*`.
    Fig2Binary,
    /// Complex Gaussian signal and sensing.
    Fig5Complex,
    /// Coded diffraction patterns on an image.
    Cdp,
    /// Real sensing with the prior, channel and denoiser given explicitly.
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Fig1Gaussian,
        Preset::Fig2Binary,
        Preset::Fig5Complex,
        Preset::Cdp,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1Gaussian => "fig1-gaussian",
            Preset::Fig2Binary => "fig2-binary",
            Preset::Fig5Complex => "fig5-complex",
            Preset::Cdp => "cdp",
            Preset::Custom => "custom",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown preset {s:?}")))
    }
}

/// `gaussian` or `binary:p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PriorSpec {
    Gaussian,
    Binary { p: f64 },
}

impl PriorSpec {
    pub fn build(self) -> Result<Arc<dyn Prior>> {
        Ok(match self {
            PriorSpec::Gaussian => Arc::new(GaussianPrior),
            PriorSpec::Binary { p } => Arc::new(BinaryPrior::new(p)?),
        })
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Gaussian => f.write_str("gaussian"),
            PriorSpec::Binary { p } => write!(f, "binary:{p}"),
        }
    }
}

fn split_param<'a>(s: &'a str, what: &str) -> Result<(&'a str, Option<f64>)> {
    match s.split_once(':') {
        None => Ok((s, None)),
        Some((head, v)) => {
            let v: f64 = v.parse().map_err(|_| invalid(format!("bad {what} parameter in {s:?}")))?;
            Ok((head, Some(v)))
        }
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match split_param(s, "prior")? {
            ("gaussian", None) => Ok(PriorSpec::Gaussian),
            ("binary", p) => {
                let p = p.unwrap_or(0.5);
                if !(p > 0.0 && p < 1.0) {
                    return Err(invalid(format!("binary prior needs p in (0, 1), got {p}")));
                }
                Ok(PriorSpec::Binary { p })
            }
            _ => Err(invalid(format!("unknown prior {s:?}; expected gaussian or binary:p"))),
        }
    }
}

/// `pr`, `pr-noisy:sigma` or `pr-smoothed:eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelSpec {
    Pr,
    PrNoisy { sigma: f64 },
    PrSmoothed { eps: f64 },
}

impl ChannelSpec {
    pub fn build(self) -> Result<Arc<dyn Channel>> {
        Ok(Arc::new(match self {
            ChannelSpec::Pr => PhaseRetrieval::Noiseless,
            ChannelSpec::PrNoisy { sigma } => PhaseRetrieval::noisy(sigma)?,
            ChannelSpec::PrSmoothed { eps } => PhaseRetrieval::smoothed(eps)?,
        }))
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelSpec::Pr => f.write_str("pr"),
            ChannelSpec::PrNoisy { sigma } => write!(f, "pr-noisy:{sigma}"),
            ChannelSpec::PrSmoothed { eps } => write!(f, "pr-smoothed:{eps}"),
        }
    }
}

impl FromStr for ChannelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let positive = |v: Option<f64>, name: &str| match v {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            _ => Err(invalid(format!("{name} needs a positive parameter, e.g. {name}:0.1"))),
        };
        match split_param(s, "channel")? {
            ("pr", None) => Ok(ChannelSpec::Pr),
            ("pr-noisy", v) => Ok(ChannelSpec::PrNoisy { sigma: positive(v, "pr-noisy")? }),
            ("pr-smoothed", v) => Ok(ChannelSpec::PrSmoothed { eps: positive(v, "pr-smoothed")? }),
            _ => Err(invalid(format!("unknown channel {s:?}; expected pr, pr-noisy:sigma or pr-smoothed:eps"))),
        }
    }
}

/// Parses `identity` or `bayes`.
pub fn parse_denoiser(s: &str) -> Result<SignalKind> {
    match s {
        "identity" => Ok(SignalKind::Identity),
        "bayes" => Ok(SignalKind::Bayes),
        _ => Err(invalid(format!("unknown denoiser {s:?}; expected identity or bayes"))),
    }
}

pub fn denoiser_name(kind: SignalKind) -> &'static str {
    match kind {
        SignalKind::Identity => "identity",
        SignalKind::Bayes => "bayes",
    }
}

/// `lo:hi:step`, inclusive of `hi` up to rounding.
pub fn parse_delta_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|_| invalid(format!("bad delta grid {s:?}; expected lo:hi:step")))?;
    let [lo, hi, step] = nums[..] else {
        return Err(invalid(format!("bad delta grid {s:?}; expected lo:hi:step")));
    };
    if !(lo > 0.0 && hi >= lo && step > 0.0 && hi.is_finite()) {
        return Err(invalid(format!("delta grid {s:?} needs 0 < lo <= hi and step > 0")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(invalid(format!("delta grid {s:?} has {count} points")));
    }
    // Round to 12 digits so that e.g. 0.1 steps print cleanly.
    Ok((0..count)
        .map(|k| {
            let v = lo + k as f64 * step;
            (v * 1e12).round() / 1e12
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub d: usize,
    pub delta_grid: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub prior: PriorSpec,
    pub channel: ChannelSpec,
    pub denoiser: SignalKind,
    pub damping: f64,
    pub stop_tol: f64,
    pub max_iter: usize,
    /// Input image for the `cdp` preset.
    pub image: Option<PathBuf>,
    /// Worker threads for trials; `None` uses the machine's parallelism.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Desk-scale defaults of a preset (`d = 2000`, 20 trials).
    pub fn preset(preset: Preset) -> Self {
        let grid = |s: &str| parse_delta_grid(s).expect("preset grid is valid");
        let base = Self {
            preset,
            d: 2000,
            delta_grid: grid("1:5:0.5"),
            n_trials: 20,
            seed: 0,
            output_path: None,
            prior: PriorSpec::Gaussian,
            channel: ChannelSpec::Pr,
            denoiser: SignalKind::Identity,
            damping: 1.0,
            stop_tol: 1e-9,
            max_iter: 200,
            image: None,
            threads: None,
        };
        match preset {
            Preset::Fig1Gaussian | Preset::Custom => base,
            Preset::Fig2Binary => Self {
                delta_grid: grid("1:4:0.5"),
                prior: PriorSpec::Binary { p: 0.5 },
                denoiser: SignalKind::Bayes,
                ..base
            },
            Preset::Fig5Complex => Self { delta_grid: grid("1.5:3.5:0.5"), ..base },
            Preset::Cdp => Self {
                delta_grid: grid("1.5:2.5:0.1"),
                n_trials: 5,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d must be positive"));
        }
        if self.n_trials == 0 {
            return Err(invalid("at least one trial is required"));
        }
        if self.delta_grid.is_empty() {
            return Err(invalid("delta grid is empty"));
        }
        if self.delta_grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(invalid("delta values must be positive and finite"));
        }
        if self.delta_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("delta grid must be strictly increasing"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(invalid("stop tolerance must be non-negative"));
        }
        if self.threads == Some(0) {
            return Err(invalid("thread count must be positive"));
        }
        if self.preset == Preset::Cdp && self.image.is_none() {
            return Err(invalid("the cdp preset needs an input image"));
        }
        Ok(())
    }

    /// Sets one field from its flag name (without leading dashes).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |what: &str| -> Result<f64> {
            value.parse().map_err(|_| invalid(format!("{what}: expected a number, got {value:?}")))
        };
        let int = |what: &str| -> Result<u64> {
            value.parse().map_err(|_| invalid(format!("{what}: expected an integer, got {value:?}")))
        };
        match key {
            "preset" => {
                // Switching preset resets to its defaults; later keys override.
                *self = Self { output_path: self.output_path.take(), ..Self::preset(value.parse()?) };
            }
            "d" => self.d = int(key)? as usize,
            "delta" => self.delta_grid = vec![num(key)?],
            "delta-grid" => self.delta_grid = parse_delta_grid(value)?,
            "deltas" => {
                self.delta_grid = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| invalid(format!("deltas: expected comma-separated numbers, got {value:?}")))?;
            }
            "trials" => self.n_trials = int(key)? as usize,
            "seed" => self.seed = int(key)?,
            "out" => self.output_path = Some(PathBuf::from(value)),
            "threads" => self.threads = Some(int(key)? as usize),
            "damping" => self.damping = num(key)?,
            "stop-tol" => self.stop_tol = num(key)?,
            "max-iter" => self.max_iter = int(key)? as usize,
            "prior" => self.prior = value.parse()?,
            "channel" => self.channel = value.parse()?,
            "denoiser" => self.denoiser = parse_denoiser(value)?,
            "image" => self.image = Some(PathBuf::from(value)),
            _ => return Err(invalid(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment. A `preset` line is
    /// applied first regardless of its position.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key = value", lineno + 1)))?;
            pairs.push((k.trim().to_owned(), v.trim().to_owned()));
        }
        pairs.sort_by_key(|(k, _)| k != "preset");
        for (k, v) in pairs {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn from_kv_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::preset(Preset::Fig1Gaussian);
        cfg.apply_kv(&text)?;
        Ok(cfg)
    }

    /// Renders the configuration in the key-value format.
    pub fn to_kv(&self) -> String {
        let grid: Vec<String> = self.delta_grid.iter().map(|v| v.to_string()).collect();
        let mut out = format!(
            "preset = {}\nd = {}\ntrials = {}\nseed = {}\nprior = {}\nchannel = {}\ndenoiser = {}\ndamping = {}\nstop-tol = {}\nmax-iter = {}\n",
            self.preset,
            self.d,
            self.n_trials,
            self.seed,
            self.prior,
            self.channel,
            denoiser_name(self.denoiser),
            self.damping,
            self.stop_tol,
            self.max_iter,
        );
        out.push_str(&format!("deltas = {}\n", grid.join(",")));
        if let Some(p) = &self.image {
            out.push_str(&format!("image = {}\n", p.display()));
        }
        if let Some(p) = &self.output_path {
            out.push_str(&format!("out = {}\n", p.display()));
        }
        out
    }
}
