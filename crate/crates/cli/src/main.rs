use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use specamp::complex::image::{image_experiment, Image, ImageExperimentConfig};
use specamp::experiments::{
    artificial_check, complex_se_overlap, complex_spectral_setup, emit_csv, format_sig, parse_delta_grid,
    real_se_overlap, real_spectral_setup, run_sweep, selftest, write_csv, ChannelSpec, ExperimentConfig, Preset,
    SWEEP_RULE_ORDER,
};
use specamp::gamp::ArtificialConfig;
use specamp::numerics::gauss_hermite;
use specamp::se::StandardSchedule;
use specamp::spectral::{delta_u, SpectralModel};
use specamp::Rng;

#[derive(Parser)]
#[command(name = "specamp", version, about = "Spectral initialization and GAMP for phase retrieval")]
struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Table of the asymptotic spectral overlap over a grid of sampling ratios.
    Predict(PredictArgs),
    /// State-evolution fixed points started from the spectral prediction.
    Se(SeArgs),
    /// Monte-Carlo sweep of spectral and GAMP overlaps, written as CSV.
    Simulate(SweepArgs),
    /// Coded-diffraction recovery of a PPM/PGM image.
    Cdp(CdpArgs),
    /// Runs the two-phase artificial GAMP and reports its distance to the spectral estimate.
    ArtificialCheck(ArtificialArgs),
    /// Quick invariant suites; exits nonzero if any fails.
    Selftest,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Single sampling ratio.
    #[arg(long, conflicts_with = "delta_grid")]
    delta: Option<f64>,
    /// Grid `lo:hi:step`.
    #[arg(long)]
    delta_grid: Option<String>,
}

impl GridArgs {
    fn resolve(&self, default: &str) -> Result<Vec<f64>> {
        Ok(match (&self.delta, &self.delta_grid) {
            (Some(d), _) => vec![*d],
            (None, Some(g)) => parse_delta_grid(g)?,
            (None, None) => parse_delta_grid(default)?,
        })
    }
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// `pr`, `pr-noisy:sigma` or `pr-smoothed:eps`.
    #[arg(long, default_value = "pr")]
    channel: String,
    /// Noiseless complex phase retrieval instead of a real channel.
    #[arg(long)]
    complex: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SeArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// `fig5-complex` switches to the complex recursion; other presets set prior and denoiser.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    denoiser: Option<String>,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Key-value file (`key = value` per line, keys as the long flags); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    delta_grid: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV (default: standard output).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    damping: Option<String>,
    #[arg(long)]
    stop_tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    denoiser: Option<String>,
    /// Input image for the `cdp` preset.
    #[arg(long)]
    image: Option<String>,
}

impl SweepArgs {
    fn to_config(&self, threads: Option<usize>) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_kv_file(path)?,
            None => ExperimentConfig::preset(Preset::Fig1Gaussian),
        };
        let flags = [
            ("preset", &self.preset),
            ("d", &self.d),
            ("delta", &self.delta),
            ("delta-grid", &self.delta_grid),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("out", &self.out),
            ("damping", &self.damping),
            ("stop-tol", &self.stop_tol),
            ("max-iter", &self.max_iter),
            ("prior", &self.prior),
            ("channel", &self.channel),
            ("denoiser", &self.denoiser),
            ("image", &self.image),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{key}"))?;
            }
        }
        if threads.is_some() {
            cfg.threads = threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct CdpArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value_t = 2.4)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of masks (default: ceil(delta)).
    #[arg(long)]
    patterns: Option<usize>,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    stop_tol: f64,
    /// Reconstruction written as PPM/PGM.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ArtificialArgs {
    #[arg(long, default_value_t = 4000)]
    d: usize,
    #[arg(long, default_value_t = 4.0)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Weight of the signal in the phase-one start.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Phase-one length.
    #[arg(long, default_value_t = 40)]
    phase1: usize,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_table(path: &Option<PathBuf>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(output(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn predict(args: &PredictArgs) -> Result<()> {
    let rule = gauss_hermite(SWEEP_RULE_ORDER)?;
    let grid = args.grid.resolve("0.5:5:0.25")?;
    let mut rows = Vec::new();
    let du = if args.complex {
        specamp::complex::COMPLEX_DELTA_U
    } else {
        delta_u(args.channel.parse::<ChannelSpec>()?.build()?.as_ref())?
    };
    for &delta in &grid {
        let (preproc, p) = if args.complex {
            complex_spectral_setup(delta, &rule)?
        } else {
            real_spectral_setup(args.channel.parse::<ChannelSpec>()?.build()?, delta, &rule)?
        };
        let derivative_route = if p.informative && !p.boundary_warning {
            let model = if args.complex {
                SpectralModel::complex_noiseless(&preproc, &rule)?
            } else {
                SpectralModel::real(args.channel.parse::<ChannelSpec>()?.build()?.as_ref(), &preproc, &rule)?
            };
            format_sig(model.overlap_from_derivatives(p.lambda_star, delta)?)
        } else {
            String::new()
        };
        rows.push(vec![
            format_sig(delta),
            format_sig(du),
            format_sig(p.lambda_star),
            format_sig(p.lambda_bar),
            format_sig(p.a2),
            derivative_route,
            p.informative.to_string(),
        ]);
    }
    write_table(
        &args.out,
        &["delta", "delta_u", "lambda_star", "lambda_bar", "a2", "a2_derivative_route", "informative"],
        &rows,
    )
}

fn se(args: &SeArgs) -> Result<()> {
    let rule = Arc::new(gauss_hermite(SWEEP_RULE_ORDER)?);
    let mut cfg = ExperimentConfig::preset(match &args.preset {
        Some(p) => p.parse()?,
        None => Preset::Fig1Gaussian,
    });
    for (key, value) in [("prior", &args.prior), ("channel", &args.channel), ("denoiser", &args.denoiser)] {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    let grid = args.grid.resolve("1:5:0.5")?;
    let mut rows = Vec::new();
    for &delta in &grid {
        let (a2, overlap) = match cfg.preset {
            Preset::Fig5Complex | Preset::Cdp => {
                let (_, p) = complex_spectral_setup(delta, &rule)?;
                let o = if p.a2 > 0.0 && p.a2 < 1.0 {
                    complex_se_overlap(p.a2, delta, &rule, args.max_iter)?.0
                } else {
                    p.a2
                };
                (p.a2, o)
            }
            _ => {
                let prior = cfg.prior.build()?;
                let channel = cfg.channel.build()?;
                let (_, p) = real_spectral_setup(channel.clone(), delta, &rule)?;
                let schedule = StandardSchedule::new(prior.clone(), channel.clone(), cfg.denoiser, delta, rule.clone());
                let o = if p.a2 > 0.0 && p.a2 < 1.0 {
                    real_se_overlap(prior.as_ref(), channel.as_ref(), &schedule, p.a2, delta, &rule)?
                } else {
                    p.a2
                };
                (p.a2, o)
            }
        };
        rows.push(vec![format_sig(delta), format_sig(a2), format_sig(overlap)]);
    }
    write_table(&args.out, &["delta", "spectral_a2", "gamp_se"], &rows)
}

fn simulate(args: &SweepArgs, threads: Option<usize>) -> Result<()> {
    let cfg = args.to_config(threads)?;
    let rows = run_sweep(&cfg)?;
    match &cfg.output_path {
        Some(p) => emit_csv(&rows, p)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    let failed: usize = rows.iter().map(|r| r.failed_trials).sum();
    if failed > 0 {
        eprintln!("warning: {failed} trial(s) diverged; see the failed_trials column");
    }
    Ok(())
}

fn cdp(args: &CdpArgs) -> Result<()> {
    let rule = gauss_hermite(SWEEP_RULE_ORDER)?;
    let image = Image::read(&args.image).with_context(|| format!("cannot read {}", args.image.display()))?;
    let mut cfg = ImageExperimentConfig::new(args.delta, args.seed);
    cfg.patterns = args.patterns;
    cfg.gamp.max_iter = args.max_iter;
    cfg.gamp.stop_tol = args.stop_tol;
    let r = image_experiment(&image, &cfg, &rule)?;
    let mut out = std::io::stdout().lock();
    for (c, ch) in r.channels.iter().enumerate() {
        let gamp = ch.gamp_overlap.map(format_sig).unwrap_or_else(|| "-".into());
        let stop = ch.stop.map(|s| format!("{s:?}")).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "channel {c}: spectral {} gamp {gamp} iterations {} stop {stop}",
            format_sig(ch.spectral_overlap),
            ch.iterations
        )?;
    }
    writeln!(
        out,
        "mean: spectral {} gamp {}",
        format_sig(r.mean_spectral_overlap()),
        format_sig(r.mean_gamp_overlap())
    )?;
    if let Some(p) = &args.out {
        r.reconstruction.write(p).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}

fn artificial(args: &ArtificialArgs) -> Result<()> {
    let rule = Arc::new(gauss_hermite(SWEEP_RULE_ORDER)?);
    let config = ArtificialConfig {
        alpha: args.alpha,
        phase1_len: args.phase1,
        ..Default::default()
    };
    let root = Rng::new(args.seed);
    let mut rows = Vec::new();
    for k in 0..args.trials {
        let r = artificial_check(args.d, args.delta, &config, &rule, &mut root.stream(k as u64))?;
        rows.push(vec![
            k.to_string(),
            format_sig(r.prediction.a2),
            format_sig(r.se_error.0.max(r.se_error.1)),
            format_sig(r.trace.gap),
            format_sig(r.trace.direction_gap),
        ]);
    }
    write_table(&None, &["trial", "a2", "phase1_se_error", "gap", "direction_gap"], &rows)
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Predict(a) => predict(a)?,
        Command::Se(a) => se(a)?,
        Command::Simulate(a) => simulate(a, cli.threads)?,
        Command::Cdp(a) => cdp(a)?,
        Command::ArtificialCheck(a) => artificial(a)?,
        Command::Selftest => {
            let checks = selftest();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
