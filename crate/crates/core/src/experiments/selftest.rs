//! Fast invariant checks run by the `selftest` subcommand.

use std::sync::Arc;

use crate::complex::{phase_aligned_overlap, CdpOperator, ComplexHStar};
use crate::error::Result;
use crate::models::{BinaryPrior, PhaseRetrieval};
use crate::numerics::lanczos::symmetric_eigen;
use crate::numerics::{
    adjoint_mismatch, gauss_hermite, power_method, Complex64, DenseMatrix, LinearOperator, PowerOptions, Scalar,
};
use crate::rng::Rng;
use crate::se::{bayes_f_star, bayes_h_star, OutputDenoiser, SignalDenoiser};

use super::config::{ExperimentConfig, Preset};
use super::csv_io::write_csv;
use super::sweep::run_sweep;

#[derive(Clone, Debug)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> SelfCheck {
    SelfCheck {
        name,
        passed: worst.is_finite() && worst < tol,
        detail: format!("worst {worst:.3e} (tol {tol:.0e})"),
    }
}

fn double_factorial(k: u32) -> f64 {
    (1..=k).rev().step_by(2).map(f64::from).product()
}

/// `E G^{2k} = (2k - 1)!!` for `k <= 10` under the default rule.
fn quadrature_moments() -> Result<SelfCheck> {
    let rule = gauss_hermite(61)?;
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let m = rule.expect(|g| g.powi(2 * k as i32))?;
        let exact = if k == 0 { 1.0 } else { double_factorial(2 * k - 1) };
        worst = worst.max((m - exact).abs() / exact);
    }
    Ok(check("quadrature Gaussian moments", worst, 1e-10))
}

fn adjoints() -> Result<SelfCheck> {
    let mut rng = Rng::new(11);
    let real = DenseMatrix::<f64>::gaussian(37, 23, 1.0 / 23.0, &mut rng);
    let xr: Vec<f64> = (0..23).map(|_| rng.normal()).collect();
    let ur: Vec<f64> = (0..37).map(|_| rng.normal()).collect();
    let cplx = DenseMatrix::<Complex64>::gaussian(31, 17, 1.0 / 17.0, &mut rng);
    let xc: Vec<Complex64> = (0..17).map(|_| Complex64::gaussian(&mut rng)).collect();
    let uc: Vec<Complex64> = (0..31).map(|_| Complex64::gaussian(&mut rng)).collect();
    let cdp = CdpOperator::new(8, 12, 3, 2.4, &mut rng)?;
    let xd: Vec<Complex64> = (0..96).map(|_| Complex64::gaussian(&mut rng)).collect();
    let ud: Vec<Complex64> = (0..cdp.rows()).map(|_| Complex64::gaussian(&mut rng)).collect();
    let worst = adjoint_mismatch(&real, &xr, &ur)
        .max(adjoint_mismatch(&cplx, &xc, &uc))
        .max(adjoint_mismatch(&cdp, &xd, &ud));
    Ok(check("operator adjoints", worst, 1e-10))
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

/// Analytic derivatives against central differences.
fn denoiser_derivatives() -> Result<SelfCheck> {
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let rule = Arc::new(gauss_hermite(61)?);
    let f = bayes_f_star(Arc::new(BinaryPrior::new(0.5)?), 0.8, 0.3, rule)?;
    for x in [-1.7, -0.2, 0.4, 1.3] {
        let (_, dfx) = f.eval(x)?;
        let fd = (f.eval(x + step)?.0 - f.eval(x - step)?.0) / (2.0 * step);
        worst = worst.max(relative(fd, dfx));
    }
    let h = bayes_h_star(Arc::new(PhaseRetrieval::noisy(0.3)?), 0.6, 0.5)?;
    for (u, y) in [(0.3, 0.5), (-1.1, 2.0), (0.8, 0.05)] {
        let (_, dh) = h.eval(u, y)?;
        let fd = (h.eval(u + step, y)?.0 - h.eval(u - step, y)?.0) / (2.0 * step);
        worst = worst.max(relative(fd, dh));
    }
    // Wirtinger derivative (d/dRe - i d/dIm) / 2 of the complex denoiser.
    let hc = ComplexHStar::new(0.7, 0.4)?;
    for (u, y) in [(Complex64::new(0.4, -0.3), 1.2), (Complex64::new(-1.0, 0.6), 0.3)] {
        let (_, dh) = hc.eval(u, y);
        let dre = (hc.eval(u + step, y).0 - hc.eval(u - step, y).0) / (2.0 * step);
        let i_step = Complex64::new(0.0, step);
        let dim = (hc.eval(u + i_step, y).0 - hc.eval(u - i_step, y).0) / (2.0 * step);
        let w = (dre - Complex64::new(0.0, 1.0) * dim) * 0.5;
        worst = worst.max(relative(w.re, dh)).max(w.im.abs() / dh.abs().max(1e-3));
    }
    Ok(check("denoiser derivatives vs finite differences", worst, 1e-5))
}

/// Power method against a dense Jacobi eigensolver on 50 x 50 matrices.
fn power_vs_dense() -> Result<SelfCheck> {
    let m = 50;
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let mut rng = Rng::new(100 + seed);
        let b = DenseMatrix::<f64>::gaussian(m, m, 1.0 / m as f64, &mut rng);
        // B^T B plus a planted direction, which gives a clear top eigen-gap.
        let v: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
        let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let sym = DenseMatrix::from_fn(m, m, |i, j| {
            let btb: f64 = (0..m).map(|k| b.row(k)[i] * b.row(k)[j]).sum();
            btb + 3.0 * v[i] * v[j] / (vn * vn)
        });
        let (vals, vecs) = symmetric_eigen(sym.data(), m);
        let top = (0..m).max_by(|&a, &c| vals[a].total_cmp(&vals[c])).expect("non-empty");
        let r = power_method(&sym, PowerOptions { tol: 1e-14, max_iter: 100_000 }, &mut rng)?;
        let cos: f64 = (0..m).map(|i| vecs[i * m + top] * r.vector[i]).sum();
        worst = worst.max((r.eigenvalue - vals[top]).abs()).max(1.0 - cos.abs());
    }
    Ok(check("power method vs dense eigensolver", worst, 1e-6))
}

fn phase_invariance() -> Result<SelfCheck> {
    let mut rng = Rng::new(3);
    let x: Vec<Complex64> = (0..64).map(|_| Complex64::gaussian(&mut rng)).collect();
    let y: Vec<Complex64> = (0..64).map(|_| Complex64::gaussian(&mut rng)).collect();
    let base = phase_aligned_overlap(&y, &x)?;
    let mut worst: f64 = 0.0;
    for theta in [0.0, 0.5, 2.0, 3.14159, 5.9] {
        let rot = Complex64::from_polar(1.0, theta);
        let yr: Vec<Complex64> = y.iter().map(|v| v * rot).collect();
        worst = worst.max((phase_aligned_overlap(&yr, &x)? - base).abs());
    }
    Ok(check("phase invariance of the complex overlap", worst, 1e-14))
}

fn csv_determinism() -> Result<SelfCheck> {
    let mut cfg = ExperimentConfig::preset(Preset::Fig1Gaussian);
    cfg.d = 120;
    cfg.n_trials = 2;
    cfg.delta_grid = vec![2.5];
    cfg.max_iter = 30;
    let render = |cfg: &ExperimentConfig| -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_csv(&run_sweep(cfg)?, &mut out)?;
        Ok(out)
    };
    let first = render(&cfg)?;
    cfg.threads = Some(1);
    let second = render(&cfg)?;
    Ok(SelfCheck {
        name: "byte-identical CSV across runs and thread counts",
        passed: first == second,
        detail: format!("{} bytes", first.len()),
    })
}

/// Runs every suite; errors inside a suite are reported as failures.
pub fn selftest() -> Vec<SelfCheck> {
    let suites: [(&'static str, fn() -> Result<SelfCheck>); 6] = [
        ("quadrature Gaussian moments", quadrature_moments),
        ("operator adjoints", adjoints),
        ("denoiser derivatives vs finite differences", denoiser_derivatives),
        ("power method vs dense eigensolver", power_vs_dense),
        ("phase invariance of the complex overlap", phase_invariance),
        ("byte-identical CSV across runs and thread counts", csv_determinism),
    ];
    suites
        .into_iter()
        .map(|(name, run)| {
            run().unwrap_or_else(|e| SelfCheck {
                name,
                passed: false,
                detail: format!("error: {e}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for c in selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
