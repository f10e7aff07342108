use std::sync::Arc;

use specamp::complex::{complex_prediction, complex_t_bar};
use specamp::models::{sample_instance, Channel, GaussianPrior, PhaseRetrieval, Prior};
use specamp::numerics::{dot, gauss_hermite};
use specamp::spectral::{delta_u, optimal_t_bar, spectral_estimate, SpectralModel, SpectralOptions};
use specamp::Rng;

// Noiseless real phase retrieval with T-bar designed at delta (delta_u = 1/2),
// from an independent adaptive-quadrature solve in scipy.
const REAL_A2: [(f64, f64, f64); 5] = [
    (1.2, 1.18426644, 0.27827981),
    (2.0, 1.41910403, 0.48582371),
    (3.0, 1.69479578, 0.62620549),
    (4.0, 1.94645534, 0.70514888),
    (4.5, 2.06460456, 0.73269452),
];

// Noiseless complex phase retrieval, T-bar(y) = (y - 1) / (y + sqrt(delta) - 1).
const COMPLEX_A2: [(f64, f64, f64); 4] = [
    (1.5, 1.09394678, 0.16340834),
    (2.0, 1.19782046, 0.30126076),
    (2.4, 1.28187750, 0.38912277),
    (3.0, 1.40521107, 0.49001119),
];

fn noiseless() -> Arc<dyn Channel> {
    Arc::new(PhaseRetrieval::Noiseless)
}

#[test]
fn real_prediction_matches_frozen_oracle() {
    let rule = gauss_hermite(61).unwrap();
    for (delta, lambda, a2) in REAL_A2 {
        let t = optimal_t_bar(noiseless(), delta, 0.5).unwrap();
        let p = SpectralModel::real(noiseless().as_ref(), &t, &rule).unwrap().solve(delta).unwrap();
        assert!((p.lambda_star - lambda).abs() < 1e-4, "delta {delta}: {}", p.lambda_star);
        assert!((p.a2 - a2).abs() < 1e-4, "delta {delta}: {}", p.a2);
        assert!(p.informative && !p.boundary_warning);
    }
}

#[test]
fn complex_prediction_matches_frozen_oracle() {
    let rule = gauss_hermite(61).unwrap();
    for (delta, lambda, a2) in COMPLEX_A2 {
        let t = complex_t_bar(delta).unwrap();
        let p = complex_prediction(&t, delta, &rule).unwrap();
        assert!((p.lambda_star - lambda).abs() < 1e-4, "delta {delta}: {}", p.lambda_star);
        assert!((p.a2 - a2).abs() < 1e-4, "delta {delta}: {}", p.a2);
    }
}

#[test]
fn derivative_and_closed_form_overlaps_agree() {
    let rule = gauss_hermite(61).unwrap();
    let channels: [Arc<dyn Channel>; 2] = [noiseless(), Arc::new(PhaseRetrieval::noisy(0.3).unwrap())];
    for ch in channels {
        let du = delta_u(ch.as_ref()).unwrap();
        for k in 0..12 {
            let delta = 1.1 * du + 0.4 * f64::from(k);
            let t = optimal_t_bar(ch.clone(), delta, du).unwrap();
            let model = SpectralModel::real(ch.as_ref(), &t, &rule).unwrap();
            let p = model.solve(delta).unwrap();
            let a = model.overlap_closed_form(p.lambda_star, delta).unwrap();
            let b = model.overlap_from_derivatives(p.lambda_star, delta).unwrap();
            assert!((a - b).abs() < 1e-4, "{} delta {delta}: {a} vs {b}", ch.name());
        }
    }
}

#[test]
fn phi_and_psi_match_monte_carlo() {
    let rule = gauss_hermite(61).unwrap();
    let delta = 2.0;
    let t = optimal_t_bar(noiseless(), delta, 0.5).unwrap();
    let model = SpectralModel::real(noiseless().as_ref(), &t, &rule).unwrap();
    let mut rng = Rng::new(77);
    let samples = 2_000_000;
    for lambda in [1.2, 1.5, 3.0] {
        let (mut phi, mut psi_part) = (0.0, 0.0);
        let mut rng = rng.split();
        for _ in 0..samples {
            let g = rng.normal();
            let z = t.apply(g * g);
            phi += z * g * g / (lambda - z);
            psi_part += z / (lambda - z);
        }
        let phi = lambda * phi / samples as f64;
        let psi = lambda / delta + lambda * psi_part / samples as f64;
        assert!((model.phi(lambda).unwrap() - phi).abs() < 5e-3, "phi({lambda})");
        assert!((model.psi(lambda, delta).unwrap() - psi).abs() < 5e-3, "psi({lambda})");
    }
}

/// `1/delta_u = E{(E{G^2 | Y} - 1)^2}` estimated by binning `Y` and removing
/// the within-bin sampling variance.
fn delta_u_monte_carlo(sigma: f64, samples: usize, seed: u64) -> f64 {
    let ch = PhaseRetrieval::noisy(sigma).unwrap();
    let mut rng = Rng::new(seed);
    let mut pairs: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            let g = rng.normal();
            (ch.sample(g, &mut rng), g * g - 1.0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let per_bin = 2000;
    let mut total = 0.0;
    for bin in pairs.chunks(per_bin) {
        let m = bin.len() as f64;
        let mean = bin.iter().map(|p| p.1).sum::<f64>() / m;
        let var = bin.iter().map(|p| (p.1 - mean).powi(2)).sum::<f64>() / (m - 1.0);
        total += m * (mean * mean - var / m);
    }
    1.0 / (total / samples as f64)
}

#[test]
fn noisy_threshold_matches_monte_carlo() {
    for sigma in [0.3, 1.0] {
        let exact = delta_u(&PhaseRetrieval::noisy(sigma).unwrap()).unwrap();
        let mc = delta_u_monte_carlo(sigma, 4_000_000, 3);
        assert!((exact - mc).abs() < 0.02 * exact, "sigma {sigma}: {exact} vs {mc}");
    }
}

#[test]
fn overlap_vanishes_below_threshold_and_is_positive_above() {
    let rule = gauss_hermite(61).unwrap();
    let channels: [Arc<dyn Channel>; 2] = [noiseless(), Arc::new(PhaseRetrieval::noisy(0.5).unwrap())];
    for ch in channels {
        let du = delta_u(ch.as_ref()).unwrap();
        let design = optimal_t_bar(ch.clone(), 1.1 * du, du).unwrap();
        let below = SpectralModel::real(ch.as_ref(), &design, &rule).unwrap();
        for frac in [0.5, 0.8, 0.95] {
            let p = below.solve(frac * du).unwrap();
            assert_eq!(p.a2, 0.0, "{} at {frac} delta_u", ch.name());
            assert!(!p.informative);
        }
        for extra in [0.1, 0.3, 1.0] {
            let delta = du + extra + 1e-9;
            let t = optimal_t_bar(ch.clone(), delta, du).unwrap();
            let p = SpectralModel::real(ch.as_ref(), &t, &rule).unwrap().solve(delta).unwrap();
            assert!(p.a2 > 0.0 && p.informative, "{} at delta {delta}", ch.name());
        }
    }
}

#[test]
fn overlap_increases_with_delta() {
    let rule = gauss_hermite(61).unwrap();
    let mut prev = 0.0;
    for k in 1..15 {
        let delta = 0.6 + 0.3 * f64::from(k);
        let t = optimal_t_bar(noiseless(), delta, 0.5).unwrap();
        let a2 = SpectralModel::real(noiseless().as_ref(), &t, &rule).unwrap().solve(delta).unwrap().a2;
        assert!(a2 > prev && a2 < 1.0, "delta {delta}: {a2}");
        prev = a2;
    }
}

#[test]
fn small_instances_track_the_prediction() {
    let rule = gauss_hermite(61).unwrap();
    let prior: Arc<dyn Prior> = Arc::new(GaussianPrior);
    let (d, delta) = (600, 3.0);
    let t = optimal_t_bar(noiseless(), delta, 0.5).unwrap();
    let a2 = SpectralModel::real(noiseless().as_ref(), &t, &rule).unwrap().solve(delta).unwrap().a2;
    let mut mean = 0.0;
    let trials = 6;
    for seed in 0..trials {
        let mut rng = Rng::new(seed);
        let inst = sample_instance(prior.clone(), noiseless(), d, delta, &mut rng).unwrap();
        let est = spectral_estimate(&inst, &t, SpectralOptions::default(), &mut rng).unwrap();
        assert!(est.converged);
        let c = dot(&est.direction, &inst.x) / (d as f64).sqrt();
        assert!(c >= 0.0, "estimate is aligned with the signal");
        mean += c * c / trials as f64;
    }
    assert!((mean - a2).abs() < 0.06, "{mean} vs {a2}");
}
