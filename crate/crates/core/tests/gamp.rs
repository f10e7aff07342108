use std::sync::Arc;

use proptest::prelude::*;

use specamp::experiments::{artificial_check, real_se_overlap, real_spectral_setup};
use specamp::gamp::{gamp_run, ArtificialConfig, GampConfig, OnsagerMode, SpectralStart};
use specamp::models::{sample_instance, BinaryPrior, Channel, GaussianPrior, PhaseRetrieval, Prior};
use specamp::numerics::{gauss_hermite, QuadratureRule};
use specamp::se::{bayes_f_star, bayes_h_star, se_init, se_step, OutputDenoiser, SignalDenoiser, SignalKind, StandardSchedule};
use specamp::Rng;

fn rule() -> Arc<QuadratureRule> {
    Arc::new(gauss_hermite(61).unwrap())
}

fn gaussian() -> Arc<dyn Prior> {
    Arc::new(GaussianPrior)
}

fn noiseless() -> Arc<dyn Channel> {
    Arc::new(PhaseRetrieval::Noiseless)
}

#[test]
fn one_state_evolution_step_matches_monte_carlo() {
    let rule = rule();
    for (delta, a2) in [(2.0, 0.5), (1.0, 0.2)] {
        let sched = StandardSchedule::new(gaussian(), noiseless(), SignalKind::Identity, delta, rule.clone());
        let s0 = se_init(a2, delta).unwrap();
        let step = se_step(&s0, gaussian().as_ref(), noiseless().as_ref(), &sched, delta, &rule).unwrap();
        // f = identity and E X^2 = 1 give mu_U and sigma_U^2 in closed form.
        assert!((step.mu_u - s0.mu_x / delta.sqrt()).abs() < 1e-12);
        assert!((step.sig2_u - s0.sig2_x / delta).abs() < 1e-12);

        let h = bayes_h_star(noiseless(), step.mu_u, step.sig2_u).unwrap().scaled(delta.sqrt());
        let sd_u = step.sig2_u.sqrt();
        let mut rng = Rng::new(21);
        let samples = 400_000;
        let (mut gh, mut hp, mut h2, mut h4) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..samples {
            let g = rng.normal();
            let u = step.mu_u * g + sd_u * rng.normal();
            let (v, dv) = h.eval(u, g * g).unwrap();
            gh += g * v;
            hp += dv;
            h2 += v * v;
            h4 += v.powi(4);
        }
        let m = samples as f64;
        let (gh, hp, h2) = (gh / m, hp / m, h2 / m);
        let mu_mc = delta.sqrt() * gh - hp * s0.mu_x;
        let se_h2 = ((h4 / m - h2 * h2) / m).sqrt();
        assert!((step.next.sig2_x - h2).abs() < 5.0 * se_h2 + 1e-3, "delta {delta}: {} vs {h2}", step.next.sig2_x);
        assert!((step.next.mu_x - mu_mc).abs() < 0.02 * mu_mc.abs().max(0.1), "delta {delta}: {} vs {mu_mc}", step.next.mu_x);
    }
}

#[test]
fn gaussian_identity_reaches_perfect_recovery_above_threshold() {
    let rule = rule();
    for delta in [1.5, 2.0, 3.0] {
        let (_, p) = real_spectral_setup(noiseless(), delta, &rule).unwrap();
        let sched = StandardSchedule::new(gaussian(), noiseless(), SignalKind::Identity, delta, rule.clone());
        let v = real_se_overlap(gaussian().as_ref(), noiseless().as_ref(), &sched, p.a2, delta, &rule).unwrap();
        assert_eq!(v, 1.0, "delta {delta}");
    }
}

#[test]
fn binary_bayes_denoiser_beats_identity_in_state_evolution() {
    let rule = rule();
    let prior: Arc<dyn Prior> = Arc::new(BinaryPrior::new(0.5).unwrap());
    let delta = 1.0;
    let (_, p) = real_spectral_setup(noiseless(), delta, &rule).unwrap();
    let overlap = |kind| {
        let sched = StandardSchedule::new(prior.clone(), noiseless(), kind, delta, rule.clone());
        real_se_overlap(prior.as_ref(), noiseless().as_ref(), &sched, p.a2, delta, &rule).unwrap()
    };
    let (bayes, identity) = (overlap(SignalKind::Bayes), overlap(SignalKind::Identity));
    assert!(bayes > identity + 0.05, "{bayes} vs {identity}");
    assert!(identity > p.a2, "GAMP improves on its start: {identity} vs {}", p.a2);
}

#[test]
fn gamp_tracks_state_evolution_on_small_instances() {
    let rule = rule();
    let (d, delta) = (1000, 4.0);
    let (t, p) = real_spectral_setup(noiseless(), delta, &rule).unwrap();
    let sched = StandardSchedule::new(gaussian(), noiseless(), SignalKind::Identity, delta, rule.clone());
    let trials = 4;
    let mut ratio = [0.0; 3];
    let mut sq_ratio = [0.0; 3];
    for seed in 0..trials {
        let mut rng = Rng::new(seed);
        let inst = sample_instance(gaussian(), noiseless(), d, delta, &mut rng).unwrap();
        let est = specamp::spectral::spectral_estimate(&inst, &t, Default::default(), &mut rng).unwrap();
        let z = t.apply_all(&inst.y);
        let start = SpectralStart { direction: &est.direction, z: &z, lambda_star: p.lambda_star, a2: p.a2 };
        let tr = gamp_run(&inst, &start, &sched, &GampConfig { max_iter: 2, ..Default::default() }, &rule).unwrap();
        for k in 0..3 {
            let s = tr.se_states[k];
            ratio[k] += tr.mean_product[k] / s.mu_x / trials as f64;
            sq_ratio[k] += tr.mean_square[k] / (s.mu_x * s.mu_x + s.sig2_x) / trials as f64;
        }
    }
    for k in 0..3 {
        assert!((ratio[k] - 1.0).abs() < 0.1, "t = {k}: {ratio:?}");
        assert!((sq_ratio[k] - 1.0).abs() < 0.1, "t = {k}: {sq_ratio:?}");
    }
}

#[test]
fn empirical_and_deterministic_onsager_terms_agree() {
    let rule = rule();
    let (d, delta) = (2000, 1.0);
    let (t, p) = real_spectral_setup(noiseless(), delta, &rule).unwrap();
    let sched = StandardSchedule::new(gaussian(), noiseless(), SignalKind::Identity, delta, rule.clone());
    let mut rng = Rng::new(4);
    let inst = sample_instance(gaussian(), noiseless(), d, delta, &mut rng).unwrap();
    let est = specamp::spectral::spectral_estimate(&inst, &t, Default::default(), &mut rng).unwrap();
    let z = t.apply_all(&inst.y);
    let start = SpectralStart { direction: &est.direction, z: &z, lambda_star: p.lambda_star, a2: p.a2 };
    let cfg = GampConfig { max_iter: 3, stop_tol: 0.0, keep_iterates: 4, ..Default::default() };
    let emp = gamp_run(&inst, &start, &sched, &cfg, &rule).unwrap();
    let det = gamp_run(&inst, &start, &sched, &GampConfig { onsager: OnsagerMode::Deterministic, ..cfg }, &rule).unwrap();
    for (a, b) in emp.c.iter().zip(&det.c) {
        assert!((a - b).abs() < 0.05, "{:?} vs {:?}", emp.c, det.c);
    }
    for (a, b) in emp.iterates.iter().zip(&det.iterates) {
        let gap = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / d as f64;
        assert!(gap < 0.02, "{gap}");
    }
}

#[test]
fn artificial_first_phase_converges_in_direction() {
    let rule = rule();
    let mut rng = Rng::new(8);
    let cfg = ArtificialConfig { phase1_len: 40, phase2_len: 1, ..Default::default() };
    let r = artificial_check(1000, 4.0, &cfg, &rule, &mut rng).unwrap();
    assert!(r.se_error.0 < 1e-4 && r.se_error.1 < 1e-4, "{:?}", r.se_error);
    assert!(r.trace.direction_gap < 1e-3, "{}", r.trace.direction_gap);
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn binary_posterior_mean_derivative(x in -3.0f64..3.0, mu in 0.2f64..2.0, sig2 in 0.1f64..2.0, p in 0.1f64..0.9) {
        let f = bayes_f_star(Arc::new(BinaryPrior::new(p).unwrap()), mu, sig2, rule()).unwrap();
        let step = 1e-5;
        let (_, df) = f.eval(x).unwrap();
        let fd = (f.eval(x + step).unwrap().0 - f.eval(x - step).unwrap().0) / (2.0 * step);
        prop_assert!(relative(fd, df) < 1e-5, "{fd} vs {df}");
    }

    #[test]
    fn noisy_output_denoiser_derivative(u in -2.0f64..2.0, y in 0.05f64..4.0, mu in 0.2f64..1.5, sig2 in 0.2f64..1.5,
                                        sigma in 0.1f64..1.0) {
        let h = bayes_h_star(Arc::new(PhaseRetrieval::noisy(sigma).unwrap()), mu, sig2).unwrap();
        let step = 1e-5;
        let (_, dh) = h.eval(u, y).unwrap();
        let fd = (h.eval(u + step, y).unwrap().0 - h.eval(u - step, y).unwrap().0) / (2.0 * step);
        prop_assert!(relative(fd, dh) < 1e-5, "{fd} vs {dh}");
    }

    #[test]
    fn overlap_from_state_evolution_is_a_correlation(a2 in 0.01f64..0.99, delta in 0.6f64..5.0) {
        let s = se_init(a2, delta).unwrap();
        let c = specamp::se::overlap_from_se(&s, gaussian().as_ref(), &specamp::se::Identity, &rule()).unwrap();
        prop_assert!((c * c - a2).abs() < 1e-9);
    }
}
