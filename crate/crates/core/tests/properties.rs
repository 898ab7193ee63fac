use std::f64::consts::PI;

use hillstab::duffing::{convergence_threshold, difference_ceiling, ultimate_bound, DuffingParams};
use hillstab::evolution::{
    abstract_threshold, scalar_threshold, wave_sync_threshold, ModalState, SineGrid,
};
use hillstab::hill::{
    certify, decay_rate, equivalence_constants, form, legacy_thresholds, lyapunov_f,
    stability_threshold, LiapunovForm, PhaseState, SystemParams,
};
use hillstab::propagator::{propagate_at, propagate_sampled, CoefficientSignal, Trajectory};
use hillstab::resonance::{sharpness_ratio, ResonantSystem};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn positive() -> impl Strategy<Value = f64> {
    (-4.0_f64..4.0).prop_map(|e| 10f64.powf(e / 2.0))
}

fn admissible() -> impl Strategy<Value = SystemParams<f64>> {
    (positive(), positive(), 0.0_f64..1.0).prop_map(|(b, c, frac)| {
        let ceiling = frac * stability_threshold(b, c).unwrap();
        SystemParams::new(b, c, ceiling).unwrap()
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn f_matches_its_matrix(b in positive(), c in positive(), u in -5.0_f64..5.0, v in -5.0_f64..5.0) {
        let p = SystemParams::new(b, c, 0.0).unwrap();
        let s = PhaseState::origin(u, v);
        let direct = 0.5 * v * v + 0.5 * b * u * u + 0.5 * c * u * v + 0.25 * c * c * u * u;
        prop_assert!(close(lyapunov_f(&p, &s), direct, 1e-12));
        prop_assert!(close(form(&p, LiapunovForm::F).value(&s), direct, 1e-12));
        prop_assert!(lyapunov_f(&p, &s) >= 0.0);
    }

    #[test]
    fn threshold_chain(b in positive(), c in positive()) {
        let (strong, weak) = legacy_thresholds(b, c).unwrap();
        let main = stability_threshold(b, c).unwrap();
        prop_assert!(strong <= weak * (1.0 + 1e-12));
        prop_assert!(weak < main);
    }

    #[test]
    fn threshold_monotone(b in positive(), c in positive(), k in 1.0001_f64..3.0) {
        let base = stability_threshold(b, c).unwrap();
        prop_assert!(stability_threshold(b * k, c).unwrap() >= base);
        prop_assert!(stability_threshold(b, c * k).unwrap() > base);
    }

    #[test]
    fn decay_rate_nonincreasing_in_ceiling(p in admissible(), shrink in 0.0_f64..1.0) {
        let smaller = SystemParams::new(p.b, p.c, p.ceiling * shrink).unwrap();
        prop_assert!(decay_rate(&smaller) >= decay_rate(&p) * (1.0 - 1e-12));
        prop_assert!(decay_rate(&p) > 0.0);
    }

    #[test]
    fn certificate_chain(b in positive(), c in positive(), ceiling in 0.0_f64..200.0) {
        let cert = certify(&SystemParams::new(b, c, ceiling).unwrap());
        prop_assert!(!cert.holds_fh2_strong || cert.holds_fh2_weak);
        prop_assert!(!cert.holds_fh2_weak || cert.holds_main);
        prop_assert_eq!(cert.holds_main, cert.delta > 0.0);
        prop_assert_eq!(cert.holds_main, cert.chosen_form.is_some());
    }

    #[test]
    fn equivalence_constants_bracket_form(p in admissible(), u in -5.0_f64..5.0, v in -5.0_f64..5.0) {
        let s = PhaseState::origin(u, v);
        for which in [LiapunovForm::F, LiapunovForm::G] {
            let (lo, hi) = equivalence_constants(&p, which);
            let value = form(&p, which).value(&s);
            prop_assert!(lo > 0.0);
            prop_assert!(value >= lo * s.norm_sq() * (1.0 - 1e-12) - 1e-300);
            prop_assert!(value <= hi * s.norm_sq() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn propagation_is_a_semigroup(p in admissible(), seed in any::<u64>(), split in 0.05_f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signal = CoefficientSignal::random(&mut rng, 8, 10.0, 0.0, p.ceiling);
        let s0 = PhaseState::origin(1.0, -0.5);
        let t1 = 10.0 * split;
        let direct = propagate_at(&p, &signal, &s0, &[10.0]).unwrap()[0];
        let mid = propagate_at(&p, &signal, &s0, &[t1]).unwrap()[0];
        let chained = propagate_at(&p, &signal, &mid, &[10.0]).unwrap()[0];
        let scale = direct.u.abs().max(direct.v.abs());
        prop_assert!((direct.u - chained.u).abs() <= 1e-10 * scale + 1e-300);
        prop_assert!((direct.v - chained.v).abs() <= 1e-10 * scale + 1e-300);
    }

    #[test]
    fn velocity_is_continuous_across_jumps(p in admissible(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signal = CoefficientSignal::random(&mut rng, 4, 5.0, 0.0, p.ceiling);
        let s0 = PhaseState::origin(0.3, 1.0);
        for &bp in &signal.breakpoints()[1..] {
            let eps = 1e-7;
            let states = propagate_at(&p, &signal, &s0, &[bp - eps, bp, bp + eps]).unwrap();
            let bound = 10.0 * eps * (1.0 + p.b + p.ceiling + p.c) * (1.0 + p.c);
            prop_assert!((states[0].v - states[2].v).abs() <= bound);
            prop_assert!((states[0].u - states[2].u).abs() <= bound);
        }
    }

    #[test]
    fn below_c0_is_never_certified(omega in 1.01_f64..5.0, frac in 0.0_f64..0.999) {
        let sys = ResonantSystem::new(omega).unwrap();
        let c = frac * sys.c0;
        prop_assume!(c > 0.0);
        prop_assert!(!certify(&sys.params(c).unwrap()).holds_main);
        prop_assert!(sys.growth_factor(c) > 1.0);
    }

    #[test]
    fn sharpness_ratio_increases_with_h(h in 1e-4_f64..0.5, k in 1.01_f64..3.0) {
        prop_assert!(sharpness_ratio(h).unwrap() < sharpness_ratio(h * k).unwrap());
        prop_assert!(sharpness_ratio(h).unwrap() > PI);
    }

    #[test]
    fn abstract_reduces_to_scalar(b in positive(), c in positive()) {
        let a = abstract_threshold(c, c * b, c).unwrap();
        prop_assert!(close(a, scalar_threshold(b, c).unwrap(), 1e-12));
    }

    #[test]
    fn centred_scalar_criterion_is_the_g_criterion(b in positive(), c in positive(), frac in 0.0_f64..2.0) {
        let edge = 2.0 * c * b.sqrt();
        let ceiling = frac * edge;
        prop_assume!((ceiling - edge).abs() > 1e-10 * edge);
        let lhs = ceiling / 2.0 < scalar_threshold(b + ceiling / 2.0, c).unwrap();
        prop_assert_eq!(lhs, ceiling < edge);
    }

    #[test]
    fn wave_sync_threshold_positive_and_inverse_in_k(k in positive(), c in positive()) {
        let th = wave_sync_threshold(k, c).unwrap();
        prop_assert!(th > 0.0);
        prop_assert!(close(wave_sync_threshold(2.0 * k, c).unwrap(), th / 2.0, 1e-13));
    }

    #[test]
    fn duffing_threshold_branches_meet(b in positive(), a in positive(), p in 0.5_f64..4.0) {
        let c = 2.0 * b.sqrt();
        let dp = DuffingParams::new(b, c, a, p).unwrap();
        let inv = 1.0 / p;
        let root = (a * (p + 1.0)).powf(inv);
        let large = b * c.powf(2.0 * inv) / root;
        let small = c.powf((p + 1.0) * inv) * b.powf((p + 1.0) / (2.0 * p)) / (2f64.powf((p - 1.0) * inv) * root);
        prop_assert!(close(large, small, 1e-10));
        prop_assert!(close(convergence_threshold(&dp), large, 1e-10));
    }

    #[test]
    fn duffing_threshold_saturates_hill_criterion(b in positive(), c in positive(), a in positive(), p in 1.0_f64..4.0) {
        let dp = DuffingParams::new(b, c, a, p).unwrap();
        let f = convergence_threshold(&dp);
        let ceiling = difference_ceiling(&dp, ultimate_bound(b, c, f).unwrap()).unwrap();
        prop_assert!(close(ceiling, stability_threshold(b, c).unwrap(), 1e-9));
    }

    #[test]
    fn duffing_threshold_is_sufficient(b in positive(), c in positive(), a in positive(), p in 0.1_f64..4.0) {
        // for p < 1 the min picks the branch of the other damping regime, which is smaller
        let dp = DuffingParams::new(b, c, a, p).unwrap();
        let f = convergence_threshold(&dp);
        let ceiling = difference_ceiling(&dp, ultimate_bound(b, c, f).unwrap()).unwrap();
        prop_assert!(ceiling <= stability_threshold(b, c).unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn embedding_inequalities(seed in any::<u64>(), n in 1_usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = ModalState::<f64>::random_smooth(&mut rng, n, 1.0, 1.0);
        let grid = SineGrid::standard(n).unwrap();
        let v = s.v_norm_sq();
        prop_assert!(s.h_norm_sq() <= v / (PI * PI) * (1.0 + 1e-12));
        prop_assert!(s.grid_max_sq(&grid) <= v / PI + 1e-12);
    }

    #[test]
    fn trajectory_json_round_trips(p in admissible(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signal = CoefficientSignal::random(&mut rng, 5, 3.0, 0.0, p.ceiling);
        let traj = propagate_sampled(&p, &signal, &PhaseState::origin(1.0, 0.0), 3.0, Some(0.25)).unwrap();
        let back = Trajectory::from_json(&traj.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, traj);
    }
}

/// Smallest root of `det(D − λP) = 0` for symmetric 2×2 `D`, `P ≻ 0`.
fn min_generalized_eigenvalue(d: [f64; 3], p: [f64; 3]) -> f64 {
    let [d11, d12, d22] = d;
    let [p11, p12, p22] = p;
    let qa = p11 * p22 - p12 * p12;
    let qb = -(d11 * p22 + d22 * p11 - 2.0 * d12 * p12);
    let qc = d11 * d22 - d12 * d12;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    (-qb - disc.sqrt()) / (2.0 * qa)
}

#[test]
fn decay_rate_matches_dense_grid_oracle() {
    // (b, c, C) = (1, 2, 1): both forms apply
    let (b, c, cc) = (1.0_f64, 2.0_f64, 1.0_f64);
    let pf = [b / 2.0 + c * c / 4.0, c / 4.0, 0.5];
    let pg = [(b + cc / 2.0) / 2.0 + c * c / 4.0, c / 4.0, 0.5];
    let (mut worst_f, mut worst_g) = (f64::INFINITY, f64::INFINITY);
    for i in 0..=10_000 {
        let a = cc * i as f64 / 10_000.0;
        let phi = [c * b / 2.0, 0.0, c / 2.0 - a / (2.0 * c)];
        let psi = [c * b / 2.0, (a - cc / 2.0) / 2.0, c / 2.0];
        worst_f = worst_f.min(min_generalized_eigenvalue(phi, pf));
        worst_g = worst_g.min(min_generalized_eigenvalue(psi, pg));
    }
    let expected = worst_f.max(worst_g);
    let got = decay_rate(&SystemParams::new(b, c, cc).unwrap());
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
}
