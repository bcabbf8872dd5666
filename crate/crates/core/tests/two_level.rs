use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkur_core::lindblad::{build_perturbation, build_tilted_generator};
use rkur_core::linalg::{eig_near_zero, C64};
use rkur_core::models::random::{ParameterRanges, Range};
use rkur_core::models::two_level::TwoLevelPoint;
use rkur_core::models::{
    limiting_oracles, steady_state_closed_form, two_level_model, Observable, Parameter,
    TwoLevelParams,
};
use rkur_core::rkur::{evaluate_bound, fisher_terms, qfi_oracle};
use rkur_core::steady_fcs::{counting_statistics, response, ResponseRoute, SteadyPoint};
use rkur_core::Error;

const COUNTING: [f64; 2] = [1.0, 1.0];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn steady_state_at_unit_rates() {
    let point = TwoLevelPoint { delta: 0.0, rabi: 1.0, gamma: 1.0, nbar: 0.0 };
    let s = SteadyPoint::new(point.model().unwrap()).unwrap();
    let want = [
        [C64::new(4.0 / 9.0, 0.0), C64::new(0.0, -2.0 / 9.0)],
        [C64::new(0.0, 2.0 / 9.0), C64::new(5.0 / 9.0, 0.0)],
    ];
    for r in 0..2 {
        for c in 0..2 {
            assert!((s.bundle.pi[(r, c)] - want[r][c]).norm() < 1e-14);
        }
    }
}

#[test]
fn undriven_atom_decays_to_ground_state() {
    let point = TwoLevelPoint { delta: 0.3, rabi: 0.0, gamma: 1.0, nbar: 0.0 };
    let s = SteadyPoint::new(point.model().unwrap()).unwrap();
    assert!((s.bundle.pi[(1, 1)].re - 1.0).abs() < 1e-14);
    assert!(s.bundle.pi[(0, 0)].norm() < 1e-14);
    assert!(s.mean_rate().unwrap().abs() < 1e-14);
}

#[test]
fn steady_state_matches_closed_form_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let ranges = ParameterRanges::default();
    for _ in 0..200 {
        let p = TwoLevelPoint {
            delta: Range::new(-10.0, 10.0).sample(&mut rng),
            rabi: ranges.rabi.sample(&mut rng),
            gamma: Range::new(0.05, 4.0).sample(&mut rng),
            nbar: Range::new(0.0, 5.0).sample(&mut rng),
        };
        let s = SteadyPoint::new(p.model().unwrap()).unwrap();
        let err = (&s.bundle.pi - &steady_state_closed_form(&p)).norm();
        assert!(err < 1e-10, "{p:?}: {err:.3e}");
        let current = s.model.clone().with_weights(&Observable::Current.weights()).unwrap();
        let j = SteadyPoint::new(current).unwrap().mean_rate().unwrap();
        assert!(close(j, -4.0 * p.gamma * p.rabi * p.rabi / p.alpha(), 1e-10));
    }
}

#[test]
fn limiting_statistics_match_closed_forms() {
    for &(g, o) in &[(1.0, 1.0), (0.3, 2.0), (3.0, 0.5), (8f64.sqrt(), 1.0)] {
        let want = limiting_oracles(g, o).unwrap();
        let base = TwoLevelParams::limiting(g, o);
        let fam_g = two_level_model(base, Parameter::Gamma, COUNTING).unwrap();
        let fam_o = two_level_model(base, Parameter::Rabi, COUNTING).unwrap();
        let fcs = counting_statistics(&fam_g, g, None).unwrap();
        assert!(close(fcs.mean_rate, want.mean, 1e-12));
        assert!(close(fcs.variance_rate, want.variance, 1e-12));
        assert!(close(fcs.response.value, want.d_gamma_mean, 1e-10));
        assert_eq!(fcs.response.route, ResponseRoute::Analytic);
        let r = response(&fam_o, o, None).unwrap();
        assert!(close(r.value, want.d_rabi_mean, 1e-10));
    }
}

#[test]
fn response_examples() {
    let fam = two_level_model(TwoLevelParams::limiting(1.0, 1.0), Parameter::Gamma, COUNTING).unwrap();
    assert!((response(&fam, 1.0, None).unwrap().value - 28.0 / 81.0).abs() < 1e-12);
    let fam = two_level_model(TwoLevelParams::limiting(2.0, 1.0), Parameter::Rabi, COUNTING).unwrap();
    assert!((response(&fam, 1.0, None).unwrap().value - 4.0 / 9.0).abs() < 1e-12);
    let g = 8f64.sqrt();
    let fam = two_level_model(TwoLevelParams::limiting(g, 1.0), Parameter::Gamma, COUNTING).unwrap();
    assert!(response(&fam, g, None).unwrap().value.abs() < 1e-12);
}

#[test]
fn bound_in_limiting_case() {
    let fam = two_level_model(TwoLevelParams::limiting(1.0, 1.0), Parameter::Gamma, COUNTING).unwrap();
    let r = evaluate_bound(&fam, 1.0, None).unwrap();
    assert!((r.eta.unwrap() - (1.0 - 1.0 / (8.0 + 1.0 / 8.0 - 1.0))).abs() < 1e-10);
    assert!((r.a2max - 1.0).abs() < 1e-12);
    assert!(r.z1.norm() < 1e-12 && r.z2.norm() < 1e-12);
    assert!((r.x_term - 4.0 / 9.0).abs() < 1e-12);
    assert!((r.da - 4.0 / 9.0).abs() < 1e-12);
    assert!(r.flags.scaled_jumps && !r.flags.hamiltonian_only);

    let fam = two_level_model(TwoLevelParams::limiting(2.0, 1.0), Parameter::Rabi, COUNTING).unwrap();
    let r = evaluate_bound(&fam, 1.0, None).unwrap();
    assert!((r.eta.unwrap() - 1.0 / 9.0).abs() < 1e-10);
    assert_eq!(r.a2max, 0.0);
    assert_eq!(r.x_term, 0.0);
    assert!((r.z - 8.0).abs() < 1e-10);
    assert!((r.qfi_rate - 8.0).abs() < 1e-10);
    assert!(r.flags.hamiltonian_only && !r.flags.scaled_jumps);
    assert!(r.eta_a.is_none());
}

#[test]
fn efficiency_vanishes_at_critical_ratio() {
    let g = 8f64.sqrt();
    let fam = two_level_model(TwoLevelParams::limiting(g, 1.0), Parameter::Gamma, COUNTING).unwrap();
    let r = evaluate_bound(&fam, g, None).unwrap();
    assert!(r.eta.unwrap() <= 1e-10);
}

#[test]
fn undriven_counting_has_degenerate_variance() {
    let fam = two_level_model(TwoLevelParams::limiting(1.0, 0.0), Parameter::Gamma, COUNTING).unwrap();
    assert!(matches!(evaluate_bound(&fam, 1.0, None), Err(Error::DegenerateVariance { .. })));
}

#[test]
fn qfi_oracle_in_limiting_case() {
    let fam = two_level_model(TwoLevelParams::limiting(2.0, 1.0), Parameter::Rabi, COUNTING).unwrap();
    let q = qfi_oracle(&fam, 1.0).unwrap();
    assert!((q - 8.0).abs() < 1e-3, "{q}");
}

#[test]
fn qfi_routes_agree_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ranges = ParameterRanges {
        gamma: Range::new(0.2, 4.0),
        rabi: Range::new(0.2, 4.0),
        omega: Range::new(0.5, 24.0),
        omega_d: Range::new(0.0, 24.0),
        beta: Range::new(0.1, 10.0),
    };
    for p in Parameter::ALL {
        for _ in 0..10 {
            let base = ranges.sample(&mut rng, p);
            let fam = two_level_model(base, p, COUNTING).unwrap();
            let (x, z) = fisher_terms(&fam, base.get(p)).unwrap();
            let oracle = qfi_oracle(&fam, base.get(p)).unwrap();
            let gap = ((x + z) - oracle).abs() / (x + z).max(1.0);
            assert!(gap <= 1e-4, "{p} {base:?}: {} vs {oracle}", x + z);
        }
    }
}

#[test]
fn tilted_eigenvalue_is_continuous_at_coincidence() {
    let fam = two_level_model(TwoLevelParams::limiting(1.0, 1.0), Parameter::Rabi, COUNTING).unwrap();
    let mut previous = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-3] {
        let gen = build_tilted_generator(&fam, 1.0, 1.0 + eps).unwrap();
        let (l, _) = eig_near_zero(&gen, C64::new(0.0, 0.0)).unwrap();
        assert!(l.norm() < previous);
        previous = l.norm();
    }
    assert!(previous < 1e-5);
    let gen = build_tilted_generator(&fam, 1.0, 1.1).unwrap();
    assert!(eig_near_zero(&gen, C64::new(0.0, 0.0)).unwrap().0.re < -1e-4);
}

#[test]
fn z2_is_conjugate_of_z1() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ranges = ParameterRanges::default();
    for p in Parameter::ALL {
        for _ in 0..20 {
            let base = ranges.sample(&mut rng, p);
            let Ok(fam) = two_level_model(base, p, COUNTING) else { continue };
            let Ok(r) = evaluate_bound(&fam, base.get(p), None) else { continue };
            assert!((r.z2 - r.z1.conj()).norm() <= 1e-8 * r.z1.norm().max(1.0));
            assert!(r.x_term <= r.a2max * r.da + 1e-10);
            assert!(!r.is_violation(), "{p} {base:?}: {r:?}");
        }
    }
}

#[test]
fn gamma_perturbation_superoperator_at_unit_rate() {
    let fam = two_level_model(TwoLevelParams::limiting(1.0, 1.0), Parameter::Gamma, COUNTING).unwrap();
    let pert = build_perturbation(&fam, 1.0).unwrap();
    assert!(pert.dh.is_zero());
    assert!((pert.djumps[0][(1, 0)].re - 0.5).abs() < 1e-15);
}
