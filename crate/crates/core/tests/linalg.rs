use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rkur_core::lindblad::build_generator;
use rkur_core::linalg::{
    check_drazin, devectorize, drazin_from_spectrum, full_spectrum, kron, solve, vectorize, ComplexMatrix,
    ComplexVector, C64,
};
use rkur_core::models::random::random_lindblad_model;
use rkur_core::steady_fcs::solve_steady;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

proptest! {
    #[test]
    fn vectorize_round_trip(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, n, n);
        let v = vectorize(&m).unwrap();
        prop_assert_eq!(v.len(), n * n);
        prop_assert_eq!(devectorize(&v).unwrap(), m.clone());
        for k in 0..n * n {
            prop_assert_eq!(v[k], m[(k % n, k / n)]);
        }
    }

    #[test]
    fn vectorized_sandwich_identity(n in 1usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_matrix(&mut rng, n, n), random_matrix(&mut rng, n, n), random_matrix(&mut rng, n, n));
        let lhs = vectorize(&(&(&a * &b) * &c)).unwrap();
        let rhs = kron(&c.transpose(), &a).apply(&vectorize(&b).unwrap()).unwrap();
        let mut diff = lhs.clone();
        diff.axpy(C64::new(-1.0, 0.0), &rhs);
        prop_assert!(diff.norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn lu_solve_has_small_residual(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, 16, 16);
        let b = ComplexVector::from_real(&(0..16).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
        let x = solve(&a, &b).unwrap();
        let mut r = a.apply(&x).unwrap();
        r.axpy(C64::new(-1.0, 0.0), &b);
        prop_assert!(r.norm() <= 1e-12 * a.norm() * x.norm());
    }
}

#[test]
fn drazin_conditions_on_random_lindbladians() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_conditions = 0.0f64;
    let mut worst_spectral = 0.0f64;
    for k in 0..100 {
        let dim = 2 + k % 2;
        let jumps = 1 + k % 3;
        let m = random_lindblad_model(&mut rng, dim, jumps);
        let l = build_generator(&m);
        let b = solve_steady(&l).unwrap();
        let r = check_drazin(&l, &b.drazin, &b.pi_vec, &b.left_one).unwrap();
        worst_conditions = worst_conditions.max(r.max());
        let spectral = drazin_from_spectrum(&full_spectrum(&l).unwrap());
        let gap = (&spectral - &b.drazin).norm() / b.drazin.norm();
        worst_spectral = worst_spectral.max(gap);
    }
    assert!(worst_conditions <= 1e-10, "{worst_conditions:.3e}");
    assert!(worst_spectral <= 1e-8, "{worst_spectral:.3e}");
}
