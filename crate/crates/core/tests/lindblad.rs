use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rkur_core::lindblad::{
    build_generator, build_perturbation, build_tilted_generator, JumpChannel, LindbladModel, ModelDerivative,
    ParametrizedModel,
};
use rkur_core::linalg::{devectorize, vectorize, vectorized_identity, ComplexMatrix, C64};
use rkur_core::models::random::random_lindblad_model;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let a = random_matrix(rng, n);
    let rho = &a * &a.adjoint();
    rho.scale(rho.trace().inv())
}

/// `H(θ) = H₀ + θ H₁`, `L_c(θ) = L_c⁰ + θ L_c¹`.
fn linear_family(seed: u64, n: usize, jumps: usize) -> ParametrizedModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let herm = |m: ComplexMatrix| (&m + &m.adjoint()).scale_real(0.5);
    let h0 = herm(random_matrix(&mut rng, n));
    let h1 = herm(random_matrix(&mut rng, n));
    let l0: Vec<_> = (0..jumps).map(|_| random_matrix(&mut rng, n)).collect();
    let l1: Vec<_> = (0..jumps).map(|_| random_matrix(&mut rng, n)).collect();
    let (dh, djumps) = (h1.clone(), l1.clone());
    ParametrizedModel::new(move |theta| {
        let jumps = l0
            .iter()
            .zip(&l1)
            .enumerate()
            .map(|(c, (a, b))| JumpChannel::new(format!("L{c}"), a + &b.scale_real(theta), 1.0))
            .collect();
        LindbladModel::new(&h0 + &h1.scale_real(theta), jumps)
    })
    .with_analytic_derivative(move |_| Ok(ModelDerivative { dh: dh.clone(), djumps: djumps.clone() }))
}

proptest! {
    #[test]
    fn generator_preserves_trace_and_hermiticity(seed in any::<u64>(), n in 2usize..=3, jumps in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_lindblad_model(&mut rng, n, jumps);
        let l = build_generator(&m);
        let trace_row = l.apply_left(&vectorized_identity(n)).unwrap();
        prop_assert!(trace_row.norm() <= 1e-12 * l.norm());
        let rho = random_state(&mut rng, n);
        let out = devectorize(&l.apply(&vectorize(&rho).unwrap()).unwrap()).unwrap();
        prop_assert!((&out - &out.adjoint()).norm() <= 1e-12 * l.norm());
    }

    #[test]
    fn k2_is_the_adjoint_image_of_k1(seed in any::<u64>(), n in 2usize..=3, jumps in 1usize..=2) {
        let fam = linear_family(seed, n, jumps);
        let pert = build_perturbation(&fam, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let rho = random_state(&mut rng, n);
        let v = vectorize(&rho).unwrap();
        let k1 = devectorize(&pert.k1.apply(&v).unwrap()).unwrap();
        let k2 = devectorize(&pert.k2.apply(&v).unwrap()).unwrap();
        prop_assert!((&k2 - &k1.adjoint()).norm() <= 1e-12 * k1.norm().max(1.0));
    }

    #[test]
    fn generator_derivative_matches_finite_difference(seed in any::<u64>(), n in 2usize..=3) {
        let fam = linear_family(seed, n, 2);
        let theta = 0.2;
        let h = 1e-5;
        let fd = (&build_generator(&fam.model(theta + h).unwrap()) - &build_generator(&fam.model(theta - h).unwrap()))
            .scale_real(0.5 / h);
        let analytic = build_perturbation(&fam, theta).unwrap().generator_derivative();
        prop_assert!((&fd - &analytic).norm() <= 1e-7 * analytic.norm().max(1.0));
    }

    #[test]
    fn tilted_generator_reduces_on_the_diagonal(seed in any::<u64>(), theta in -1.0f64..1.0) {
        let fam = linear_family(seed, 2, 2);
        let tilted = build_tilted_generator(&fam, theta, theta).unwrap();
        prop_assert_eq!(tilted, build_generator(&fam.model(theta).unwrap()));
    }
}
