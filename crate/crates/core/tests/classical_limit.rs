use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkur_core::models::random::random_chain;
use rkur_core::models::{classical_embedding, ClassicalChain};
use rkur_core::rkur::evaluate_bound;
use rkur_core::steady_fcs::SteadyPoint;

#[test]
fn embedded_chains_reduce_to_classical_quantities() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let chain = random_chain(&mut rng, 3);
        let fam = classical_embedding(&chain, None).unwrap();
        let r = evaluate_bound(&fam, 0.0, None).unwrap();
        let p = chain.stationary_distribution(0.0).unwrap();

        assert!(r.z.abs() < 1e-10 && r.z1.norm() < 1e-10 && r.z2.norm() < 1e-10, "{r:?}");
        assert!((r.a2max - chain.max_log_sensitivity_squared()).abs() <= 1e-8);
        assert!((r.da - chain.dynamical_activity(0.0).unwrap()).abs() <= 1e-10);
        let x: f64 = chain.edges().iter().map(|e| p[e.from] * e.rate * e.log_sensitivity.powi(2)).sum();
        assert!((r.x_term - x).abs() <= 1e-10);
        assert!(r.flags.scaled_jumps);
        assert!(!r.is_violation());

        let pi = SteadyPoint::new(fam.model(0.0).unwrap()).unwrap().bundle.pi;
        for i in 0..3 {
            assert!((pi[(i, i)].re - p[i]).abs() < 1e-10);
            for j in 0..3 {
                if i != j {
                    assert!(pi[(i, j)].norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn uniform_scaling_saturates_the_classical_bound_ingredients() {
    let chain = ClassicalChain::uniformly_scaled(vec![
        vec![0.0, 1.0, 0.5],
        vec![2.0, 0.0, 0.3],
        vec![0.7, 1.1, 0.0],
    ])
    .unwrap();
    let fam = classical_embedding(&chain, None).unwrap();
    let r = evaluate_bound(&fam, 0.0, None).unwrap();
    assert!((r.a2max - 1.0).abs() < 1e-12);
    assert!((r.x_term - r.da).abs() < 1e-12);
}
