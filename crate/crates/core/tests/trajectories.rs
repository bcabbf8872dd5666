use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rkur_core::models::two_level::TwoLevelPoint;
use rkur_core::steady_fcs::SteadyPoint;
use rkur_core::trajectories::{default_dt, ensemble_stats, simulate_ensemble};

#[test]
fn thermal_ensembles_agree_with_counting_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..3 {
        let p = TwoLevelPoint {
            delta: rng.random_range(-1.0..1.0),
            rabi: rng.random_range(0.5..1.5),
            gamma: rng.random_range(0.5..1.5),
            nbar: rng.random_range(0.1..1.0),
        };
        let m = p.model().unwrap();
        let s = SteadyPoint::new(m.clone()).unwrap();
        let (mean, var) = (s.mean_rate().unwrap(), s.variance_rate().unwrap());
        let recs = simulate_ensemble(&m, &s.bundle.pi, 100.0, default_dt(&m), 1000 + k, 2000).unwrap();
        let e = ensemble_stats(&recs).unwrap();
        assert!((e.mean_rate - mean).abs() <= 3.0 * e.mean_se, "{p:?}: {e:?} vs {mean}");
        assert!((e.variance_rate - var).abs() <= 3.0 * e.variance_se, "{p:?}: {e:?} vs {var}");
        for r in &recs {
            assert_eq!(r.phi, r.events.len() as f64);
        }
    }
}
