//! Random instances for sampling experiments and property tests.

use rand::Rng;

use crate::lindblad::{JumpChannel, LindbladModel};
use crate::linalg::{ComplexMatrix, C64};
use crate::models::classical::ClassicalChain;
use crate::models::two_level::{Parameter, TwoLevelParams};

/// Seed of stream `index` under `master`, mixed with a SplitMix64
/// finalizer so that per-draw generators do not depend on scheduling.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Closed interval for uniform sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Sampling box for the two-level parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterRanges {
    pub gamma: Range,
    pub rabi: Range,
    pub omega: Range,
    pub omega_d: Range,
    pub beta: Range,
}

/// Lower bound applied to whichever parameter is perturbed.
pub const PERTURBED_FLOOR: f64 = 0.001;

impl Default for ParameterRanges {
    fn default() -> Self {
        Self {
            gamma: Range::new(0.0, 4.0),
            rabi: Range::new(0.0, 4.0),
            omega: Range::new(0.001, 24.0),
            omega_d: Range::new(0.0, 24.0),
            beta: Range::new(0.0, 10.0),
        }
    }
}

impl ParameterRanges {
    pub fn get(&self, p: Parameter) -> Range {
        match p {
            Parameter::Gamma => self.gamma,
            Parameter::Rabi => self.rabi,
            Parameter::Omega => self.omega,
            Parameter::DriveFrequency => self.omega_d,
            Parameter::Beta => self.beta,
        }
    }

    pub fn set(&mut self, p: Parameter, r: Range) {
        match p {
            Parameter::Gamma => self.gamma = r,
            Parameter::Rabi => self.rabi = r,
            Parameter::Omega => self.omega = r,
            Parameter::DriveFrequency => self.omega_d = r,
            Parameter::Beta => self.beta = r,
        }
    }

    /// Uniform draw, with the perturbed parameter raised to at least `0.001`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, perturbed: Parameter) -> TwoLevelParams {
        let mut p = TwoLevelParams {
            gamma: self.gamma.sample(rng),
            rabi: self.rabi.sample(rng),
            omega: self.omega.sample(rng),
            omega_d: self.omega_d.sample(rng),
            beta: self.beta.sample(rng),
        };
        let v = p.get(perturbed);
        if v < PERTURBED_FLOOR {
            p = p.with(perturbed, PERTURBED_FLOOR);
        }
        p
    }
}

fn gaussian_like<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..1.0)
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| C64::new(gaussian_like(rng), gaussian_like(rng)) * scale)
}

/// Random model with a Hermitian Hamiltonian and `jumps` dense jump
/// operators. Generic instances have a unique steady state.
pub fn random_lindblad_model<R: Rng + ?Sized>(rng: &mut R, dim: usize, jumps: usize) -> LindbladModel {
    let a = random_matrix(rng, dim, 1.0);
    let h = (&a + &a.adjoint()).scale_real(0.5);
    let channels = (0..jumps)
        .map(|c| JumpChannel::new(format!("L{c}"), random_matrix(rng, dim, 0.8), 1.0))
        .collect();
    LindbladModel::new(h, channels).expect("random model is valid by construction")
}

/// Random chain with every off-diagonal rate in `[0.1, 2]` and log
/// sensitivities in `[−2, 2]`. All rates positive makes it irreducible.
pub fn random_chain<R: Rng + ?Sized>(rng: &mut R, states: usize) -> ClassicalChain {
    let mut rates = vec![vec![0.0; states]; states];
    let mut kappa = vec![vec![0.0; states]; states];
    for j in 0..states {
        for i in 0..states {
            if i != j {
                rates[j][i] = rng.random_range(0.1..=2.0);
                kappa[j][i] = rng.random_range(-2.0..=2.0);
            }
        }
    }
    ClassicalChain::new(rates, kappa).expect("random chain is valid by construction")
}
