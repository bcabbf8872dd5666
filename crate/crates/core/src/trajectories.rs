//! Quantum-jump unraveling of a Lindblad model.
//!
//! The conditional state evolves under `exp(−i H_eff t)` between jumps. A
//! uniform threshold `r` is drawn after every jump and a jump fires in the
//! step where the accumulated no-jump probability first falls below `r`.
//! The survival probability is propagated exactly; only the jump time inside
//! the firing step is discretized, and it is placed at the step midpoint,
//! which makes the scheme second order in `dt`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::linalg::{is_positive_semidefinite, ComplexMatrix, C64, ONE, ZERO};
use crate::models::random::stream_seed;

/// Largest allowed `dt · rate`.
pub const MAX_STEP_RATE: f64 = 0.05;

/// Default `dt · rate`.
pub const DEFAULT_STEP_RATE: f64 = 0.01;

/// One detected jump.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    /// Index into the model's jump channels.
    pub channel: usize,
}

/// Jump record of a single trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub horizon: f64,
    pub events: Vec<JumpEvent>,
    /// `Σ ν_c N_c(T)`.
    pub phi: f64,
    /// Seed of this trajectory's generator.
    pub seed: u64,
}

impl TrajectoryRecord {
    /// Events with channel labels resolved against `m`.
    pub fn labelled_events<'a>(&'a self, m: &'a LindbladModel) -> impl Iterator<Item = (f64, &'a str)> + 'a {
        self.events.iter().map(move |e| (e.time, m.jumps()[e.channel].label.as_str()))
    }
}

/// Upper bound on the total jump rate from any state, `‖Σ L_c†L_c‖_F`.
pub fn max_jump_rate(m: &LindbladModel) -> f64 {
    m.decay_operator().norm()
}

/// `0.01 / max rate`, or `0.01` for a model without jumps.
pub fn default_dt(m: &LindbladModel) -> f64 {
    let rate = max_jump_rate(m);
    if rate > 0.0 {
        DEFAULT_STEP_RATE / rate
    } else {
        DEFAULT_STEP_RATE
    }
}

/// `exp(A)` for a square matrix.
///
/// Uses the closed form for 2×2 matrices and a scaled Taylor series with
/// repeated squaring otherwise.
pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    if a.rows() == 2 {
        return expm2(a);
    }
    let n = a.rows();
    let norm = a.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.scale_real(0.5f64.powi(squarings));
    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=18 {
        term = (&term * &scaled).scale_real(1.0 / k as f64);
        result = &result + &term;
        if term.norm() <= f64::EPSILON * result.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(A) = e^{a} (cosh q · I + sinh q / q · B)` with `A = a I + B`,
/// `tr B = 0` and `q² = −det B`.
fn expm2(m: &ComplexMatrix) -> ComplexMatrix {
    let a = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let b00 = m[(0, 0)] - a;
    let q2 = b00 * b00 + m[(0, 1)] * m[(1, 0)];
    let q = q2.sqrt();
    let (cosh, sinhc) = if q.norm() < 1e-4 {
        (ONE + q2 * 0.5 + q2 * q2 / 24.0, ONE + q2 / 6.0 + q2 * q2 / 120.0)
    } else {
        (q.cosh(), q.sinh() / q)
    };
    let e = a.exp();
    let mut out = ComplexMatrix::zeros(2, 2);
    out[(0, 0)] = e * (cosh + sinhc * b00);
    out[(1, 1)] = e * (cosh - sinhc * b00);
    out[(0, 1)] = e * sinhc * m[(0, 1)];
    out[(1, 0)] = e * sinhc * m[(1, 0)];
    out
}

/// Preallocated buffers for the inner loop.
struct Workspace {
    n: usize,
    tmp: Vec<C64>,
    out: Vec<C64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { n, tmp: vec![ZERO; n * n], out: vec![ZERO; n * n] }
    }

    /// `out = U ρ U†` with all matrices stored column-major.
    fn conjugate(&mut self, u: &[C64], rho: &[C64]) {
        let n = self.n;
        for c in 0..n {
            for r in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += u[r + k * n] * rho[k + c * n];
                }
                self.tmp[r + c * n] = acc;
            }
        }
        for c in 0..n {
            for r in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self.tmp[r + k * n] * u[c + k * n].conj();
                }
                self.out[r + c * n] = acc;
            }
        }
    }

    fn out_trace(&self) -> f64 {
        (0..self.n).map(|i| self.out[i * (self.n + 1)].re).sum()
    }
}

/// Stepper holding the conditional state of one trajectory.
pub struct Unraveling {
    n: usize,
    jumps: Vec<Vec<C64>>,
    decay: Vec<Vec<C64>>,
    dt: f64,
    h_eff: ComplexMatrix,
    u: Vec<C64>,
    u_half: Vec<C64>,
    rho: Vec<C64>,
    survival: f64,
    threshold: f64,
    time: f64,
    rng: ChaCha8Rng,
    work: Workspace,
}

impl Unraveling {
    pub fn new(m: &LindbladModel, rho0: &ComplexMatrix, dt: f64, seed: u64) -> Result<Self> {
        let n = m.dim();
        if rho0.rows() != n || rho0.cols() != n {
            return Err(Error::Shape(format!("initial state must be {n}x{n}")));
        }
        let tr = rho0.trace();
        if (tr - ONE).norm() > 1e-10
            || !rho0.is_hermitian(1e-10)
            || !is_positive_semidefinite(rho0, 1e-10)
        {
            return Err(Error::Input("initial state is not a density matrix".into()));
        }
        let rate = max_jump_rate(m);
        if !(dt > 0.0) || !dt.is_finite() || dt * rate > MAX_STEP_RATE {
            return Err(Error::StepSize { dt, rate });
        }
        let h_eff = m.effective_hamiltonian();
        let propagator = |t: f64| expm(&h_eff.scale(C64::new(0.0, -t))).into_column_major();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let threshold = rng.random::<f64>();
        Ok(Self {
            n,
            jumps: m.jumps().iter().map(|j| j.op.as_slice().to_vec()).collect(),
            decay: m
                .jumps()
                .iter()
                .map(|j| (&j.op.adjoint() * &j.op).into_column_major())
                .collect(),
            dt,
            u: propagator(dt),
            u_half: propagator(dt / 2.0),
            h_eff,
            rho: rho0.as_slice().to_vec(),
            survival: 1.0,
            threshold,
            time: 0.0,
            rng,
            work: Workspace::new(n),
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Current normalized conditional state.
    pub fn state(&self) -> ComplexMatrix {
        ComplexMatrix::from_column_major(self.n, self.n, self.rho.clone()).expect("square buffer")
    }

    fn load_normalized(&mut self, trace: f64) -> Result<()> {
        if !(trace >= 1e-12) {
            return Err(Error::Numerical(format!("conditional state norm collapsed to {trace:.3e}")));
        }
        let inv = 1.0 / trace;
        for (r, o) in self.rho.iter_mut().zip(&self.work.out) {
            *r = o * inv;
        }
        Ok(())
    }

    /// Advances by `step ≤ dt` and returns the jump fired in this step, if any.
    pub fn advance(&mut self, step: f64) -> Result<Option<JumpEvent>> {
        let full = (step - self.dt).abs() <= 1e-12 * self.dt;
        let (u, u_half) = if full {
            (std::mem::take(&mut self.u), std::mem::take(&mut self.u_half))
        } else {
            let p = |t: f64| expm(&self.h_eff.scale(C64::new(0.0, -t))).into_column_major();
            (p(step), p(step / 2.0))
        };
        let result = self.advance_with(step, &u, &u_half);
        if full {
            self.u = u;
            self.u_half = u_half;
        }
        result
    }

    fn advance_with(&mut self, step: f64, u: &[C64], u_half: &[C64]) -> Result<Option<JumpEvent>> {
        self.work.conjugate(u, &self.rho);
        let s = self.work.out_trace();
        if !(s >= 1e-12) {
            return Err(Error::Numerical(format!("no-jump probability collapsed to {s:.3e}")));
        }
        if self.survival * s >= self.threshold {
            self.survival *= s;
            self.load_normalized(s)?;
            self.time += step;
            return Ok(None);
        }

        // The jump fires inside this step; place it at the midpoint.
        self.work.conjugate(u_half, &self.rho);
        let s_half = self.work.out_trace();
        self.load_normalized(s_half)?;
        let channel = self.pick_channel()?;
        let l = std::mem::take(&mut self.jumps[channel]);
        self.work.conjugate(&l, &self.rho);
        self.jumps[channel] = l;
        let jumped = self.work.out_trace();
        self.load_normalized(jumped)?;
        let event = JumpEvent { time: self.time + step / 2.0, channel };

        self.work.conjugate(u_half, &self.rho);
        let s_rest = self.work.out_trace();
        self.load_normalized(s_rest)?;
        self.survival = s_rest;
        self.threshold = self.rng.random::<f64>();
        self.time += step;
        Ok(Some(event))
    }

    /// Channel drawn with probability `∝ Tr[L_c†L_c ρ]`.
    fn pick_channel(&mut self) -> Result<usize> {
        let n = self.n;
        let rates: Vec<f64> = self
            .decay
            .iter()
            .map(|g| {
                let mut tr = 0.0;
                for r in 0..n {
                    for k in 0..n {
                        tr += (g[r + k * n] * self.rho[k + r * n]).re;
                    }
                }
                tr.max(0.0)
            })
            .collect();
        let total: f64 = rates.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerical("jump fired from a state with zero jump rate".into()));
        }
        let mut x = self.rng.random::<f64>() * total;
        for (c, r) in rates.iter().enumerate() {
            if x < *r {
                return Ok(c);
            }
            x -= r;
        }
        Ok(rates.iter().rposition(|r| *r > 0.0).expect("positive total"))
    }
}

/// Simulates one trajectory on `[0, horizon]`.
pub fn simulate(
    m: &LindbladModel,
    rho0: &ComplexMatrix,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Input(format!("horizon must be positive, got {horizon}")));
    }
    let mut traj = Unraveling::new(m, rho0, dt, seed)?;
    let weights = m.weights();
    let steps = (horizon / dt).floor() as u64;
    let mut events = Vec::new();
    let mut phi = 0.0;
    let mut record = |e: Option<JumpEvent>| {
        if let Some(e) = e {
            phi += weights[e.channel];
            events.push(e);
        }
    };
    for _ in 0..steps {
        record(traj.advance(dt)?);
    }
    let rest = horizon - steps as f64 * dt;
    if rest > 1e-12 * horizon {
        record(traj.advance(rest)?);
    }
    Ok(TrajectoryRecord { horizon, events, phi, seed })
}

/// Simulates `count` trajectories in parallel. Trajectory `i` uses
/// `stream_seed(master_seed, i)`, and records come back in index order.
pub fn simulate_ensemble(
    m: &LindbladModel,
    rho0: &ComplexMatrix,
    horizon: f64,
    dt: f64,
    master_seed: u64,
    count: usize,
) -> Result<Vec<TrajectoryRecord>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate(m, rho0, horizon, dt, stream_seed(master_seed, i)))
        .collect()
}

/// Ensemble estimates of the mean and variance rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleStats {
    pub count: usize,
    pub horizon: f64,
    /// Mean of `Φ/T`.
    pub mean_rate: f64,
    /// `T · Var[Φ/T]` with the unbiased sample variance.
    pub variance_rate: f64,
    /// Jackknife standard error of `mean_rate`.
    pub mean_se: f64,
    /// Jackknife standard error of `variance_rate`.
    pub variance_se: f64,
}

/// Mean and variance rate with jackknife standard errors.
pub fn ensemble_stats(records: &[TrajectoryRecord]) -> Result<EnsembleStats> {
    let n = records.len();
    if n < 2 {
        return Err(Error::Input(format!("need at least two records, got {n}")));
    }
    let horizon = records[0].horizon;
    if records.iter().any(|r| (r.horizon - horizon).abs() > 1e-12 * horizon) {
        return Err(Error::Input("records have different horizons".into()));
    }
    let xs: Vec<f64> = records.iter().map(|r| r.phi / horizon).collect();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let var = ss / (nf - 1.0);

    // Leave-one-out: the mean drops (x_i − m)/(n−1) and the sum of squares
    // drops n (x_i − m)² / (n − 1).
    let mean_se = (var / nf).sqrt();
    let variance_se = if n < 3 {
        f64::INFINITY
    } else {
        let loo: Vec<f64> = xs
            .iter()
            .map(|x| (ss - nf / (nf - 1.0) * (x - mean).powi(2)) / (nf - 2.0))
            .collect();
        let loo_mean = loo.iter().sum::<f64>() / nf;
        let spread: f64 = loo.iter().map(|v| (v - loo_mean).powi(2)).sum();
        ((nf - 1.0) / nf * spread).sqrt() * horizon
    };
    Ok(EnsembleStats {
        count: n,
        horizon,
        mean_rate: mean,
        variance_rate: horizon * var,
        mean_se,
        variance_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::two_level::TwoLevelPoint;

    fn record(phi: f64, horizon: f64) -> TrajectoryRecord {
        TrajectoryRecord { horizon, events: vec![], phi, seed: 0 }
    }

    #[test]
    fn two_point_sample() {
        let s = ensemble_stats(&[record(0.0, 1.0), record(2.0, 1.0)]).unwrap();
        assert_eq!(s.mean_rate, 1.0);
        assert_eq!(s.variance_rate, 2.0);
        assert!(s.variance_se.is_infinite());
    }

    #[test]
    fn identical_records_have_zero_variance() {
        let s = ensemble_stats(&vec![record(3.0, 2.0); 5]).unwrap();
        assert_eq!(s.variance_rate, 0.0);
        assert_eq!(s.mean_rate, 1.5);
        assert_eq!(s.variance_se, 0.0);
    }

    #[test]
    fn rejects_mismatched_horizons() {
        assert!(ensemble_stats(&[record(0.0, 1.0), record(1.0, 2.0)]).is_err());
        assert!(ensemble_stats(&[record(0.0, 1.0)]).is_err());
    }

    #[test]
    fn jackknife_matches_brute_force() {
        let phis = [3.0, 7.0, 1.0, 4.0, 4.0, 9.0, 2.0];
        let recs: Vec<_> = phis.iter().map(|&p| record(p, 2.0)).collect();
        let s = ensemble_stats(&recs).unwrap();
        let n = phis.len();
        let loo: Vec<f64> = (0..n)
            .map(|i| {
                let sub: Vec<f64> = phis.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p / 2.0).collect();
                let m = sub.iter().sum::<f64>() / sub.len() as f64;
                2.0 * sub.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (sub.len() as f64 - 1.0)
            })
            .collect();
        let lm = loo.iter().sum::<f64>() / n as f64;
        let se = ((n as f64 - 1.0) / n as f64 * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt();
        assert!((s.variance_se - se).abs() < 1e-12);
    }

    #[test]
    fn closed_form_exponential_matches_series() {
        let a = ComplexMatrix::from_rows(&[
            vec![C64::new(-0.3, 0.2), C64::new(0.0, -1.1)],
            vec![C64::new(0.5, -1.1), C64::new(0.1, -0.4)],
        ])
        .unwrap();
        let mut series = ComplexMatrix::identity(2);
        let mut term = ComplexMatrix::identity(2);
        for k in 1..40 {
            term = (&term * &a).scale_real(1.0 / k as f64);
            series = &series + &term;
        }
        assert!((&expm(&a) - &series).norm() < 1e-14);
        let small = a.scale_real(1e-7);
        let mut big = ComplexMatrix::zeros(3, 3);
        for r in 0..2 {
            for c in 0..2 {
                big[(r, c)] = small[(r, c)];
            }
        }
        let e3 = expm(&big);
        let e2 = expm(&small);
        assert!((e3[(0, 1)] - e2[(0, 1)]).norm() < 1e-15);
    }

    #[test]
    fn dark_state_never_jumps() {
        let m = TwoLevelPoint { delta: 0.4, rabi: 0.0, gamma: 1.0, nbar: 0.0 }.model().unwrap();
        let ground = ComplexMatrix::diagonal(&[ZERO, ONE]);
        let r = simulate(&m, &ground, 50.0, default_dt(&m), 3).unwrap();
        assert!(r.events.is_empty());
        assert_eq!(r.phi, 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = TwoLevelPoint { delta: 0.0, rabi: 1.0, gamma: 1.0, nbar: 0.2 }.model().unwrap();
        let ground = ComplexMatrix::diagonal(&[ZERO, ONE]);
        let a = simulate(&m, &ground, 20.0, 0.01, 42).unwrap();
        let b = simulate(&m, &ground, 20.0, 0.01, 42).unwrap();
        assert_eq!(a, b);
        assert!(!a.events.is_empty());
        assert!(a.events.windows(2).all(|w| w[0].time < w[1].time));
        assert!(a.events.iter().all(|e| e.time >= 0.0 && e.time <= 20.0));
    }

    #[test]
    fn rejects_large_steps() {
        let m = TwoLevelPoint { delta: 0.0, rabi: 1.0, gamma: 10.0, nbar: 0.0 }.model().unwrap();
        let ground = ComplexMatrix::diagonal(&[ZERO, ONE]);
        assert!(matches!(simulate(&m, &ground, 1.0, 0.01, 1), Err(Error::StepSize { .. })));
    }

    #[test]
    fn conditional_state_stays_physical() {
        let m = TwoLevelPoint { delta: 0.7, rabi: 1.3, gamma: 0.9, nbar: 0.5 }.model().unwrap();
        let rho0 = ComplexMatrix::diagonal(&[C64::new(0.3, 0.0), C64::new(0.7, 0.0)]);
        let mut t = Unraveling::new(&m, &rho0, default_dt(&m), 8).unwrap();
        let mut jumps = 0;
        for _ in 0..20_000 {
            jumps += t.advance(default_dt(&m)).unwrap().is_some() as usize;
            let s = t.state();
            assert!((s.trace() - ONE).norm() < 1e-12);
            assert!(is_positive_semidefinite(&s, 1e-10));
        }
        assert!(jumps > 0);
    }

}
