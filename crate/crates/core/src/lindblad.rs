//! Lindblad models and their vectorized superoperators.
//!
//! All superoperators act on column-stacked density matrices, so that
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{sandwich, ComplexMatrix, I};

/// Default central-difference step for parameter derivatives.
pub const DEFAULT_STEP: f64 = 1e-6;

const HERMITICITY_TOL: f64 = 1e-12;

/// A jump channel: its operator `L_c` and the weight `ν_c` it adds to the
/// counted observable on each jump.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpChannel {
    pub label: String,
    pub op: ComplexMatrix,
    pub weight: f64,
}

impl JumpChannel {
    pub fn new(label: impl Into<String>, op: ComplexMatrix, weight: f64) -> Self {
        Self { label: label.into(), op, weight }
    }
}

/// Hamiltonian plus jump channels, with `ħ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    dim: usize,
    hamiltonian: ComplexMatrix,
    jumps: Vec<JumpChannel>,
}

impl LindbladModel {
    /// Validates shapes, finiteness and Hermiticity of the Hamiltonian.
    pub fn new(hamiltonian: ComplexMatrix, jumps: Vec<JumpChannel>) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(Error::InvalidModel(format!(
                "Hamiltonian is {}x{}, expected square",
                hamiltonian.rows(),
                hamiltonian.cols()
            )));
        }
        let dim = hamiltonian.rows();
        if !hamiltonian.is_finite() {
            return Err(Error::InvalidModel("Hamiltonian has non-finite entries".into()));
        }
        let h_scale = hamiltonian.norm().max(1.0);
        if !hamiltonian.is_hermitian(HERMITICITY_TOL * h_scale) {
            return Err(Error::InvalidModel("Hamiltonian is not Hermitian".into()));
        }
        for j in &jumps {
            if j.op.rows() != dim || j.op.cols() != dim {
                return Err(Error::InvalidModel(format!(
                    "jump `{}` is {}x{}, Hamiltonian is {dim}x{dim}",
                    j.label,
                    j.op.rows(),
                    j.op.cols()
                )));
            }
            if !j.op.is_finite() || !j.weight.is_finite() {
                return Err(Error::InvalidModel(format!("jump `{}` is not finite", j.label)));
            }
        }
        Ok(Self { dim, hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[JumpChannel] {
        &self.jumps
    }

    pub fn weights(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.weight).collect()
    }

    /// Replaces the observable weights, one per channel.
    pub fn with_weights(mut self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.jumps.len() {
            return Err(Error::Input(format!(
                "{} weights given for {} channels",
                weights.len(),
                self.jumps.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Input("weights must be finite".into()));
        }
        for (j, &w) in self.jumps.iter_mut().zip(weights) {
            j.weight = w;
        }
        Ok(self)
    }

    /// `Σ_c L_c† L_c`.
    pub fn decay_operator(&self) -> ComplexMatrix {
        let mut g = ComplexMatrix::zeros(self.dim, self.dim);
        for j in &self.jumps {
            g = &g + &(&j.op.adjoint() * &j.op);
        }
        g
    }

    /// `H − (i/2) Σ_c L_c† L_c`.
    pub fn effective_hamiltonian(&self) -> ComplexMatrix {
        &self.hamiltonian - &self.decay_operator().scale(I * 0.5)
    }
}

/// Parameter derivatives `∂θH` and `∂θL_c` at a fixed `θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDerivative {
    pub dh: ComplexMatrix,
    pub djumps: Vec<ComplexMatrix>,
}

pub type ModelBuilder = Arc<dyn Fn(f64) -> Result<LindbladModel> + Send + Sync>;
pub type DerivativeBuilder = Arc<dyn Fn(f64) -> Result<ModelDerivative> + Send + Sync>;

/// A family of models indexed by a real parameter `θ`.
#[derive(Clone)]
pub struct ParametrizedModel {
    builder: ModelBuilder,
    derivative: Option<DerivativeBuilder>,
    step: f64,
}

impl fmt::Debug for ParametrizedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametrizedModel")
            .field("analytic_derivative", &self.derivative.is_some())
            .field("step", &self.step)
            .finish()
    }
}

impl ParametrizedModel {
    pub fn new(builder: impl Fn(f64) -> Result<LindbladModel> + Send + Sync + 'static) -> Self {
        Self { builder: Arc::new(builder), derivative: None, step: DEFAULT_STEP }
    }

    pub fn with_analytic_derivative(
        mut self,
        derivative: impl Fn(f64) -> Result<ModelDerivative> + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    /// A copy whose builder emits the given observable weights.
    pub fn with_weights(&self, weights: &[f64]) -> Self {
        let inner = self.builder.clone();
        let weights = weights.to_vec();
        Self {
            builder: Arc::new(move |theta| inner(theta)?.with_weights(&weights)),
            derivative: self.derivative.clone(),
            step: self.step,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn model(&self, theta: f64) -> Result<LindbladModel> {
        (self.builder)(theta)
    }

    /// Analytic derivative when available, central difference otherwise.
    pub fn derivative(&self, theta: f64) -> Result<ModelDerivative> {
        match &self.derivative {
            Some(d) => d(theta),
            None => self.finite_difference_derivative(theta, self.step),
        }
    }

    /// Central-difference derivative at step `h`.
    pub fn finite_difference_derivative(&self, theta: f64, h: f64) -> Result<ModelDerivative> {
        let shifted = |t: f64| {
            self.model(t).map_err(|e| match e {
                Error::Domain(msg) => Error::Domain(format!("stencil point {t}: {msg}")),
                other => other,
            })
        };
        let plus = shifted(theta + h)?;
        let minus = shifted(theta - h)?;
        if plus.jumps.len() != minus.jumps.len() || plus.dim != minus.dim {
            return Err(Error::InvalidModel("model structure changes with the parameter".into()));
        }
        let inv = 1.0 / (2.0 * h);
        let dh = (&plus.hamiltonian - &minus.hamiltonian).scale_real(inv);
        let djumps = plus
            .jumps
            .iter()
            .zip(&minus.jumps)
            .map(|(p, m)| (&p.op - &m.op).scale_real(inv))
            .collect();
        Ok(ModelDerivative { dh, djumps })
    }

    /// Largest relative gap between the analytic derivative and a central
    /// difference at step `h`, or `None` without an analytic derivative.
    pub fn derivative_mismatch(&self, theta: f64, h: f64) -> Result<Option<f64>> {
        let Some(d) = &self.derivative else { return Ok(None) };
        let analytic = d(theta)?;
        let numeric = self.finite_difference_derivative(theta, h)?;
        let mut pairs = vec![(&analytic.dh, &numeric.dh)];
        pairs.extend(analytic.djumps.iter().zip(&numeric.djumps));
        let worst = pairs
            .into_iter()
            .map(|(a, n)| (a - n).norm() / a.norm().max(n.norm()).max(1.0))
            .fold(0.0, f64::max);
        Ok(Some(worst))
    }
}

/// Which counting moment a superoperator encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moment {
    /// `Ĵ = Σ ν_c L_c* ⊗ L_c`
    First,
    /// `𝒫̂ = Σ ν_c² L_c* ⊗ L_c`
    Second,
}

/// Shared assembly of the two-sided generator
/// `ρ ↦ −i H₁ρ + i ρH₂ + Σ_c [L₁ ρ L₂† − ½ L₁†L₁ ρ − ½ ρ L₂†L₂]`.
fn assemble(left: &LindbladModel, right: &LindbladModel) -> Result<ComplexMatrix> {
    if left.dim != right.dim || left.jumps.len() != right.jumps.len() {
        return Err(Error::InvalidModel("tilted models differ in structure".into()));
    }
    let n = left.dim;
    let id = ComplexMatrix::identity(n);
    let mut gen = &sandwich(&left.hamiltonian, &id).scale(-I)
        + &sandwich(&id, &right.hamiltonian).scale(I);
    for (l1, l2) in left.jumps.iter().zip(&right.jumps) {
        let l1 = &l1.op;
        let l2 = &l2.op;
        let l1_dag = l1.adjoint();
        let l2_dag = l2.adjoint();
        gen = &gen + &sandwich(l1, &l2_dag);
        gen = &gen - &sandwich(&(&l1_dag * l1), &id).scale_real(0.5);
        gen = &gen - &sandwich(&id, &(&l2_dag * l2)).scale_real(0.5);
    }
    Ok(gen)
}

/// Vectorized Lindbladian `L̂`.
pub fn build_generator(m: &LindbladModel) -> ComplexMatrix {
    assemble(m, m).expect("a model is structurally compatible with itself")
}

/// Tilted generator `𝓛^(θ₁,θ₂)`, whose near-zero eigenvalue encodes the
/// Fisher information of the jump record.
pub fn build_tilted_generator(
    p: &ParametrizedModel,
    theta1: f64,
    theta2: f64,
) -> Result<ComplexMatrix> {
    let left = p.model(theta1)?;
    if theta1 == theta2 {
        return Ok(build_generator(&left));
    }
    assemble(&left, &p.model(theta2)?)
}

/// Counting superoperator with the model's own weights.
pub fn build_counting_superops(m: &LindbladModel, moment: Moment) -> ComplexMatrix {
    let n = m.dim;
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for j in &m.jumps {
        let w = match moment {
            Moment::First => j.weight,
            Moment::Second => j.weight * j.weight,
        };
        if w != 0.0 {
            out = &out + &sandwich(&j.op, &j.op.adjoint()).scale_real(w);
        }
    }
    out
}

/// `∂θĴ = Σ ν_c (∂L_c ρ L_c† + L_c ρ ∂L_c†)` in vectorized form.
pub fn counting_superop_derivative(m: &LindbladModel, d: &ModelDerivative) -> ComplexMatrix {
    let n = m.dim;
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for (j, dl) in m.jumps.iter().zip(&d.djumps) {
        if j.weight == 0.0 {
            continue;
        }
        let term = &sandwich(dl, &j.op.adjoint()) + &sandwich(&j.op, &dl.adjoint());
        out = &out + &term.scale_real(j.weight);
    }
    out
}

/// Perturbation data at a fixed `θ`.
#[derive(Clone, Debug)]
pub struct PerturbationOperators {
    pub dh: ComplexMatrix,
    pub djumps: Vec<ComplexMatrix>,
    pub h_eff: ComplexMatrix,
    /// `∂θH_eff = ∂θH − (i/2) Σ (∂L_c† L_c + L_c† ∂L_c)`
    pub dh_eff: ComplexMatrix,
    /// `ρ ↦ −i ∂H_eff ρ + Σ ∂L_c ρ L_c†`
    pub k1: ComplexMatrix,
    /// `ρ ↦ i ρ ∂H_eff† + Σ L_c ρ ∂L_c†`
    pub k2: ComplexMatrix,
}

impl PerturbationOperators {
    /// `∂θL̂ = K̂₁ + K̂₂`.
    pub fn generator_derivative(&self) -> ComplexMatrix {
        &self.k1 + &self.k2
    }

    /// Whether every jump operator is independent of `θ`.
    pub fn is_hamiltonian_only(&self) -> bool {
        self.djumps.iter().all(|d| d.is_zero())
    }
}

/// `K̂₁` and `K̂₂` from a model and its derivative.
pub fn perturbation_from_parts(m: &LindbladModel, d: &ModelDerivative) -> Result<PerturbationOperators> {
    let n = m.dim;
    if d.dh.rows() != n || d.dh.cols() != n || d.djumps.len() != m.jumps.len() {
        return Err(Error::InvalidModel("derivative does not match the model structure".into()));
    }
    let id = ComplexMatrix::identity(n);
    let mut ddecay = ComplexMatrix::zeros(n, n);
    for (j, dl) in m.jumps.iter().zip(&d.djumps) {
        if dl.rows() != n || dl.cols() != n {
            return Err(Error::InvalidModel(format!("derivative of `{}` has wrong shape", j.label)));
        }
        ddecay = &ddecay + &(&(&dl.adjoint() * &j.op) + &(&j.op.adjoint() * dl));
    }
    let dh_eff = &d.dh - &ddecay.scale(I * 0.5);
    let mut k1 = sandwich(&dh_eff, &id).scale(-I);
    let mut k2 = sandwich(&id, &dh_eff.adjoint()).scale(I);
    for (j, dl) in m.jumps.iter().zip(&d.djumps) {
        k1 = &k1 + &sandwich(dl, &j.op.adjoint());
        k2 = &k2 + &sandwich(&j.op, &dl.adjoint());
    }
    Ok(PerturbationOperators {
        dh: d.dh.clone(),
        djumps: d.djumps.clone(),
        h_eff: m.effective_hamiltonian(),
        dh_eff,
        k1,
        k2,
    })
}

/// Perturbation superoperators of `p` at `θ`.
pub fn build_perturbation(p: &ParametrizedModel, theta: f64) -> Result<PerturbationOperators> {
    let m = p.model(theta)?;
    let d = p.derivative(theta)?;
    perturbation_from_parts(&m, &d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{devectorize, full_spectrum, vectorize, vectorized_identity, C64, ZERO};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_minus() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap()
    }

    fn two_level(delta: f64, omega: f64, gamma: f64, nbar: f64) -> LindbladModel {
        let h = ComplexMatrix::from_real_rows(&[vec![delta / 2.0, omega], vec![omega, -delta / 2.0]])
            .unwrap();
        let sm = sigma_minus();
        LindbladModel::new(
            h,
            vec![
                JumpChannel::new("emission", sm.scale_real((gamma * (nbar + 1.0)).sqrt()), 1.0),
                JumpChannel::new("absorption", sm.transpose().scale_real((gamma * nbar).sqrt()), 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn generator_matches_printed_two_level_matrix() {
        let (d, o, g, n) = (0.7, 1.3, 0.9, 0.4);
        let l = build_generator(&two_level(d, o, g, n));
        let b = -0.5 * g * (2.0 * n + 1.0);
        let expected = ComplexMatrix::from_rows(&[
            vec![c(-g * (n + 1.0), 0.0), c(0.0, -o), c(0.0, o), c(g * n, 0.0)],
            vec![c(0.0, -o), c(b, d), ZERO, c(0.0, o)],
            vec![c(0.0, o), ZERO, c(b, -d), c(0.0, -o)],
            vec![c(g * (n + 1.0), 0.0), c(0.0, o), c(0.0, -o), c(-g * n, 0.0)],
        ])
        .unwrap();
        assert!((&l - &expected).norm() < 1e-14);
    }

    #[test]
    fn generator_is_trace_preserving() {
        let l = build_generator(&two_level(0.3, 2.0, 1.1, 0.2));
        assert!(l.apply_left(&vectorized_identity(2)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn pure_decay_spectrum() {
        let m = LindbladModel::new(
            ComplexMatrix::zeros(2, 2),
            vec![JumpChannel::new("decay", sigma_minus(), 1.0)],
        )
        .unwrap();
        let s = full_spectrum(&build_generator(&m)).unwrap();
        let mut re: Vec<f64> = s.eigenvalues.iter().map(|l| l.re).collect();
        re.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in re.iter().zip([0.0, -0.5, -0.5, -1.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn counting_superops_match_printed_form() {
        let (g, n) = (1.5, 0.3);
        let m = two_level(0.0, 1.0, g, n).with_weights(&[1.0, -1.0]).unwrap();
        let j = build_counting_superops(&m, Moment::First);
        let p = build_counting_superops(&m, Moment::Second);
        assert!((j[(3, 0)] - c(g * (n + 1.0), 0.0)).norm() < 1e-14);
        assert!((j[(0, 3)] - c(-g * n, 0.0)).norm() < 1e-14);
        assert!((p[(0, 3)] - c(g * n, 0.0)).norm() < 1e-14);
        let diff = &j - &p;
        assert!((diff[(0, 3)] - c(-2.0 * g * n, 0.0)).norm() < 1e-14);
        assert!(diff[(3, 0)].norm() < 1e-14);
        let zero = m.with_weights(&[0.0, 0.0]).unwrap();
        assert!(build_counting_superops(&zero, Moment::First).is_zero());
    }

    #[test]
    fn rejects_non_hermitian_hamiltonian() {
        let h = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(LindbladModel::new(h, vec![]), Err(Error::InvalidModel(_))));
    }

    fn rabi_family() -> ParametrizedModel {
        ParametrizedModel::new(|omega| Ok(two_level(0.4, omega, 1.0, 0.0))).with_analytic_derivative(
            |_| {
                Ok(ModelDerivative {
                    dh: ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
                    djumps: vec![ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)],
                })
            },
        )
    }

    #[test]
    fn rabi_perturbation_superoperators() {
        let pert = build_perturbation(&rabi_family(), 1.0).unwrap();
        let mut k1 = ComplexMatrix::zeros(4, 4);
        let mut k2 = ComplexMatrix::zeros(4, 4);
        for (r, col) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            k1[(r, col)] = -I;
        }
        for (r, col) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
            k2[(r, col)] = I;
        }
        assert!((&pert.k1 - &k1).norm() < 1e-14);
        assert!((&pert.k2 - &k2).norm() < 1e-14);
        assert!(pert.is_hamiltonian_only());
    }

    #[test]
    fn gamma_perturbation_at_zero_temperature() {
        let p = ParametrizedModel::new(|gamma| Ok(two_level(0.0, 1.0, gamma, 0.0)));
        let pert = build_perturbation(&p, 1.0).unwrap();
        let rho = ComplexMatrix::from_rows(&[vec![c(0.3, 0.0), c(0.1, -0.2)], vec![c(0.1, 0.2), c(0.7, 0.0)]])
            .unwrap();
        let got = devectorize(&pert.k1.apply(&vectorize(&rho).unwrap()).unwrap()).unwrap();
        let sm = sigma_minus();
        let sp = sm.adjoint();
        let want = (&(&(&sm * &rho) * &sp) - &(&(&sp * &sm) * &rho)).scale_real(0.5);
        assert!((&got - &want).norm() < 1e-9);
    }

    #[test]
    fn constant_family_has_vanishing_perturbation() {
        let p = ParametrizedModel::new(|_| Ok(two_level(0.2, 1.0, 1.0, 0.5)));
        let pert = build_perturbation(&p, 0.3).unwrap();
        assert!(pert.k1.is_zero() && pert.k2.is_zero());
    }

    #[test]
    fn tilted_generator_reduces_at_coincidence() {
        let p = rabi_family();
        let t = build_tilted_generator(&p, 1.2, 1.2).unwrap();
        assert_eq!(t, build_generator(&p.model(1.2).unwrap()));
    }

    #[test]
    fn tilted_generator_first_derivatives() {
        let p = rabi_family();
        let pert = build_perturbation(&p, 1.2).unwrap();
        let h = 1e-6;
        let d1 = (&build_tilted_generator(&p, 1.2 + h, 1.2).unwrap()
            - &build_tilted_generator(&p, 1.2 - h, 1.2).unwrap())
            .scale_real(0.5 / h);
        let d2 = (&build_tilted_generator(&p, 1.2, 1.2 + h).unwrap()
            - &build_tilted_generator(&p, 1.2, 1.2 - h).unwrap())
            .scale_real(0.5 / h);
        assert!((&d1 - &pert.k1).norm() < 1e-6);
        assert!((&d2 - &pert.k2).norm() < 1e-6);
    }

    #[test]
    fn analytic_derivative_matches_finite_difference() {
        let mismatch = rabi_family().derivative_mismatch(0.8, 1e-5).unwrap().unwrap();
        assert!(mismatch < 1e-6);
    }
}
