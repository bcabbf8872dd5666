//! Ingredients of the response-kinetic uncertainty bound
//! `(∂θ⟨φ⟩)² / ⟨⟨φ⟩⟩ ≤ 𝖺²max 𝒜 + 𝒵`.

use crate::error::{Error, Result};
use crate::lindblad::{
    perturbation_from_parts, LindbladModel, ParametrizedModel, PerturbationOperators,
};
use crate::linalg::{devectorize, eig_near_zero, ComplexMatrix, C64, ZERO};
use crate::steady_fcs::{real_part, response_at, GeneratorBundle, Response, SteadyPoint};

/// Denominators below this value leave an efficiency undefined.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Variance rates below this value exclude a point.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Step of the mixed second difference in [`qfi_oracle`].
pub const ORACLE_STEP: f64 = 1e-4;

/// Structural sufficient conditions detected from the perturbation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SufficientConditions {
    /// No jump operator depends on `θ`, so `𝖺²max = 𝒳 = 0`.
    pub hamiltonian_only: bool,
    /// `H` is fixed and every `∂θL_c` is a real multiple of `L_c`, so `𝒵 = 0`.
    pub scaled_jumps: bool,
}

/// Every term of the bound at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct RkurReport {
    pub theta: f64,
    pub mean_rate: f64,
    pub variance_rate: f64,
    pub response: Response,
    /// `(∂θ⟨φ⟩)² / ⟨⟨φ⟩⟩`
    pub lhs: f64,
    /// Dynamical activity `𝒜`.
    pub da: f64,
    pub x_term: f64,
    pub z1: C64,
    pub z2: C64,
    /// `Re(𝒵₁ + 𝒵₂)`
    pub z: f64,
    pub a2max: f64,
    /// Label of the channel attaining `𝖺²max`, if any channel contributes.
    pub a2max_channel: Option<String>,
    /// `𝖺²max 𝒜 + 𝒵`
    pub rhs: f64,
    /// `𝒳 + 𝒵`
    pub qfi_rate: f64,
    pub eta: Option<f64>,
    pub eta_z: Option<f64>,
    pub eta_a: Option<f64>,
    pub flags: SufficientConditions,
}

impl RkurReport {
    /// Whether the bound fails beyond the `1e-9` roundoff allowance.
    pub fn is_violation(&self) -> bool {
        self.lhs > self.rhs + 1e-9 * self.rhs.abs().max(1.0)
    }
}

/// `𝒜 = Σ_c Tr[L_c π L_c†]`.
pub fn dynamical_activity(b: &GeneratorBundle, m: &LindbladModel) -> f64 {
    m.jumps().iter().map(|j| jump_rate(&j.op, &j.op, &b.pi)).sum()
}

/// `Re Tr[A π B†]`.
fn jump_rate(a: &ComplexMatrix, b: &ComplexMatrix, pi: &ComplexMatrix) -> f64 {
    (&(a * pi) * &b.adjoint()).trace().re
}

/// `𝖺²max = 4 max_c Tr[∂L_c π ∂L_c†] / Tr[L_c π L_c†]` with the maximizing
/// channel. Channels with vanishing rate and vanishing sensitivity are
/// skipped.
///
/// When `∂L_c = c L_c` the ratio is `|c|²` independently of `π`, which is
/// used directly so that channels with rates near underflow stay exact.
pub fn perturbative_rate(
    b: &GeneratorBundle,
    pert: &PerturbationOperators,
    m: &LindbladModel,
) -> Result<(f64, Option<String>)> {
    let mut best: (f64, Option<String>) = (0.0, None);
    for (j, dl) in m.jumps().iter().zip(&pert.djumps) {
        let den = jump_rate(&j.op, &j.op, &b.pi);
        let ratio = match proportionality(dl, &j.op) {
            Some(c) if den > 0.0 => 4.0 * c.norm_sqr(),
            Some(_) => continue,
            None => {
                let num = jump_rate(dl, dl, &b.pi);
                if den <= f64::MIN_POSITIVE {
                    if num <= f64::MIN_POSITIVE {
                        continue;
                    }
                    return Err(Error::IllPosedPerturbation { channel: j.label.clone() });
                }
                4.0 * num / den
            }
        };
        if ratio > best.0 {
            best = (ratio, Some(j.label.clone()));
        }
    }
    Ok(best)
}

/// `𝒳 = 4 Σ_c Tr[∂L_c π ∂L_c†]`.
pub fn x_term(b: &GeneratorBundle, pert: &PerturbationOperators) -> f64 {
    4.0 * pert.djumps.iter().map(|d| jump_rate(d, d, &b.pi)).sum::<f64>()
}

/// `(𝒵₁, 𝒵₂) = (−4⟨⟨1|K̂₁L̂⁺K̂₂|π⟩⟩, −4⟨⟨1|K̂₂L̂⁺K̂₁|π⟩⟩)`.
pub fn z_terms(b: &GeneratorBundle, pert: &PerturbationOperators) -> Result<(C64, C64)> {
    let z1 = b.drazin_pairing(&pert.k1, &pert.k2)? * -4.0;
    let z2 = b.drazin_pairing(&pert.k2, &pert.k1)? * -4.0;
    Ok((z1, z2))
}

/// QFI rate `𝒳 + 𝒵`, rejecting negative values beyond roundoff.
pub fn qfi_rate(x: f64, z: f64) -> Result<f64> {
    let q = x + z;
    if q < -1e-9 * (x.abs() + z.abs()).max(1.0) {
        return Err(Error::Consistency(format!("negative Fisher-information rate {q:.3e}")));
    }
    Ok(q)
}

/// Detects the structural sufficient conditions.
pub fn sufficient_conditions(pert: &PerturbationOperators, m: &LindbladModel) -> SufficientConditions {
    let hamiltonian_only = pert.is_hamiltonian_only();
    let scaled = pert.dh.is_zero()
        && m.jumps().iter().zip(&pert.djumps).all(|(j, d)| is_real_multiple(d, &j.op));
    SufficientConditions { hamiltonian_only, scaled_jumps: scaled }
}

/// Whether `d = c·l` for a real `c`.
fn is_real_multiple(d: &ComplexMatrix, l: &ComplexMatrix) -> bool {
    match proportionality(d, l) {
        Some(c) => c.im.abs() <= 1e-10 * c.norm(),
        None => false,
    }
}

/// The scalar `c` with `d = c·l`, checked entrywise to `1e-10` relative.
fn proportionality(d: &ComplexMatrix, l: &ComplexMatrix) -> Option<C64> {
    if d.is_zero() {
        return Some(ZERO);
    }
    let ln = l.norm();
    if ln == 0.0 {
        return None;
    }
    let overlap: C64 = l.as_slice().iter().zip(d.as_slice()).map(|(a, b)| a.conj() * b).sum();
    let c = overlap / (ln * ln);
    let tol = 1e-10 * d.max_abs();
    l.as_slice()
        .iter()
        .zip(d.as_slice())
        .all(|(a, b)| (b - a * c).norm() <= tol)
        .then_some(c)
}

/// Evaluates every term of the bound for the family `p` at `θ`.
///
/// `weights` overrides the model's observable weights. Points whose
/// variance rate falls below `1e-12` are rejected with
/// [`Error::DegenerateVariance`].
pub fn evaluate_bound(
    p: &ParametrizedModel,
    theta: f64,
    weights: Option<&[f64]>,
) -> Result<RkurReport> {
    let mut model = p.model(theta)?;
    if let Some(w) = weights {
        model = model.with_weights(w)?;
    }
    let point = SteadyPoint::new(model)?;
    let mean_rate = point.mean_rate()?;
    let variance_rate = point.variance_rate()?;
    if !(variance_rate >= VARIANCE_FLOOR) {
        return Err(Error::DegenerateVariance { variance: variance_rate });
    }
    let response = response_at(p, theta, weights, &point)?;

    let pert = perturbation_from_parts(&point.model, &p.derivative(theta)?)?;
    let b = &point.bundle;
    let da = dynamical_activity(b, &point.model);
    let (a2max, a2max_channel) = perturbative_rate(b, &pert, &point.model)?;
    let x = x_term(b, &pert);
    let (z1, z2) = z_terms(b, &pert)?;
    if (z2 - z1.conj()).norm() > 1e-8 * z1.norm().max(1.0) {
        return Err(Error::Consistency(format!("Z2 = {z2} is not the conjugate of Z1 = {z1}")));
    }
    let z = (z1 + z2).re;
    let qfi = qfi_rate(x, z)?;

    let lhs = response.value * response.value / variance_rate;
    let rhs = a2max * da + z;
    let ratio = |den: f64| if den.abs() >= RATIO_FLOOR { Some(lhs / den) } else { None };
    Ok(RkurReport {
        theta,
        mean_rate,
        variance_rate,
        response,
        lhs,
        da,
        x_term: x,
        z1,
        z2,
        z,
        a2max,
        a2max_channel,
        rhs,
        qfi_rate: qfi,
        eta: ratio(rhs),
        eta_z: ratio(z),
        eta_a: ratio(a2max * da),
        flags: sufficient_conditions(&pert, &point.model),
    })
}

/// Near-zero eigenvalue of the tilted generator `𝓛^(θ₁,θ₂)`.
///
/// The eigenvector comes from inverse iteration; the eigenvalue is then
/// recovered from the trace identity `Tr[𝓛 X] = λ Tr X`, which reduces to
/// `Tr[M X]` with an operator `M` that vanishes at `θ₁ = θ₂`. This keeps
/// the relative precision of `λ` even when `|λ| ≪ ‖L̂‖`.
pub fn tilted_eigenvalue(p: &ParametrizedModel, theta1: f64, theta2: f64) -> Result<C64> {
    let m1 = p.model(theta1)?;
    let m2 = p.model(theta2)?;
    if m1 == m2 {
        return Ok(ZERO);
    }
    let gen = crate::lindblad::build_tilted_generator(p, theta1, theta2)?;
    let (_, v) = eig_near_zero(&gen, ZERO)?;
    let x = devectorize(&v)?;
    let trace = x.trace();
    if trace.norm() < 1e-8 * x.norm() {
        return Err(Error::Numerical("tilted eigenvector is nearly traceless".into()));
    }

    let mut m = (m1.hamiltonian() - m2.hamiltonian()).scale(-crate::linalg::I);
    for (j1, j2) in m1.jumps().iter().zip(m2.jumps()) {
        let d = &j1.op - &j2.op;
        let l2 = &j2.op;
        m = &m - &(&d.adjoint() * &d).scale_real(0.5);
        m = &m + &(&(&l2.adjoint() * &d) - &(&d.adjoint() * l2)).scale_real(0.5);
    }
    Ok((&m * &x).trace() / trace)
}

/// Fisher-information rate `4 ∂θ₁∂θ₂ Re λ(θ₁,θ₂)` by a central mixed
/// difference at step `1e-4`. Independent of the Drazin route.
pub fn qfi_oracle(p: &ParametrizedModel, theta: f64) -> Result<f64> {
    qfi_oracle_with_step(p, theta, ORACLE_STEP)
}

pub fn qfi_oracle_with_step(p: &ParametrizedModel, theta: f64, h: f64) -> Result<f64> {
    let lam = |a: f64, b: f64| tilted_eigenvalue(p, theta + a, theta + b).map(|z| z.re);
    let mixed = lam(h, h)? - lam(h, -h)? - lam(-h, h)? + lam(-h, -h)?;
    Ok(4.0 * mixed / (4.0 * h * h))
}

/// The bound ingredients `(𝒳, 𝒵)` from the Drazin route, without the
/// counting statistics.
pub fn fisher_terms(p: &ParametrizedModel, theta: f64) -> Result<(f64, f64)> {
    let point = SteadyPoint::new(p.model(theta)?)?;
    let pert = perturbation_from_parts(&point.model, &p.derivative(theta)?)?;
    let x = x_term(&point.bundle, &pert);
    let (z1, z2) = z_terms(&point.bundle, &pert)?;
    let z = real_part(z1 + z2, "inter-transition term")?;
    Ok((x, z))
}
