//! Steady states and full counting statistics of vectorized generators.

use crate::error::{Error, Result};
use crate::lindblad::{
    build_counting_superops, build_generator, counting_superop_derivative,
    perturbation_from_parts, LindbladModel, Moment, ParametrizedModel,
};
use crate::linalg::drazin::{drazin_residuals, DrazinResiduals, DRAZIN_TOL};
use crate::linalg::{
    devectorize, drazin, is_positive_semidefinite, null_right, vectorize, vectorized_identity,
    ComplexMatrix, ComplexVector, C64, ONE,
};

/// Tolerance on the imaginary part of trace pairings that must be real.
pub const IMAGINARY_TOL: f64 = 1e-10;

/// Generator with its stationary state and Drazin pseudoinverse.
#[derive(Clone, Debug)]
pub struct GeneratorBundle {
    pub l_hat: ComplexMatrix,
    pub pi: ComplexMatrix,
    pub pi_vec: ComplexVector,
    pub left_one: ComplexVector,
    pub drazin: ComplexMatrix,
    /// Lower bound on the spectral gap, `1/‖L̂⁺‖_F`.
    pub gap_estimate: f64,
}

/// Diagnostic residuals of a bundle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BundleResiduals {
    /// `‖L̂ π‖`
    pub stationarity: f64,
    /// `|Tr π − 1|`
    pub trace: f64,
    /// `‖π − π†‖`
    pub hermiticity: f64,
    pub drazin: DrazinResiduals,
}

/// Solves `L̂ π = 0` with `Tr π = 1` and assembles the Drazin pseudoinverse.
pub fn solve_steady(l_hat: &ComplexMatrix) -> Result<GeneratorBundle> {
    let kernel = null_right(l_hat).map_err(|e| match e {
        Error::Degenerate(msg) => Error::NonUniqueSteadyState(msg),
        other => other,
    })?;
    let n = crate::linalg::matrix::square_root_dim(kernel.len())?;
    let left_one = vectorized_identity(n);
    let trace = left_one.dot(&kernel);
    if trace.norm() < 1e-12 {
        return Err(Error::NonUniqueSteadyState(
            "kernel vector is traceless and cannot be normalized".into(),
        ));
    }
    let raw = devectorize(&kernel.scale(trace.inv()))?;
    let mut pi = raw.hermitian_part();
    let tr = pi.trace().re;
    pi = pi.scale_real(1.0 / tr);
    let pi_vec = vectorize(&pi)?;

    let d = drazin(l_hat, &pi_vec, &left_one).map_err(|e| match e {
        Error::Singular { pivot } => Error::NonUniqueSteadyState(format!(
            "shifted generator is singular (pivot {pivot:.3e})"
        )),
        other => other,
    })?;
    let norm = d.norm();
    let bundle = GeneratorBundle {
        l_hat: l_hat.clone(),
        pi,
        pi_vec,
        left_one,
        gap_estimate: if norm > 0.0 { 1.0 / norm } else { f64::INFINITY },
        drazin: d,
    };
    bundle.check_invariants()?;
    Ok(bundle)
}

impl GeneratorBundle {
    pub fn dim(&self) -> usize {
        self.pi.rows()
    }

    pub fn residuals(&self) -> Result<BundleResiduals> {
        Ok(BundleResiduals {
            stationarity: self.l_hat.apply(&self.pi_vec)?.norm(),
            trace: (self.pi.trace() - ONE).norm(),
            hermiticity: (&self.pi - &self.pi.adjoint()).norm(),
            drazin: drazin_residuals(&self.l_hat, &self.drazin, &self.pi_vec, &self.left_one)?,
        })
    }

    /// Checks stationarity, normalization, Hermiticity, positivity and the
    /// Drazin conditions.
    pub fn check_invariants(&self) -> Result<BundleResiduals> {
        let r = self.residuals()?;
        let scale = self.l_hat.norm().max(1.0);
        if r.stationarity > 1e-10 * scale {
            return Err(Error::Consistency(format!(
                "steady-state residual {:.3e}",
                r.stationarity
            )));
        }
        if r.trace > 1e-12 || r.hermiticity > 1e-12 {
            return Err(Error::Consistency(format!(
                "steady state trace error {:.3e}, Hermiticity error {:.3e}",
                r.trace, r.hermiticity
            )));
        }
        if !is_positive_semidefinite(&self.pi, 1e-10) {
            return Err(Error::Consistency("steady state is not positive semidefinite".into()));
        }
        if !r.drazin.within(DRAZIN_TOL) {
            return Err(Error::Consistency(format!("Drazin conditions violated: {:?}", r.drazin)));
        }
        Ok(r)
    }

    /// `⟨⟨1| A |π⟩⟩`.
    pub fn pairing(&self, a: &ComplexMatrix) -> Result<C64> {
        Ok(self.left_one.dot(&a.apply(&self.pi_vec)?))
    }

    /// `⟨⟨1| A L̂⁺ B |π⟩⟩`.
    pub fn drazin_pairing(&self, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
        let right = self.drazin.apply(&b.apply(&self.pi_vec)?)?;
        let left = a.apply_left(&self.left_one)?;
        Ok(left.dot(&right))
    }
}

/// Real part of `z`, failing when the imaginary part is not negligible.
pub(crate) fn real_part(z: C64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAGINARY_TOL * z.re.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "{what} has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `⟨φ⟩ = ⟨⟨1| Ĵ |π⟩⟩`.
pub fn mean_rate(b: &GeneratorBundle, j_hat: &ComplexMatrix) -> Result<f64> {
    real_part(b.pairing(j_hat)?, "mean rate")
}

/// `⟨⟨φ⟩⟩ = ⟨⟨1| 𝒫̂ |π⟩⟩ − 2 ⟨⟨1| Ĵ L̂⁺ Ĵ |π⟩⟩`.
pub fn variance_rate(b: &GeneratorBundle, j_hat: &ComplexMatrix, p_hat: &ComplexMatrix) -> Result<f64> {
    let z = b.pairing(p_hat)? - b.drazin_pairing(j_hat, j_hat)? * 2.0;
    real_part(z, "variance rate")
}

/// How the reported response was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponseRoute {
    /// Drazin identity with analytic parameter derivatives, confirmed by a
    /// central difference.
    Analytic,
    /// Central difference of the mean rate alone.
    FiniteDifference,
}

/// `∂θ⟨φ⟩` with both evaluation routes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Response {
    pub value: f64,
    pub route: ResponseRoute,
    pub finite_difference: f64,
    pub analytic: Option<f64>,
}

/// Mean rate, variance rate and parameter response at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FcsResult {
    pub mean_rate: f64,
    pub variance_rate: f64,
    pub response: Response,
}

/// Model, bundle and counting superoperators at a fixed parameter value.
#[derive(Clone, Debug)]
pub struct SteadyPoint {
    pub model: LindbladModel,
    pub bundle: GeneratorBundle,
    pub j_hat: ComplexMatrix,
    pub p_hat: ComplexMatrix,
}

impl SteadyPoint {
    pub fn new(model: LindbladModel) -> Result<Self> {
        let bundle = solve_steady(&build_generator(&model))?;
        let j_hat = build_counting_superops(&model, Moment::First);
        let p_hat = build_counting_superops(&model, Moment::Second);
        Ok(Self { model, bundle, j_hat, p_hat })
    }

    pub fn mean_rate(&self) -> Result<f64> {
        mean_rate(&self.bundle, &self.j_hat)
    }

    pub fn variance_rate(&self) -> Result<f64> {
        variance_rate(&self.bundle, &self.j_hat, &self.p_hat)
    }
}

fn weighted_model(p: &ParametrizedModel, theta: f64, weights: Option<&[f64]>) -> Result<LindbladModel> {
    let m = p.model(theta)?;
    match weights {
        Some(w) => m.with_weights(w),
        None => Ok(m),
    }
}

/// Central difference of the mean rate at the family's step.
pub fn response_finite_difference(
    p: &ParametrizedModel,
    theta: f64,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let h = p.step();
    let plus = SteadyPoint::new(weighted_model(p, theta + h, weights)?)?.mean_rate()?;
    let minus = SteadyPoint::new(weighted_model(p, theta - h, weights)?)?.mean_rate()?;
    Ok((plus - minus) / (2.0 * h))
}

/// `⟨⟨1|∂θĴ|π⟩⟩ − ⟨⟨1|Ĵ L̂⁺ ∂θL̂|π⟩⟩` at a precomputed point.
pub fn response_identity(point: &SteadyPoint, d: &crate::lindblad::ModelDerivative) -> Result<f64> {
    let pert = perturbation_from_parts(&point.model, d)?;
    let dj = counting_superop_derivative(&point.model, d);
    let z = point.bundle.pairing(&dj)?
        - point.bundle.drazin_pairing(&point.j_hat, &pert.generator_derivative())?;
    real_part(z, "response")
}

/// Whether two response routes agree.
///
/// The allowance combines a `1e-5` relative tolerance with the roundoff
/// floor of the central difference. The mean rate is a signed sum of jump
/// rates, so its absolute error scales with `scale = Σ_c |ν_c| Tr[L_c π L_c†]`
/// rather than with the (possibly cancelled) mean itself.
pub fn routes_agree(analytic: f64, fd: f64, scale: f64, h: f64) -> bool {
    let floor = 1e2 * f64::EPSILON * scale / h;
    (analytic - fd).abs() <= 1e-5 * analytic.abs().max(fd.abs()) + floor
}

/// `Σ_c |ν_c| Tr[L_c π L_c†]`.
pub fn absolute_weighted_activity(point: &SteadyPoint) -> f64 {
    point
        .model
        .jumps()
        .iter()
        .map(|j| j.weight.abs() * (&(&j.op * &point.bundle.pi) * &j.op.adjoint()).trace().re.abs())
        .sum()
}

/// Response at a precomputed point.
pub fn response_at(
    p: &ParametrizedModel,
    theta: f64,
    weights: Option<&[f64]>,
    point: &SteadyPoint,
) -> Result<Response> {
    let fd = response_finite_difference(p, theta, weights)?;
    if !p.has_analytic_derivative() {
        return Ok(Response {
            value: fd,
            route: ResponseRoute::FiniteDifference,
            finite_difference: fd,
            analytic: None,
        });
    }
    let analytic = response_identity(point, &p.derivative(theta)?)?;
    if !routes_agree(analytic, fd, absolute_weighted_activity(point), p.step()) {
        return Err(Error::DerivativeInconsistency { analytic, finite_difference: fd });
    }
    Ok(Response {
        value: analytic,
        route: ResponseRoute::Analytic,
        finite_difference: fd,
        analytic: Some(analytic),
    })
}

/// `∂θ⟨φ⟩` for the family `p` with observable weights `weights` (the model's
/// own weights when `None`).
pub fn response(p: &ParametrizedModel, theta: f64, weights: Option<&[f64]>) -> Result<Response> {
    let point = SteadyPoint::new(weighted_model(p, theta, weights)?)?;
    response_at(p, theta, weights, &point)
}

/// Mean, variance and response in one pass.
pub fn counting_statistics(
    p: &ParametrizedModel,
    theta: f64,
    weights: Option<&[f64]>,
) -> Result<FcsResult> {
    let point = SteadyPoint::new(weighted_model(p, theta, weights)?)?;
    Ok(FcsResult {
        mean_rate: point.mean_rate()?,
        variance_rate: point.variance_rate()?,
        response: response_at(p, theta, weights, &point)?,
    })
}
