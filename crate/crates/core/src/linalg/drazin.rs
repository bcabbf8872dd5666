use crate::error::{Error, Result};

use super::eigen::Spectrum;
use super::lu::LuFactors;
use super::matrix::{ComplexMatrix, ComplexVector, ONE};

/// Relative tolerance for the Drazin identities.
pub const DRAZIN_TOL: f64 = 1e-10;

/// Drazin pseudoinverse of a generator with a simple zero eigenvalue.
///
/// `pi_vec` and `left_one` are the right and left null vectors, normalized so
/// that `left_one† pi_vec = 1`. The result is `P (L − π 1†)⁻¹ P` with the
/// spectral projector `P = I − π 1†`.
pub fn drazin(
    l: &ComplexMatrix,
    pi_vec: &ComplexVector,
    left_one: &ComplexVector,
) -> Result<ComplexMatrix> {
    let n = l.rows();
    if !l.is_square() || pi_vec.len() != n || left_one.len() != n {
        return Err(Error::Shape(format!(
            "drazin needs a square matrix and matching vectors, got {}x{}, {}, {}",
            l.rows(),
            l.cols(),
            pi_vec.len(),
            left_one.len()
        )));
    }
    let overlap = left_one.dot(pi_vec);
    if (overlap - ONE).norm() > 1e-10 {
        return Err(Error::Precondition(format!(
            "null vectors are not normalized: <1|pi> = {overlap}"
        )));
    }
    let stationary = ComplexMatrix::outer(pi_vec, left_one);
    let shifted = l - &stationary;
    let inv = LuFactors::new(&shifted)?.inverse()?;
    let p = &ComplexMatrix::identity(n) - &stationary;
    Ok(&(&p * &inv) * &p)
}

/// Drazin pseudoinverse from a full eigendecomposition, `Σ_{λ≠0} x y† / λ`.
pub fn drazin_from_spectrum(spectrum: &Spectrum) -> ComplexMatrix {
    let n = spectrum.dim();
    let mut d = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        if Some(j) == spectrum.zero_index {
            continue;
        }
        let term = ComplexMatrix::outer(&spectrum.right[j], &spectrum.left[j]);
        d = &d + &term.scale(spectrum.eigenvalues[j].inv());
    }
    d
}

/// Relative residuals of the five defining Drazin conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrazinResiduals {
    /// `‖L D L − L‖ / ‖L‖`
    pub ldl: f64,
    /// `‖D L D − D‖ / ‖D‖`
    pub dld: f64,
    /// `‖L D − D L‖ / (‖L‖ ‖D‖)`
    pub commute: f64,
    /// `‖D π‖ / (‖D‖ ‖π‖)`
    pub right_null: f64,
    /// `‖1† D‖ / (‖D‖ ‖1‖)`
    pub left_null: f64,
}

impl DrazinResiduals {
    pub fn max(&self) -> f64 {
        [self.ldl, self.dld, self.commute, self.right_null, self.left_null]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

/// Evaluates the Drazin conditions for a candidate `d` of `l`.
pub fn drazin_residuals(
    l: &ComplexMatrix,
    d: &ComplexMatrix,
    pi_vec: &ComplexVector,
    left_one: &ComplexVector,
) -> Result<DrazinResiduals> {
    let rel = |num: f64, den: f64| if den > 0.0 { num / den } else { num };
    let ln = l.norm();
    let dn = d.norm();
    let ld = l.matmul(d)?;
    let dl = d.matmul(l)?;
    Ok(DrazinResiduals {
        ldl: rel((&ld.matmul(l)? - l).norm(), ln),
        dld: rel((&dl.matmul(d)? - d).norm(), dn),
        commute: rel((&ld - &dl).norm(), ln * dn),
        right_null: rel(d.apply(pi_vec)?.norm(), dn * pi_vec.norm()),
        left_null: rel(d.apply_left(left_one)?.norm(), dn * left_one.norm()),
    })
}

/// Fails with a consistency error when any Drazin condition exceeds `1e-10`.
pub fn check_drazin(
    l: &ComplexMatrix,
    d: &ComplexMatrix,
    pi_vec: &ComplexVector,
    left_one: &ComplexVector,
) -> Result<DrazinResiduals> {
    let r = drazin_residuals(l, d, pi_vec, left_one)?;
    if !r.within(DRAZIN_TOL) {
        return Err(Error::Consistency(format!("Drazin conditions violated: {r:?}")));
    }
    Ok(r)
}
