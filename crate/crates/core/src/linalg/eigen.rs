//! Eigenvalue routines for small dense non-Hermitian matrices.
//!
//! Production code never needs a full eigendecomposition; these routines serve
//! as independent oracles for the Drazin and Fisher-information paths.

use crate::error::{Error, Result};

use super::lu::{LuFactors, ZERO_EIGENVALUE};
use super::matrix::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};

const MAX_ITERATIONS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-8;
const CLUSTER_TOL: f64 = 1e-6;

/// Complete eigendecomposition with biorthonormal left and right vectors.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors.
    pub right: Vec<ComplexVector>,
    /// Left eigenvectors scaled so that `left[j]† right[k] = δ_jk`.
    pub left: Vec<ComplexVector>,
    /// Index of the eigenvalue with `|λ| < 1e-9 ‖A‖`, if any (the smallest one
    /// when several qualify).
    pub zero_index: Option<usize>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of eigenvalues classified as zero.
    pub fn zero_count(&self, scale: f64) -> usize {
        self.eigenvalues
            .iter()
            .filter(|l| l.norm() < ZERO_EIGENVALUE * scale)
            .count()
    }

    /// Largest deviation of `left[j]† right[k]` from `δ_jk`.
    pub fn biorthogonality_error(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let target = if j == k { ONE } else { ZERO };
                worst = worst.max((self.left[j].dot(&self.right[k]) - target).norm());
            }
        }
        worst
    }

    /// `Σ λ_j x_j y_j†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut a = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let term = ComplexMatrix::outer(&self.right[j], &self.left[j]);
            a = &a + &term.scale(self.eigenvalues[j]);
        }
        a
    }

    /// Smallest `|Re λ|` over the non-stationary modes.
    pub fn gap(&self) -> Option<f64> {
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != self.zero_index)
            .map(|(_, l)| l.re.abs())
            .min_by(|a, b| a.total_cmp(b))
    }
}

/// Full eigendecomposition of a diagonalizable matrix.
///
/// Eigenvalues are located as roots of the characteristic polynomial and then
/// refined together with their eigenvectors by shifted inverse iteration.
/// Eigenvalues are returned sorted by decreasing real part.
pub fn full_spectrum(a: &ComplexMatrix) -> Result<Spectrum> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "full_spectrum needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    let scale = a.norm();
    if scale == 0.0 {
        return Ok(Spectrum {
            eigenvalues: vec![ZERO; n],
            right: (0..n).map(|k| ComplexVector::basis(n, k)).collect(),
            left: (0..n).map(|k| ComplexVector::basis(n, k)).collect(),
            zero_index: Some(0),
        });
    }

    let vectors = invariant_vectors(a, 0)?;
    let mut x = ComplexMatrix::zeros(n, n);
    for (k, v) in vectors.iter().enumerate() {
        x.set_column(k, v);
    }
    let x_inv = match LuFactors::new(&x) {
        Ok(lu) => lu.inverse()?,
        Err(_) => return Err(Error::NotDiagonalizable { residual: f64::INFINITY }),
    };
    let projected = x_inv.matmul(&a.matmul(&x)?)?;

    let mut modes: Vec<(C64, ComplexVector, ComplexVector)> = (0..n)
        .map(|j| {
            let row = ComplexVector::from((0..n).map(|c| x_inv[(j, c)].conj()).collect::<Vec<_>>());
            (projected[(j, j)], vectors[j].clone(), row)
        })
        .collect();
    modes.sort_by(|p, q| q.0.re.total_cmp(&p.0.re).then(p.0.im.total_cmp(&q.0.im)));

    let eigenvalues: Vec<C64> = modes.iter().map(|m| m.0).collect();
    let zero_index = eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.norm() < ZERO_EIGENVALUE * scale)
        .min_by(|p, q| p.1.norm().total_cmp(&q.1.norm()))
        .map(|(j, _)| j);
    let spectrum = Spectrum {
        eigenvalues,
        right: modes.iter().map(|m| m.1.clone()).collect(),
        left: modes.into_iter().map(|m| m.2).collect(),
        zero_index,
    };

    let residual = (&spectrum.reconstruct() - a).norm();
    if !(residual <= RECONSTRUCTION_TOL * scale) {
        return Err(Error::NotDiagonalizable { residual });
    }
    Ok(spectrum)
}

/// A full set of unit-norm right eigenvectors of `a`.
fn invariant_vectors(a: &ComplexMatrix, depth: usize) -> Result<Vec<ComplexVector>> {
    let n = a.rows();
    let scale = a.norm();
    if n == 1 || scale == 0.0 {
        return Ok((0..n).map(|k| ComplexVector::basis(n, k)).collect());
    }
    let roots: Vec<C64> = polynomial_roots(&characteristic_polynomial(&a.scale_real(1.0 / scale)))?
        .into_iter()
        .map(|z| z * scale)
        .collect();

    let mut vectors = Vec::with_capacity(n);
    for cluster in cluster_roots(&roots, CLUSTER_TOL * scale) {
        let k = cluster.len();
        let centre = cluster.iter().sum::<C64>() / k as f64;
        let basis = subspace_iteration(a, centre, k)?;
        if k == 1 {
            vectors.push(basis.into_iter().next().expect("one basis vector"));
            continue;
        }
        // Restrict to the cluster's invariant subspace and split it further.
        let mut q = ComplexMatrix::zeros(n, k);
        for (c, v) in basis.iter().enumerate() {
            q.set_column(c, v);
        }
        let restricted = q.adjoint().matmul(&a.matmul(&q)?)?;
        let shifted = &restricted - &ComplexMatrix::identity(k).scale(centre);
        if shifted.norm() <= 1e-9 * scale {
            vectors.extend(basis);
            continue;
        }
        if depth >= 3 {
            return Err(Error::NotDiagonalizable { residual: shifted.norm() });
        }
        for w in invariant_vectors(&shifted, depth + 1)? {
            let v = q.apply(&w)?;
            vectors.push(v.normalized().with_canonical_phase());
        }
    }
    Ok(vectors)
}

/// Orthonormal basis of the `k`-dimensional invariant subspace nearest `shift`.
fn subspace_iteration(a: &ComplexMatrix, shift: C64, k: usize) -> Result<Vec<ComplexVector>> {
    let n = a.rows();
    let scale = a.norm();
    let sigma = shift + C64::new(1e-12, 0.7e-12) * scale;
    let lu = LuFactors::new_regularized(&(a - &ComplexMatrix::identity(n).scale(sigma)))?;
    let mut block: Vec<ComplexVector> = (0..k).map(|c| start_vector(n, c)).collect();
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let next = block.iter().map(|v| lu.solve(v)).collect::<Result<Vec<_>>>()?;
        block = orthonormalize(next)?;
        residual = subspace_residual(a, &block)?;
        if residual <= 1e-13 * scale {
            break;
        }
    }
    if residual > RESIDUAL_TOL * scale {
        return Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual });
    }
    if k == 1 {
        block[0] = block[0].with_canonical_phase();
    }
    Ok(block)
}

/// `‖A Q − Q (Q† A Q)‖` for an orthonormal block `Q`.
fn subspace_residual(a: &ComplexMatrix, block: &[ComplexVector]) -> Result<f64> {
    let images = block.iter().map(|v| a.apply(v)).collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for img in &images {
        let mut r = img.clone();
        for q in block {
            r.axpy(-q.dot(img), q);
        }
        total += r.norm().powi(2);
    }
    Ok(total.sqrt())
}

/// Deterministic, generic starting vector.
fn start_vector(n: usize, c: usize) -> ComplexVector {
    ComplexVector::from(
        (0..n)
            .map(|r| {
                let t = (r * 7 + c * 13 + 1) as f64;
                C64::new((1.3 * t).sin() + 0.2, (0.7 * t).cos())
            })
            .collect::<Vec<_>>(),
    )
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
fn orthonormalize(mut vs: Vec<ComplexVector>) -> Result<Vec<ComplexVector>> {
    for j in 0..vs.len() {
        for _ in 0..2 {
            for i in 0..j {
                let proj = vs[i].dot(&vs[j]);
                let qi = vs[i].clone();
                vs[j].axpy(-proj, &qi);
            }
        }
        let norm = vs[j].norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical("iteration block lost rank".into()));
        }
        vs[j] = vs[j].scale(C64::new(1.0 / norm, 0.0));
    }
    Ok(vs)
}

/// Coefficients `c_0..c_n` (ascending) of the monic characteristic polynomial,
/// by the Faddeev-LeVerrier recursion.
fn characteristic_polynomial(b: &ComplexMatrix) -> Vec<C64> {
    let n = b.rows();
    let mut coeffs = vec![ZERO; n + 1];
    coeffs[n] = ONE;
    let mut m = ComplexMatrix::zeros(n, n);
    let id = ComplexMatrix::identity(n);
    for k in 1..=n {
        m = &(b * &m) + &id.scale(coeffs[n - k + 1]);
        let bm = b * &m;
        coeffs[n - k] = -bm.trace() / k as f64;
    }
    coeffs
}

/// All roots of a monic polynomial by Aberth-Ehrlich iteration.
fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    let radius = 1.0 + coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            C64::from_polar(0.5 * radius, angle)
        })
        .collect();

    let eval = |x: C64| {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };

    for _ in 0..1000 {
        let mut largest_step: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p == ZERO {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d == ZERO {
                        ZERO
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let denom = ONE - ratio * repulsion;
            let step = if denom.norm() > 0.0 && dp != ZERO { ratio / denom } else { ratio };
            if step.is_finite() {
                z[i] -= step;
                largest_step = largest_step.max(step.norm());
            }
        }
        if largest_step <= 1e-15 * radius {
            return Ok(z);
        }
    }
    // Repeated roots converge slowly; the inverse-iteration stage absorbs
    // the remaining error.
    if z.iter().all(|v| v.is_finite()) {
        Ok(z)
    } else {
        Err(Error::Numerical("characteristic polynomial roots diverged".into()))
    }
}

/// Single-link clusters of roots closer than `tol`.
fn cluster_roots(roots: &[C64], tol: f64) -> Vec<Vec<C64>> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (roots[i] - roots[j]).norm() <= tol {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<C64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(roots[i]),
            None => groups.push((r, vec![roots[i]])),
        }
    }
    groups.into_iter().map(|g| g.1).collect()
}

/// Eigenpair of `a` nearest `guess`, by block inverse iteration.
///
/// Iterates a two-vector block through `(A − σ)⁻¹` and extracts Ritz pairs
/// from the projected 2×2 problem. The eigenvalue closest to the shift must
/// be clearly separated from the next one, otherwise the result would be
/// ambiguous and a degeneracy error is returned.
pub fn eig_near_zero(a: &ComplexMatrix, guess: C64) -> Result<(C64, ComplexVector)> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "eig_near_zero needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if n == 1 {
        return Ok((a[(0, 0)], ComplexVector::basis(1, 0)));
    }
    let sigma = guess + C64::new(1e-12, 0.7e-12) * scale;
    let lu = LuFactors::new_regularized(&(a - &ComplexMatrix::identity(n).scale(sigma)))?;

    let mut block = vec![start_vector(n, 0), start_vector(n, 1)];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let next = block.iter().map(|v| lu.solve(v)).collect::<Result<Vec<_>>>()?;
        block = orthonormalize(next)?;

        let images = block.iter().map(|v| a.apply(v)).collect::<Result<Vec<_>>>()?;
        let g = [
            [block[0].dot(&images[0]), block[0].dot(&images[1])],
            [block[1].dot(&images[0]), block[1].dot(&images[1])],
        ];
        let ((nu1, w1), nu2) = ritz_pairs(g, sigma);
        let mut x = block[0].scale(w1[0]);
        x.axpy(w1[1], &block[1]);
        let x = x.normalized();
        let lambda = x.dot(&a.apply(&x)?);
        let mut r = a.apply(&x)?;
        r.axpy(-lambda, &x);
        residual = r.norm();

        if residual <= RESIDUAL_TOL * scale {
            if (nu2 - sigma).norm() <= 2.0 * (nu1 - sigma).norm() + ZERO_EIGENVALUE * scale {
                return Err(Error::Degenerate(format!(
                    "eigenvalues {nu1} and {nu2} are not separated relative to the shift {guess}"
                )));
            }
            return Ok((lambda, x.with_canonical_phase()));
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual })
}

/// Ritz pairs of the 2×2 matrix `g`: the pair nearest `sigma` (with its
/// coefficient vector) and the remaining eigenvalue.
fn ritz_pairs(g: [[C64; 2]; 2], sigma: C64) -> ((C64, [C64; 2]), C64) {
    let half_trace = (g[0][0] + g[1][1]) * 0.5;
    let disc = ((g[0][0] - g[1][1]) * 0.5).powi(2) + g[0][1] * g[1][0];
    let root = disc.sqrt();
    let (mut nu1, mut nu2) = (half_trace + root, half_trace - root);
    if (nu2 - sigma).norm() < (nu1 - sigma).norm() {
        std::mem::swap(&mut nu1, &mut nu2);
    }
    let cand_a = [g[0][1], nu1 - g[0][0]];
    let cand_b = [nu1 - g[1][1], g[1][0]];
    let norm = |w: &[C64; 2]| (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    let w = if norm(&cand_a) >= norm(&cand_b) { cand_a } else { cand_b };
    let w = if norm(&w) > 1e-300 {
        w
    } else if (g[0][0] - sigma).norm() <= (g[1][1] - sigma).norm() {
        [ONE, ZERO]
    } else {
        [ZERO, ONE]
    };
    ((nu1, w), nu2)
}
