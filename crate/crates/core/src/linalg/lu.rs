use crate::error::{Error, Result};

use super::matrix::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};

/// Pivots below `SINGULAR_PIVOT * ‖A‖_F` mark the matrix as singular.
pub const SINGULAR_PIVOT: f64 = 1e-13;

/// Magnitudes below `ZERO_EIGENVALUE * ‖A‖_F` classify a stationary mode.
pub const ZERO_EIGENVALUE: f64 = 1e-9;

/// Partial-pivot LU factorization `P A = L U`.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factorizes `a`, failing when a pivot falls below `1e-13 ‖A‖`.
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        factorize(a, false)
    }

    /// Factorizes `a`, replacing vanishing pivots by `ε ‖A‖`. Meant for
    /// inverse iteration, where the shift may coincide with an eigenvalue.
    pub fn new_regularized(a: &ComplexMatrix) -> Result<Self> {
        factorize(a, true)
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &ComplexVector) -> Result<ComplexVector> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::Shape(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu[(r, c)] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in r + 1..n {
                acc -= self.lu[(r, c)] * x[c];
            }
            x[r] = acc / self.lu[(r, r)];
        }
        Ok(ComplexVector::from(x))
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        let n = self.dim();
        let mut inv = ComplexMatrix::zeros(n, n);
        for c in 0..n {
            let col = self.solve(&ComplexVector::basis(n, c))?;
            inv.set_column(c, &col);
        }
        Ok(inv)
    }
}

fn factorize(a: &ComplexMatrix, regularize: bool) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "LU factorization needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    let scale = a.norm();
    let threshold = SINGULAR_PIVOT * scale;
    let floor = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|r| (r, lu[(r, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p != k {
            for c in 0..n {
                let tmp = lu[(k, c)];
                lu[(k, c)] = lu[(p, c)];
                lu[(p, c)] = tmp;
            }
            perm.swap(k, p);
        }
        if mag <= threshold || mag == 0.0 {
            if regularize {
                lu[(k, k)] = C64::new(floor, 0.0);
            } else {
                return Err(Error::Singular { pivot: mag });
            }
        }
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let factor = lu[(r, k)] / pivot;
            lu[(r, k)] = factor;
            if factor == ZERO {
                continue;
            }
            for c in k + 1..n {
                let u = lu[(k, c)];
                lu[(r, c)] -= factor * u;
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

/// Solves `A x = b` by partial-pivot LU.
pub fn solve(a: &ComplexMatrix, b: &ComplexVector) -> Result<ComplexVector> {
    LuFactors::new(a)?.solve(b)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    LuFactors::new(a)?.inverse()
}

/// Unit-norm vector spanning the one-dimensional right kernel of `a`.
///
/// Uses Gaussian elimination with complete pivoting: the final pivot carries
/// the kernel, and a second pivot below `1e-9 ‖A‖` signals a kernel of
/// dimension two or more.
pub fn null_right(a: &ComplexMatrix) -> Result<ComplexVector> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "null_right needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.norm();
    if n == 1 {
        return if a[(0, 0)].norm() <= ZERO_EIGENVALUE * scale.max(1.0) {
            Ok(ComplexVector::basis(1, 0))
        } else {
            Err(Error::Degenerate("kernel is empty".into()))
        };
    }
    if scale == 0.0 {
        return Err(Error::Degenerate(format!("zero matrix has a {n}-dimensional kernel")));
    }

    let mut u = a.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::with_capacity(n);

    for k in 0..n {
        let mut best = (k, k, -1.0);
        for c in k..n {
            for r in k..n {
                let m = u[(r, c)].norm();
                if m > best.2 {
                    best = (r, c, m);
                }
            }
        }
        let (pr, pc, mag) = best;
        if pr != k {
            for c in 0..n {
                let tmp = u[(k, c)];
                u[(k, c)] = u[(pr, c)];
                u[(pr, c)] = tmp;
            }
        }
        if pc != k {
            for r in 0..n {
                let tmp = u[(r, k)];
                u[(r, k)] = u[(r, pc)];
                u[(r, pc)] = tmp;
            }
            col_perm.swap(k, pc);
        }
        pivots.push(mag);
        if k + 1 == n || mag == 0.0 {
            continue;
        }
        let pivot = u[(k, k)];
        for r in k + 1..n {
            let factor = u[(r, k)] / pivot;
            if factor == ZERO {
                continue;
            }
            for c in k..n {
                let v = u[(k, c)];
                u[(r, c)] -= factor * v;
            }
        }
    }

    let second_smallest = pivots[n - 2];
    if second_smallest <= ZERO_EIGENVALUE * scale {
        return Err(Error::Degenerate(format!(
            "second pivot {second_smallest:.3e} is below the zero tolerance; kernel dimension exceeds one"
        )));
    }

    // Back-substitute U[0..n-1, 0..n-1] y = -U[0..n-1, n-1] with y[n-1] = 1.
    let mut y = vec![ZERO; n];
    y[n - 1] = ONE;
    for r in (0..n - 1).rev() {
        let mut acc = ZERO;
        for c in r + 1..n {
            acc -= u[(r, c)] * y[c];
        }
        y[r] = acc / u[(r, r)];
    }
    let mut x = ComplexVector::zeros(n);
    for (k, &c) in col_perm.iter().enumerate() {
        x[c] = y[k];
    }
    let x = x.normalized().with_canonical_phase();

    let residual = a.apply(&x)?.norm();
    if residual > 1e-10 * scale {
        return Err(Error::Degenerate(format!(
            "no kernel vector: best residual {residual:.3e} exceeds 1e-10 ‖A‖"
        )));
    }
    Ok(x)
}

/// Whether the Hermitian matrix `m + tol·I` admits a Cholesky factorization.
pub fn is_positive_semidefinite(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.rows();
    let mut a = m.hermitian_part();
    for i in 0..n {
        a[(i, i)] += C64::new(tol, 0.0);
    }
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < 0.0 {
            return false;
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = if djj > 0.0 { s / djj } else { ZERO };
        }
    }
    true
}
