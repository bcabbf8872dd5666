use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix in column-major order.
///
/// Column-major storage makes stack-column vectorization a plain copy of the
/// entry buffer: `vec(M)[c * rows + r] = M[(r, c)]`.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from row slices in reading order.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(Error::Shape("matrix must have at least one entry".into()));
        }
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Shape("rows have unequal lengths".into()));
        }
        Ok(Self::from_fn(nrows, ncols, |r, c| rows[r][c]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Column-major constructor; `data.len()` must equal `rows * cols`.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_column_major(self) -> Vec<C64> {
        self.data
    }

    pub fn column(&self, c: usize) -> ComplexVector {
        ComplexVector::from(self.data[c * self.rows..(c + 1) * self.rows].to_vec())
    }

    pub fn set_column(&mut self, c: usize, v: &ComplexVector) {
        assert_eq!(v.len(), self.rows);
        self.data[c * self.rows..(c + 1) * self.rows].copy_from_slice(v.as_slice());
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(C64::conj).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == ZERO)
    }

    /// `‖M - M†‖_F ≤ tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && (self - &self.adjoint()).norm() <= tol
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == ZERO {
                    continue;
                }
                let col = &self.data[k * self.rows..(k + 1) * self.rows];
                let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
                for (d, &a) in dst.iter_mut().zip(col) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.len() {
            return Err(Error::Shape(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![ZERO; self.rows];
        for (k, &x) in v.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            let col = &self.data[k * self.rows..(k + 1) * self.rows];
            for (o, &a) in out.iter_mut().zip(col) {
                *o += a * x;
            }
        }
        Ok(ComplexVector::from(out))
    }

    /// Row vector `u† M`, returned as the column vector `M† u`.
    pub fn apply_left(&self, u: &ComplexVector) -> Result<ComplexVector> {
        if self.rows != u.len() {
            return Err(Error::Shape(format!(
                "cannot left-apply vector of length {} to {}x{} matrix",
                u.len(),
                self.rows,
                self.cols
            )));
        }
        let out = (0..self.cols)
            .map(|c| {
                self.data[c * self.rows..(c + 1) * self.rows]
                    .iter()
                    .zip(u.iter())
                    .map(|(&a, &x)| x.conj() * a)
                    .sum::<C64>()
                    .conj()
            })
            .collect::<Vec<_>>();
        Ok(ComplexVector::from(out))
    }

    /// Outer product `x y†`.
    pub fn outer(x: &ComplexVector, y: &ComplexVector) -> Self {
        Self::from_fn(x.len(), y.len(), |r, c| x[r] * y[c].conj())
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "elementwise operation on mismatched shapes"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector dimension must be positive");
        Self(vec![ZERO; n])
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[k] = ONE;
        v
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    /// Hilbert-Schmidt pairing `⟨self, other⟩ = Σ conj(self_i) other_i`.
    pub fn dot(&self, other: &Self) -> C64 {
        assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, &b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.iter().map(|&x| x * s).collect())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn axpy(&mut self, a: C64, x: &Self) {
        assert_eq!(self.len(), x.len());
        for (y, &xi) in self.0.iter_mut().zip(&x.0) {
            *y += a * xi;
        }
    }

    /// Rotates the phase so the largest-magnitude entry is real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        let pivot = self
            .0
            .iter()
            .copied()
            .fold(ZERO, |best, x| if x.norm() > best.norm() { x } else { best });
        if pivot == ZERO {
            return self.clone();
        }
        self.scale(pivot.conj() / pivot.norm())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl From<Vec<C64>> for ComplexVector {
    fn from(v: Vec<C64>) -> Self {
        assert!(!v.is_empty(), "vector dimension must be positive");
        Self(v)
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: Self) -> ComplexVector {
        assert_eq!(self.len(), rhs.len());
        ComplexVector(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: Self) -> ComplexVector {
        assert_eq!(self.len(), rhs.len());
        ComplexVector(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

/// Stack-column vectorization of a square matrix.
pub fn vectorize(m: &ComplexMatrix) -> Result<ComplexVector> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "vectorize expects a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(ComplexVector(m.as_slice().to_vec()))
}

/// Inverse of [`vectorize`]; the length must be a perfect square.
pub fn devectorize(v: &ComplexVector) -> Result<ComplexMatrix> {
    let n = square_root_dim(v.len())?;
    ComplexMatrix::from_column_major(n, n, v.as_slice().to_vec())
}

pub(crate) fn square_root_dim(len: usize) -> Result<usize> {
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len || n == 0 {
        return Err(Error::Shape(format!("{len} is not a perfect square")));
    }
    Ok(n)
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for l in 0..bc {
                for k in 0..br {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Matrix of the superoperator `ρ ↦ A ρ B`, i.e. `Bᵀ ⊗ A`.
pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    kron(&b.transpose(), a)
}

/// Row vector `⟨⟨1|`, the vectorized identity of an `n`-dimensional space.
pub fn vectorized_identity(n: usize) -> ComplexVector {
    vectorize(&ComplexMatrix::identity(n)).expect("identity is square")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vectorize_stacks_columns() {
        let (a, b, cc, d) = (c(1.0, 0.0), c(2.0, 0.5), c(3.0, -1.0), c(4.0, 0.0));
        let m = ComplexMatrix::from_rows(&[vec![a, b], vec![cc, d]]).unwrap();
        let v = vectorize(&m).unwrap();
        assert_eq!(v.as_slice(), &[a, cc, b, d]);
    }

    #[test]
    fn vectorize_identity() {
        let v = vectorize(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(v.as_slice(), &[ONE, ZERO, ZERO, ONE]);
    }

    #[test]
    fn vectorize_rejects_non_square() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(vectorize(&m), Err(Error::Shape(_))));
        assert!(devectorize(&ComplexVector::zeros(3)).is_err());
    }

    #[test]
    fn identity_kron_identity() {
        let i4 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(i4, ComplexMatrix::identity(4));
    }

    #[test]
    fn lowering_operator_superoperator_has_single_entry() {
        // σ₋ = |g⟩⟨e| with the excited state first: entry (1, 0).
        let mut sm = ComplexMatrix::zeros(2, 2);
        sm[(1, 0)] = ONE;
        let k = kron(&sm.conj(), &sm);
        // vec(σ₋ ρ σ₊) = ρ_ee vec(|g⟩⟨g|): ρ_ee is index 0, |g⟩⟨g| is index 3.
        for r in 0..4 {
            for cc in 0..4 {
                let expected = if (r, cc) == (3, 0) { ONE } else { ZERO };
                assert_eq!(k[(r, cc)], expected, "entry ({r},{cc})");
            }
        }
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = ComplexMatrix::from_rows(&[vec![c(1.0, 1.0), c(0.0, 2.0)], vec![c(3.0, 0.0), c(-1.0, 0.5)]])
            .unwrap();
        let ad = a.adjoint();
        assert_eq!(ad[(0, 1)], c(3.0, 0.0));
        assert_eq!(ad[(1, 0)], c(0.0, -2.0));
        let p = &a * &ComplexMatrix::identity(2);
        assert_eq!(p, a);
        let h = &a * &ad;
        assert!(h.is_hermitian(1e-14));
    }

    #[test]
    fn apply_left_matches_adjoint_apply() {
        let a = ComplexMatrix::from_fn(3, 3, |r, cc| c(r as f64 - cc as f64, (r * cc) as f64));
        let u = ComplexVector::from(vec![c(1.0, 2.0), c(0.0, -1.0), c(0.5, 0.5)]);
        let left = a.apply_left(&u).unwrap();
        let direct = a.adjoint().apply(&u).unwrap();
        assert!((&left - &direct).norm() < 1e-14);
    }

    #[test]
    fn canonical_phase() {
        let v = ComplexVector::from(vec![c(0.0, 2.0), c(0.0, 1.0)]);
        let w = v.with_canonical_phase();
        assert!((w[0] - c(2.0, 0.0)).norm() < 1e-15);
        assert!((w[1] - c(1.0, 0.0)).norm() < 1e-15);
    }
}
