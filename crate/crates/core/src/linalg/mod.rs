//! Small dense complex linear algebra.
//!
//! Every matrix in this crate is a per-frequency-bin quantity of dimension 2M
//! or 4M (a handful of microphones), so everything here is plain row-major
//! storage with straightforward O(n^3) kernels.

mod decomp;

pub use decomp::{
    cholesky, gevd_principal, hermitian_eigen, hermitian_factor, hermitian_solve,
    hermitian_solve_many, singular_values, Cholesky, HermitianEigen,
};

use std::ops::{Deref, DerefMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Fixed-length vector of finite complex values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(entries))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![ZERO; len])
    }

    /// Selector vector with a single one at `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[index] = ONE;
        v
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<C64>) -> Self {
        Self(entries)
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    /// Inner product `self^H other`.
    pub fn dot(&self, other: &[C64]) -> C64 {
        inner(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.is_finite())
    }
}

impl Deref for ComplexVector {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl TryFrom<Vec<C64>> for ComplexVector {
    type Error = Error;
    fn try_from(v: Vec<C64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ComplexVector> for Vec<C64> {
    fn from(v: ComplexVector) -> Self {
        v.0
    }
}

/// `x^H y`
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[&[C64]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: bad.len(),
            });
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector((0..self.rows).map(|i| self.get(i, j)).collect())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<ComplexVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok(ComplexVector(
            self.data
                .chunks_exact(self.cols.max(1))
                .take(self.rows)
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Square complex Hermitian matrix with a real, nonnegative diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HermitianRepr", into = "HermitianRepr")]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct HermitianRepr {
    dim: usize,
    entries: Vec<C64>,
}

impl TryFrom<HermitianRepr> for HermitianMatrix {
    type Error = Error;
    fn try_from(r: HermitianRepr) -> Result<Self> {
        HermitianMatrix::new(r.dim, r.entries)
    }
}

impl From<HermitianMatrix> for HermitianRepr {
    fn from(m: HermitianMatrix) -> Self {
        HermitianRepr {
            dim: m.dim,
            entries: m.data,
        }
    }
}

const HERMITIAN_TOL: f64 = 1e-12;

impl HermitianMatrix {
    /// Validates symmetry (relative to the largest entry) and the diagonal,
    /// then stores the exactly symmetrized matrix.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE);
        for i in 0..dim {
            if data[i * dim + i].re < -tol {
                return Err(Error::NotHermitian { row: i, col: i });
            }
            for j in i..dim {
                if (data[i * dim + j] - data[j * dim + i].conj()).norm() > tol {
                    return Err(Error::NotHermitian { row: i, col: j });
                }
            }
        }
        Ok(Self::symmetrize(dim, &data))
    }

    /// `(A + A^H) / 2` with a real, nonnegative diagonal.
    pub fn symmetrize(dim: usize, data: &[C64]) -> Self {
        let mut out = vec![ZERO; dim * dim];
        for i in 0..dim {
            out[i * dim + i] = C64::new(data[i * dim + i].re.max(0.0), 0.0);
            for j in i + 1..dim {
                let v = (data[i * dim + j] + data[j * dim + i].conj()) * 0.5;
                out[i * dim + j] = v;
                out[j * dim + i] = v.conj();
            }
        }
        Self { dim, data: out }
    }

    pub fn from_cmatrix(m: &CMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        Self::new(m.rows(), m.as_slice().to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, v) in values.iter().enumerate() {
            m.data[i * dim + i] = C64::new(v.max(0.0), 0.0);
        }
        m
    }

    /// `scale * v v^H`
    pub fn outer(v: &[C64], scale: f64) -> Self {
        let dim = v.len();
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = v[i] * v[j].conj() * scale;
            }
        }
        Self::symmetrize(dim, &data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_dim(other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> HermitianMatrix {
        assert!(s >= 0.0, "Hermitian PSD scaling must be nonnegative");
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn with_ridge(&self, ridge: f64) -> HermitianMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i].re += ridge;
        }
        m
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<ComplexVector> {
        self.check_dim(v.len())?;
        Ok(ComplexVector(
            self.data
                .chunks_exact(self.dim)
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
        ))
    }

    /// Real quadratic form `w^H M w`.
    pub fn quad_form(&self, w: &[C64]) -> Result<f64> {
        let mw = self.mul_vec(w)?;
        Ok(inner(w, &mw).re)
    }

    /// Block-diagonal `[[M, 0], [0, M]]`.
    pub fn block_diag2(&self) -> HermitianMatrix {
        let n = self.dim;
        let mut out = Self::zeros(2 * n);
        for i in 0..n {
            for j in 0..n {
                let v = self.get(i, j);
                out.data[i * 2 * n + j] = v;
                out.data[(i + n) * 2 * n + j + n] = v;
            }
        }
        out
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }
}

/// Multiplies `v` by a unit phasor so that its first entry with magnitude
/// above `1e-12` becomes real and positive.
pub fn normalize_phase(v: &mut [C64]) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let rot = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= rot;
        }
        if let Some(first) = v.iter_mut().find(|z| z.norm() > 1e-12) {
            first.im = 0.0;
        }
    }
}
