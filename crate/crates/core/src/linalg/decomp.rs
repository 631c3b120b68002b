use super::{normalize_phase, CMatrix, ComplexVector, HermitianMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Lower-triangular factor `L` with `L L^H = M + ridge I`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<C64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor(&self) -> CMatrix {
        CMatrix::from_row_major(self.dim, self.dim, self.lower.clone()).expect("square factor")
    }

    /// Solves `L y = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_lower_in_place(&self, b: &mut [C64]) {
        let n = self.dim;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// Solves `L^H x = y` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_upper_in_place(&self, b: &mut [C64]) {
        let n = self.dim;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i].conj() * b[k];
            }
            b[i] = s / self.lower[i * n + i].re;
        }
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<ComplexVector> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.len(),
            });
        }
        let mut x = rhs.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        Ok(ComplexVector::from_vec_unchecked(x))
    }
}

/// Cholesky factorization of `m + ridge I`. Fails with `SingularMatrix` when a
/// pivot is not safely positive.
pub fn cholesky(m: &HermitianMatrix, ridge: f64) -> Result<Cholesky> {
    let n = m.dim();
    let max_diag = (0..n).map(|i| m.get(i, i).re).fold(0.0, f64::max) + ridge.max(0.0);
    let floor = f64::EPSILON * max_diag;
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = m.get(j, j).re + ridge;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > floor) || !d.is_finite() {
            return Err(Error::SingularMatrix { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(Cholesky { dim: n, lower: l })
}

/// Solves `(m + ridge I) x = rhs`.
pub fn hermitian_solve(m: &HermitianMatrix, rhs: &[C64], ridge: f64) -> Result<ComplexVector> {
    m.check_dim(rhs.len())?;
    cholesky(m, ridge)?.solve(rhs)
}

/// Column-by-column [`hermitian_solve`] for a block right-hand side.
pub fn hermitian_solve_many(m: &HermitianMatrix, rhs: &CMatrix, ridge: f64) -> Result<CMatrix> {
    m.check_dim(rhs.rows())?;
    let chol = cholesky(m, ridge)?;
    let mut out = CMatrix::zeros(rhs.rows(), rhs.cols());
    for j in 0..rhs.cols() {
        let x = chol.solve(&rhs.column(j))?;
        for (i, v) in x.iter().enumerate() {
            out.set(i, j, *v);
        }
    }
    Ok(out)
}

/// Lower-triangular `F` with `F F^H = m` for positive semidefinite `m`.
///
/// Pivots whose magnitude is within `1e-10 * trace / dim` of zero are treated
/// as exact zeros and their column is dropped, so rank-deficient inputs (for
/// instance coincident microphones) reproduce exactly-dependent rows.
pub fn hermitian_factor(m: &HermitianMatrix) -> Result<CMatrix> {
    let n = m.dim();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let tol = 1e-10 * m.trace() / n as f64;
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = m.get(j, j).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d < -tol || !d.is_finite() {
            return Err(Error::NotPositiveSemidefinite { index: j, pivot: d });
        }
        if d <= tol {
            // Remaining entries of this column must also vanish for PSD input.
            for i in j + 1..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                if s.norm() > 10.0 * (tol * m.get(i, i).re.max(tol)).sqrt() {
                    return Err(Error::NotPositiveSemidefinite { index: j, pivot: d });
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    CMatrix::from_row_major(n, n, l)
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> ComplexVector {
        self.vectors.column(k)
    }
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
pub fn hermitian_eigen(m: &HermitianMatrix) -> HermitianEigen {
    let n = m.dim();
    let mut a = m.to_cmatrix();
    let mut v = CMatrix::identity(n);
    let total = a.frobenius_norm();

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v.get(i, order[j]));
    HermitianEigen { values, vectors }
}

// Unitary 2x2 rotation `[[pp, pq], [qp, qq]]` that diagonalizes the
// Hermitian block `[[app, h], [conj(h), aqq]]` under `J^H (.) J`.
fn jacobi_rotation(app: f64, aqq: f64, h: C64) -> Option<[C64; 4]> {
    let mag = h.norm();
    if mag <= 1e-300 || mag < 1e-18 * (app.abs() + aqq.abs()) {
        return None;
    }
    // e^{-i phi} turns the block into a real symmetric one.
    let phase = h.conj() / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    Some([C64::new(c, 0.0), C64::new(s, 0.0), phase * (-s), phase * c])
}

fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, j: &[C64; 4]) {
    for k in 0..m.rows() {
        let mp = m.get(k, p);
        let mq = m.get(k, q);
        m.set(k, p, mp * j[0] + mq * j[2]);
        m.set(k, q, mp * j[1] + mq * j[3]);
    }
}

// One Jacobi step annihilating a[p][q]: a <- J^H a J, v <- v J.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let Some(j) = jacobi_rotation(a.get(p, p).re, a.get(q, q).re, a.get(p, q)) else {
        a.set(p, q, ZERO);
        a.set(q, p, ZERO);
        return;
    };
    rotate_columns(a, p, q, &j);
    rotate_columns(v, p, q, &j);
    for k in 0..a.cols() {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, j[0].conj() * apk + j[2].conj() * aqk);
        a.set(q, k, j[1].conj() * apk + j[3].conj() * aqk);
    }
    a.set(p, q, ZERO);
    a.set(q, p, ZERO);
    a.set(p, p, C64::new(a.get(p, p).re, 0.0));
    a.set(q, q, C64::new(a.get(q, q).re, 0.0));
}

/// Singular values (descending) by one-sided Jacobi orthogonalization of the
/// columns, which keeps small singular values accurate relative to the
/// largest.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut u = m.clone();
    let n = u.cols();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let cp = u.column(p);
                let cq = u.column(q);
                let alpha = cp.norm().powi(2);
                let beta = cq.norm().powi(2);
                let gamma = cp.dot(&cq);
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                if let Some(j) = jacobi_rotation(alpha, beta, gamma) {
                    rotate_columns(&mut u, p, q, &j);
                    rotated = true;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Principal generalized eigenpair of the Hermitian pencil `(a, b)` with `b`
/// positive definite: the `x` maximizing `x^H a x / x^H b x`.
///
/// `b` is whitened by its Cholesky factor, the whitened matrix is
/// diagonalized, and the eigenvector is mapped back. The returned vector has
/// unit norm and its first non-negligible entry is real and positive.
pub fn gevd_principal(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<(f64, ComplexVector)> {
    a.check_dim(b.dim())?;
    let n = a.dim();
    let chol = cholesky(b, 0.0).map_err(|e| match e {
        Error::SingularMatrix { index, pivot } => Error::NotPositiveDefinite { index, pivot },
        other => other,
    })?;

    // W = L^-1 A L^-H, built as L^-1 (L^-1 A)^H since A is Hermitian.
    let mut la = a.to_cmatrix();
    for j in 0..n {
        let mut col = la.column(j);
        chol.solve_lower_in_place(&mut col);
        for i in 0..n {
            la.set(i, j, col[i]);
        }
    }
    let mut w = la.adjoint();
    for j in 0..n {
        let mut col = w.column(j);
        chol.solve_lower_in_place(&mut col);
        for i in 0..n {
            w.set(i, j, col[i]);
        }
    }
    let whitened = HermitianMatrix::symmetrize(n, w.as_slice());
    let eig = hermitian_eigen(&whitened);
    let lambda = eig.values[n - 1];
    let mut x = eig.vector(n - 1);
    chol.solve_upper_in_place(&mut x);
    let norm = x.norm();
    for z in x.iter_mut() {
        *z /= norm;
    }
    normalize_phase(&mut x);
    Ok((lambda, x))
}
