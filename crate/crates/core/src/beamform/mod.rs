//! Binaural MVDR, LCMV and RTF-preserving MVDR beamformers.
//!
//! All filters use the stacked convention `w = [w_L; w_R]` and the response
//! convention `w^H C = g`: the closed form for a constraint set `(C, g)` is
//! `w = R^-1 C (C^H R^-1 C)^-1 g^H`.

mod deltas;
mod filters;

pub use deltas::{
    optimal_deltas, threshold_deltas, DeltaProvenance, ScalingParameters, DEFAULT_DELTA_MAX,
    DEFAULT_DELTA_MIN,
};
pub use filters::{FilterBank, FilterBin};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_solve, hermitian_solve_many, inner, singular_values, CMatrix, ComplexVector,
    HermitianMatrix, C64, ONE, ZERO,
};

/// Minimum ratio of smallest to largest singular value of a constraint matrix.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Default diagonal loading `1e-9 * trace(R) / dim`.
pub fn default_ridge(r: &HermitianMatrix) -> f64 {
    1e-9 * r.trace() / r.dim().max(1) as f64
}

/// Left and right filter vectors for one frequency bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerPair {
    left: ComplexVector,
    right: ComplexVector,
}

impl BeamformerPair {
    pub fn new(left: ComplexVector, right: ComplexVector) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::DimensionMismatch {
                expected: left.len(),
                got: right.len(),
            });
        }
        Ok(Self { left, right })
    }

    /// Reference-microphone selectors `(e_L, e_R)`: ones at indices 0 and M.
    pub fn reference_selector(mics_per_side: usize) -> Self {
        Self {
            left: ComplexVector::unit(2 * mics_per_side, 0),
            right: ComplexVector::unit(2 * mics_per_side, mics_per_side),
        }
    }

    pub fn left(&self) -> &ComplexVector {
        &self.left
    }

    pub fn right(&self) -> &ComplexVector {
        &self.right
    }

    /// The 4M-dimensional stacked filter `[w_L; w_R]`.
    pub fn stacked(&self) -> ComplexVector {
        let mut v = self.left.to_vec();
        v.extend_from_slice(&self.right);
        ComplexVector::from_vec_unchecked(v)
    }

    pub fn from_stacked(w: &[C64]) -> Result<Self> {
        if !w.len().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: w.len() + 1,
                got: w.len(),
            });
        }
        let half = w.len() / 2;
        Ok(Self {
            left: ComplexVector::new(w[..half].to_vec())?,
            right: ComplexVector::new(w[half..].to_vec())?,
        })
    }

    pub fn dim(&self) -> usize {
        self.left.len()
    }
}

/// Block-diagonal 4M x 4M matrix holding two copies of the minimized
/// correlation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedCorrelation {
    block: HermitianMatrix,
}

impl StackedCorrelation {
    pub fn new(block: HermitianMatrix) -> Self {
        Self { block }
    }

    pub fn block(&self) -> &HermitianMatrix {
        &self.block
    }

    /// Per-ear dimension 2M.
    pub fn block_dim(&self) -> usize {
        self.block.dim()
    }

    pub fn dense(&self) -> HermitianMatrix {
        self.block.block_diag2()
    }
}

/// Constraint matrix `C` (columns are constrained directions) and desired
/// responses `g`, so that a feasible filter satisfies `w^H C = g`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    c: CMatrix,
    g: Vec<C64>,
}

impl ConstraintSystem {
    pub fn new(c: CMatrix, g: Vec<C64>) -> Result<Self> {
        if g.len() != c.cols() {
            return Err(Error::DimensionMismatch {
                expected: c.cols(),
                got: g.len(),
            });
        }
        if c.cols() > c.rows() {
            return Err(Error::TooManyConstraints {
                constraints: c.cols(),
                dimension: c.rows(),
            });
        }
        let sv = singular_values(&c);
        let ratio = match (sv.first(), sv.last()) {
            (Some(&max), Some(&min)) if max > 0.0 => min / max,
            (Some(_), Some(_)) => 0.0,
            _ => 1.0,
        };
        if ratio <= RANK_TOLERANCE {
            return Err(Error::RankDeficientConstraints(ratio));
        }
        Ok(Self { c, g })
    }

    /// Single-ear set `[a, B]` with responses `[1, delta]`.
    pub fn single_ear(a: &[C64], b: &[ComplexVector], delta: &[C64]) -> Result<Self> {
        let mut cols: Vec<&[C64]> = vec![a];
        cols.extend(b.iter().map(|v| &v[..]));
        let mut g = vec![ONE];
        g.extend_from_slice(delta);
        Self::new(CMatrix::from_columns(&cols)?, g)
    }

    /// Stacked BMVDR set `C = [[a_L, 0], [0, a_R]]`, `g = [1, 1]`.
    pub fn bmvdr(a_l: &[C64], a_r: &[C64]) -> Result<Self> {
        Self::lcmv(a_l, a_r, &[], &[], &ScalingParameters::empty())
    }

    /// Stacked BLCMV set `C1 = [[a_L, B_L, 0, 0], [0, 0, a_R, B_R]]`,
    /// `g1 = [1, delta_L, 1, delta_R]`.
    pub fn lcmv(
        a_l: &[C64],
        a_r: &[C64],
        b_l: &[ComplexVector],
        b_r: &[ComplexVector],
        delta: &ScalingParameters,
    ) -> Result<Self> {
        let n = check_rtfs(a_l, a_r, b_l, b_r)?;
        delta.check_len(b_l.len())?;
        let p = b_l.len();
        let mut c = CMatrix::zeros(2 * n, 2 * (p + 1));
        for i in 0..n {
            c.set(i, 0, a_l[i]);
            c.set(n + i, p + 1, a_r[i]);
            for q in 0..p {
                c.set(i, 1 + q, b_l[q][i]);
                c.set(n + i, p + 2 + q, b_r[q][i]);
            }
        }
        let mut g = vec![ONE];
        g.extend_from_slice(delta.left());
        g.push(ONE);
        g.extend_from_slice(delta.right());
        Self::new(c, g)
    }

    /// Stacked RTF-preservation set `C2 = [[a_L, B_L, 0], [0, -B_R, a_R]]`,
    /// `g2 = [1, 0, 1]`.
    pub fn rtf_preserving(
        a_l: &[C64],
        a_r: &[C64],
        b_l: &[ComplexVector],
        b_r: &[ComplexVector],
    ) -> Result<Self> {
        let n = check_rtfs(a_l, a_r, b_l, b_r)?;
        let p = b_l.len();
        let mut c = CMatrix::zeros(2 * n, p + 2);
        for i in 0..n {
            c.set(i, 0, a_l[i]);
            c.set(n + i, p + 1, a_r[i]);
            for q in 0..p {
                c.set(i, 1 + q, b_l[q][i]);
                c.set(n + i, 1 + q, -b_r[q][i]);
            }
        }
        let mut g = vec![ONE];
        g.extend(std::iter::repeat_n(ZERO, p));
        g.push(ONE);
        Self::new(c, g)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.c
    }

    pub fn responses(&self) -> &[C64] {
        &self.g
    }

    /// Largest `|w^H c_k - g_k|` over all constraints.
    pub fn max_violation(&self, w: &[C64]) -> f64 {
        (0..self.c.cols())
            .map(|k| (inner(w, &self.c.column(k)) - self.g[k]).norm())
            .fold(0.0, f64::max)
    }
}

fn check_rtfs(
    a_l: &[C64],
    a_r: &[C64],
    b_l: &[ComplexVector],
    b_r: &[ComplexVector],
) -> Result<usize> {
    let n = a_l.len();
    let mismatch = |got: usize| Error::DimensionMismatch { expected: n, got };
    if a_r.len() != n {
        return Err(mismatch(a_r.len()));
    }
    if b_l.len() != b_r.len() {
        return Err(Error::DimensionMismatch {
            expected: b_l.len(),
            got: b_r.len(),
        });
    }
    if let Some(v) = b_l.iter().chain(b_r).find(|v| v.len() != n) {
        return Err(mismatch(v.len()));
    }
    Ok(n)
}

/// Closed-form linearly constrained minimum variance solution
/// `R^-1 C (C^H R^-1 C)^-1 g^H` with `R` loaded by `ridge`.
pub fn lcmv_closed_form(
    r: &HermitianMatrix,
    cs: &ConstraintSystem,
    ridge: f64,
) -> Result<ComplexVector> {
    let c = cs.matrix();
    let rinv_c = hermitian_solve_many(r, c, ridge)?;
    let gram = c.adjoint().matmul(&rinv_c)?;
    let gram = HermitianMatrix::symmetrize(gram.rows(), gram.as_slice());
    let g_h: Vec<C64> = cs.responses().iter().map(|z| z.conj()).collect();
    let y = hermitian_solve(&gram, &g_h, 0.0).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::RankDeficientConstraints(0.0),
        other => other,
    })?;
    let w = rinv_c.mul_vec(&y)?;
    ComplexVector::new(w.into_inner())
}

/// Solves a stacked 4M problem against the dense block-diagonal matrix.
pub fn solve_stacked(
    rt: &StackedCorrelation,
    cs: &ConstraintSystem,
    ridge: f64,
) -> Result<BeamformerPair> {
    let w = lcmv_closed_form(&rt.dense(), cs, ridge)?;
    BeamformerPair::from_stacked(&w)
}

fn mvdr_single(r: &HermitianMatrix, a: &[C64], ridge: f64) -> Result<ComplexVector> {
    let x = hermitian_solve(r, a, ridge)?;
    let denom = inner(a, &x).re;
    if !(denom >= 1e-14) {
        return Err(Error::ZeroDenominator(denom));
    }
    ComplexVector::new(x.iter().map(|z| z / denom).collect())
}

/// Binaural MVDR: `w_L = R^-1 a_L / (a_L^H R^-1 a_L)` and likewise for the
/// right ear.
pub fn bmvdr(r: &HermitianMatrix, a_l: &[C64], a_r: &[C64], ridge: f64) -> Result<BeamformerPair> {
    r.check_dim(a_l.len())?;
    r.check_dim(a_r.len())?;
    BeamformerPair::new(mvdr_single(r, a_l, ridge)?, mvdr_single(r, a_r, ridge)?)
}

/// Binaural LCMV with interference scaling parameters.
///
/// The constraint set and the stacked matrix are both block diagonal, so the
/// stacked problem separates into one 2M-dimensional solve per ear.
pub fn blcmv(
    rt: &StackedCorrelation,
    a_l: &[C64],
    a_r: &[C64],
    b_l: &[ComplexVector],
    b_r: &[ComplexVector],
    delta: &ScalingParameters,
    ridge: f64,
) -> Result<BeamformerPair> {
    let n = check_rtfs(a_l, a_r, b_l, b_r)?;
    rt.block().check_dim(n)?;
    delta.check_len(b_l.len())?;
    if b_l.len() + 1 > n {
        return Err(Error::TooManyConstraints {
            constraints: b_l.len() + 1,
            dimension: n,
        });
    }
    let left = ConstraintSystem::single_ear(a_l, b_l, delta.left())?;
    let right = ConstraintSystem::single_ear(a_r, b_r, delta.right())?;
    BeamformerPair::new(
        lcmv_closed_form(rt.block(), &left, ridge)?,
        lcmv_closed_form(rt.block(), &right, ridge)?,
    )
}

/// Binaural MVDR with interferer RTF preservation. The coupling constraints
/// span both halves of the stacked filter, so this is one 4M solve.
pub fn bmvdr_rtf(
    rt: &StackedCorrelation,
    a_l: &[C64],
    a_r: &[C64],
    b_l: &[ComplexVector],
    b_r: &[ComplexVector],
    ridge: f64,
) -> Result<BeamformerPair> {
    let n = check_rtfs(a_l, a_r, b_l, b_r)?;
    rt.block().check_dim(n)?;
    let cs = ConstraintSystem::rtf_preserving(a_l, a_r, b_l, b_r)?;
    solve_stacked(rt, &cs, ridge)
}
