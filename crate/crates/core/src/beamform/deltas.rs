use serde::{Deserialize, Serialize};

use super::BeamformerPair;
use crate::error::{Error, Result};
use crate::linalg::{inner, ComplexVector, C64};

/// Lower threshold on the interference scaling magnitude (about 14 dB SIR gain).
pub const DEFAULT_DELTA_MIN: f64 = 0.2;
/// Upper threshold on the interference scaling magnitude (about 8 dB SIR gain).
pub const DEFAULT_DELTA_MAX: f64 = 0.4;

// |delta_L - delta_R| tolerated by `optimal_deltas`.
const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaProvenance {
    Optimal,
    Thresholded,
    Manual,
}

/// Per-interferer constrained responses for the left and right filters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParameters {
    left: Vec<C64>,
    right: Vec<C64>,
    provenance: DeltaProvenance,
}

impl ScalingParameters {
    pub fn empty() -> Self {
        Self::manual(Vec::new(), Vec::new())
    }

    /// Arbitrary responses; `left` and `right` may differ.
    pub fn manual(left: Vec<C64>, right: Vec<C64>) -> Self {
        assert_eq!(left.len(), right.len(), "one delta per interferer and ear");
        Self {
            left,
            right,
            provenance: DeltaProvenance::Manual,
        }
    }

    /// Identical real responses at both ears.
    pub fn symmetric(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&d| C64::new(d, 0.0)).collect();
        Self::manual(v.clone(), v)
    }

    pub fn left(&self) -> &[C64] {
        &self.left
    }

    pub fn right(&self) -> &[C64] {
        &self.right
    }

    pub fn provenance(&self) -> DeltaProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub(crate) fn check_len(&self, p: usize) -> Result<()> {
        if self.left.len() != p || self.right.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: self.left.len(),
            });
        }
        Ok(())
    }
}

/// Interference scaling that the RTF-preserving MVDR realizes implicitly:
/// `delta_p = w_L^H b_L,p`, which equals `w_R^H b_R,p` for a filter built
/// from the same RTFs.
pub fn optimal_deltas(
    w_rtf: &BeamformerPair,
    b_l: &[ComplexVector],
    b_r: &[ComplexVector],
) -> Result<ScalingParameters> {
    if b_l.len() != b_r.len() {
        return Err(Error::DimensionMismatch {
            expected: b_l.len(),
            got: b_r.len(),
        });
    }
    let mut deltas = Vec::with_capacity(b_l.len());
    for (bl, br) in b_l.iter().zip(b_r) {
        if bl.len() != w_rtf.dim() || br.len() != w_rtf.dim() {
            return Err(Error::DimensionMismatch {
                expected: w_rtf.dim(),
                got: bl.len().min(br.len()),
            });
        }
        let left = inner(w_rtf.left(), bl);
        let right = inner(w_rtf.right(), br);
        let gap = (left - right).norm();
        if !(gap < CONSISTENCY_TOL * left.norm().max(1.0)) {
            return Err(Error::ConsistencyViolation(gap));
        }
        deltas.push(left);
    }
    Ok(ScalingParameters {
        left: deltas.clone(),
        right: deltas,
        provenance: DeltaProvenance::Optimal,
    })
}

/// Clamps `|delta_p|` into `[min, max]`; the result is real and identical at
/// both ears.
pub fn threshold_deltas(
    delta: &ScalingParameters,
    min: f64,
    max: f64,
) -> Result<ScalingParameters> {
    if !(min > 0.0 && max > min && max.is_finite()) {
        return Err(Error::InvalidThresholds { min, max });
    }
    let values: Vec<C64> = delta
        .left
        .iter()
        .map(|d| {
            let mag = d.norm();
            let v = if mag <= min {
                min
            } else if mag >= max {
                max
            } else {
                mag
            };
            C64::new(v, 0.0)
        })
        .collect();
    Ok(ScalingParameters {
        left: values.clone(),
        right: values,
        provenance: DeltaProvenance::Thresholded,
    })
}
