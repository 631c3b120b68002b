use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, C64};
use crate::wola::WolaConfig;

/// Head-shadow strength: device gain is `1 + HEAD_SHADOW * sin(angle) * side`.
pub const HEAD_SHADOW: f64 = 0.3;

/// Microphone positions of a binaural pair of devices. The x axis points to
/// the right ear, the y axis to the front. The first `mics_per_side`
/// positions belong to the left device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub mics_per_side: usize,
    pub positions: Vec<[f64; 3]>,
    pub speed_of_sound: f64,
}

impl Default for ArrayGeometry {
    /// Devices at x = -/+ 8 cm, two microphones each, 8 mm apart along the
    /// front axis with the reference microphone in front.
    fn default() -> Self {
        Self {
            mics_per_side: 2,
            positions: vec![
                [-0.08, 0.004, 0.0],
                [-0.08, -0.004, 0.0],
                [0.08, 0.004, 0.0],
                [0.08, -0.004, 0.0],
            ],
            speed_of_sound: 343.0,
        }
    }
}

impl ArrayGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.mics_per_side == 0 {
            return Err(Error::InvalidConfig(
                "at least one microphone per side".into(),
            ));
        }
        if self.positions.len() != 2 * self.mics_per_side {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.mics_per_side,
                got: self.positions.len(),
            });
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(Error::InvalidConfig(
                "speed of sound must be positive".into(),
            ));
        }
        for i in 0..self.positions.len() {
            for j in i + 1..self.positions.len() {
                if self.distance(i, j) == 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "microphones {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// -1 for the left device, +1 for the right.
    pub fn side(&self, mic: usize) -> f64 {
        if mic < self.mics_per_side {
            -1.0
        } else {
            1.0
        }
    }

    /// Far-field plane-wave response at `frequency` Hz for a source at
    /// `angle_deg` (0 front, -90 left, +90 right).
    pub fn response(&self, angle_deg: f64, frequency: f64) -> Vec<C64> {
        let theta = angle_deg.to_radians();
        let dir = [theta.sin(), theta.cos(), 0.0];
        self.positions
            .iter()
            .enumerate()
            .map(|(m, p)| {
                let gain = 1.0 + HEAD_SHADOW * theta.sin() * self.side(m);
                // Positive projection onto the source direction means earlier arrival.
                let tau = -(p[0] * dir[0] + p[1] * dir[1] + p[2] * dir[2]) / self.speed_of_sound;
                C64::from_polar(gain, -2.0 * PI * frequency * tau)
            })
            .collect()
    }
}

/// Acoustic transfer function of one source at one bin, over all 2M
/// microphones in stacked order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtfVector {
    pub bin: usize,
    pub mics_per_side: usize,
    pub a: ComplexVector,
}

impl AtfVector {
    pub fn new(bin: usize, mics_per_side: usize, a: ComplexVector) -> Result<Self> {
        if a.len() != 2 * mics_per_side {
            return Err(Error::DimensionMismatch {
                expected: 2 * mics_per_side,
                got: a.len(),
            });
        }
        for idx in [0, mics_per_side] {
            if a[idx].norm() == 0.0 {
                return Err(Error::ReferenceEntryNearZero { index: idx });
            }
        }
        Ok(Self {
            bin,
            mics_per_side,
            a,
        })
    }

    pub fn left_reference(&self) -> C64 {
        self.a[0]
    }

    pub fn right_reference(&self) -> C64 {
        self.a[self.mics_per_side]
    }

    /// `a / A_L`, with the reference entry set to exactly one.
    pub fn rtf_left(&self) -> ComplexVector {
        normalized(&self.a, 0)
    }

    /// `a / A_R`, with the reference entry set to exactly one.
    pub fn rtf_right(&self) -> ComplexVector {
        normalized(&self.a, self.mics_per_side)
    }
}

pub(crate) fn normalized(a: &[C64], reference: usize) -> ComplexVector {
    let r = a[reference];
    let mut v: Vec<C64> = a.iter().map(|z| z / r).collect();
    v[reference] = C64::new(1.0, 0.0);
    ComplexVector::from_vec_unchecked(v)
}

/// ATF of a far-field source at the center frequency of `bin`.
pub fn atf_from_angle(
    angle_deg: f64,
    geom: &ArrayGeometry,
    cfg: &WolaConfig,
    bin: usize,
) -> Result<AtfVector> {
    if bin >= cfg.bins() {
        return Err(Error::InvalidBin {
            bin,
            bins: cfg.bins(),
        });
    }
    let a = ComplexVector::new(geom.response(angle_deg, cfg.bin_frequency(bin)))?;
    AtfVector::new(bin, geom.mics_per_side, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadside_references_match() {
        let g = ArrayGeometry::default();
        let cfg = WolaConfig::default();
        for bin in [1, 17, 64, 128] {
            let atf = atf_from_angle(0.0, &g, &cfg, bin).unwrap();
            assert!((atf.left_reference() - atf.right_reference()).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_frequency_is_unity() {
        let atf =
            atf_from_angle(0.0, &ArrayGeometry::default(), &WolaConfig::default(), 0).unwrap();
        assert!(atf.a.iter().all(|z| *z == C64::new(1.0, 0.0)));
    }

    #[test]
    fn head_shadow_direction() {
        let g = ArrayGeometry::default();
        let a = g.response(90.0, 1000.0);
        assert!((a[0].norm() - 0.7).abs() < 1e-12);
        assert!((a[2].norm() - 1.3).abs() < 1e-12);
        // The right device hears a source on the right first: phase lead.
        let lead = (a[2] * a[0].conj()).arg();
        assert!(lead > 0.0);
    }

    #[test]
    fn invalid_bin() {
        assert!(matches!(
            atf_from_angle(0.0, &ArrayGeometry::default(), &WolaConfig::default(), 129),
            Err(Error::InvalidBin {
                bin: 129,
                bins: 129
            })
        ));
    }

    #[test]
    fn rtf_reference_entries_exact() {
        let atf =
            atf_from_angle(-35.0, &ArrayGeometry::default(), &WolaConfig::default(), 40).unwrap();
        assert_eq!(atf.rtf_left()[0], C64::new(1.0, 0.0));
        assert_eq!(atf.rtf_right()[2], C64::new(1.0, 0.0));
    }
}
