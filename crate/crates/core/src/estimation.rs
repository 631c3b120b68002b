//! Sample correlation matrices over frame intervals and RTF extraction by
//! covariance whitening.

use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamform::default_ridge;
use crate::error::{Error, Result};
use crate::linalg::{gevd_principal, ComplexVector, HermitianMatrix, ZERO};
use crate::scene::SignalTimeline;
use crate::wola::{analyze, MultichannelSignal, SpectralFrame, WolaConfig};

/// Principal generalized eigenvalues below `1 + NO_SOURCE_MARGIN` mean the
/// numerator matrix carries no energy beyond the noise.
pub const NO_SOURCE_MARGIN: f64 = 1e-6;

// |a[ref]| below this fraction of |a| leaves the RTF undefined.
const REFERENCE_FLOOR: f64 = 1e-10;

fn check_interval(interval: &Range<usize>, available: usize) -> Result<()> {
    if interval.start >= interval.end {
        return Err(Error::EmptyInterval);
    }
    if interval.end > available {
        return Err(Error::IntervalOutOfRange {
            start: interval.start,
            end: interval.end,
            available,
        });
    }
    Ok(())
}

/// `(1/T) sum_t y(t) y(t)^H` over the frames in `interval`.
pub fn estimate_correlation(
    frames: &[SpectralFrame],
    bin: usize,
    interval: Range<usize>,
) -> Result<HermitianMatrix> {
    check_interval(&interval, frames.len())?;
    let dim = frames[interval.start].channels();
    if bin >= frames[interval.start].bins() {
        return Err(Error::InvalidBin {
            bin,
            bins: frames[interval.start].bins(),
        });
    }
    let count = interval.len();
    let mut acc = vec![ZERO; dim * dim];
    for frame in &frames[interval] {
        let y = frame.bin(bin);
        if y.len() != dim {
            return Err(Error::ChannelCountMismatch {
                expected: dim,
                got: y.len(),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                acc[i * dim + j] += y[i] * y[j].conj();
            }
        }
    }
    let scale = 1.0 / count as f64;
    acc.iter_mut().for_each(|z| *z *= scale);
    Ok(HermitianMatrix::symmetrize(dim, &acc))
}

/// RTF pair of one source with the principal generalized eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RtfPair {
    pub left: ComplexVector,
    pub right: ComplexVector,
    pub eigenvalue: f64,
}

/// Covariance-whitening RTF estimate: the principal generalized eigenvector
/// `x` of `(R_sn, R_n)` is mapped back through `R_n` and normalized at the
/// reference microphones 0 and `mics_per_side`.
pub fn estimate_rtf_gevd(
    r_sn: &HermitianMatrix,
    r_n: &HermitianMatrix,
    mics_per_side: usize,
) -> Result<RtfPair> {
    r_n.check_dim(r_sn.dim())?;
    r_n.check_dim(2 * mics_per_side)?;
    let (lambda, x) = match gevd_principal(r_sn, r_n) {
        Err(Error::NotPositiveDefinite { .. }) => {
            gevd_principal(r_sn, &r_n.with_ridge(default_ridge(r_n)))?
        }
        other => other?,
    };
    if !(lambda >= 1.0 + NO_SOURCE_MARGIN) {
        return Err(Error::NoSourceDetected(lambda));
    }
    let a = r_n.mul_vec(&x)?;
    let norm = a.norm();
    for idx in [0, mics_per_side] {
        if !(a[idx].norm() >= REFERENCE_FLOOR * norm) {
            return Err(Error::ReferenceEntryNearZero { index: idx });
        }
    }
    Ok(RtfPair {
        left: crate::scene::rtf_normalized(&a, 0),
        right: crate::scene::rtf_normalized(&a, mics_per_side),
        eigenvalue: lambda,
    })
}

/// Frame ranges used for estimation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimationWindows {
    pub noise: Range<usize>,
    pub observation: Range<usize>,
}

impl EstimationWindows {
    /// Noise frames lying entirely inside the noise-only prefix and an
    /// observation window of `floor(L fs / hop)` frames starting at the first
    /// frame at or after the end of the prefix.
    pub fn for_timeline(noise_only_samples: usize, cfg: &WolaConfig, seconds: f64) -> Result<Self> {
        let hop = cfg.hop();
        let noise_end = cfg.frame_count(noise_only_samples);
        let start = noise_only_samples.div_ceil(hop);
        let count = cfg.frames_in(seconds);
        if noise_end == 0 || count == 0 {
            return Err(Error::EmptyInterval);
        }
        Ok(Self {
            noise: 0..noise_end,
            observation: start..start + count,
        })
    }
}

/// Spectral frames of every stream the estimator needs.
#[derive(Clone, Debug)]
pub struct TimelineFrames {
    pub mics_per_side: usize,
    pub noise_only_samples: usize,
    pub mixture: Vec<SpectralFrame>,
    pub undesired: Vec<SpectralFrame>,
    pub desired_plus_noise: Vec<SpectralFrame>,
    pub interferer_plus_noise: Vec<Vec<SpectralFrame>>,
    pub noise: Vec<SpectralFrame>,
}

impl TimelineFrames {
    /// Analyzes the first `max_samples` samples of each stream (all when
    /// `None`).
    pub fn analyze(
        timeline: &SignalTimeline,
        mics_per_side: usize,
        cfg: &WolaConfig,
        max_samples: Option<usize>,
    ) -> Result<Self> {
        let len = max_samples.map_or(timeline.len(), |n| n.min(timeline.len()));
        let run = |s: MultichannelSignal| analyze(&head(s, len), cfg);
        Ok(Self {
            mics_per_side,
            noise_only_samples: timeline.noise_only_samples,
            mixture: run(timeline.mixture())?,
            undesired: run(timeline.undesired())?,
            desired_plus_noise: run(timeline.desired_plus_noise())?,
            interferer_plus_noise: (0..timeline.interferers.len())
                .map(|p| run(timeline.interferer_plus_noise(p)))
                .collect::<Result<_>>()?,
            noise: run(timeline.noise.clone())?,
        })
    }

    pub fn bins(&self) -> usize {
        self.noise.first().map_or(0, |f| f.bins())
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }
}

fn head(s: MultichannelSignal, len: usize) -> MultichannelSignal {
    if s.len() <= len {
        return s;
    }
    let channels = s.into_channels().into_iter().map(|mut c| {
        c.truncate(len);
        c
    });
    MultichannelSignal::new(channels.collect()).expect("equal lengths")
}

/// Estimated matrices of one bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinCorrelation {
    pub bin: usize,
    pub r_n: HermitianMatrix,
    pub r_y: HermitianMatrix,
    pub r_v: HermitianMatrix,
    pub r_xn: HermitianMatrix,
    pub r_vp: Vec<HermitianMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub windows: EstimationWindows,
    pub noise_frames: usize,
    pub observation_frames: usize,
    pub bins: Vec<BinCorrelation>,
}

/// Estimated RTFs of one bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRtf {
    pub bin: usize,
    pub desired: RtfPair,
    pub interferers: Vec<RtfPair>,
}

impl BinRtf {
    pub fn interferers_left(&self) -> Vec<ComplexVector> {
        self.interferers.iter().map(|p| p.left.clone()).collect()
    }

    pub fn interferers_right(&self) -> Vec<ComplexVector> {
        self.interferers.iter().map(|p| p.right.clone()).collect()
    }
}

/// RTFs per bin; `None` where estimation failed, with the reason kept in
/// `failures`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RtfEstimate {
    pub bins: Vec<Option<BinRtf>>,
    pub failures: Vec<BinFailure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinFailure {
    pub bin: usize,
    pub reason: String,
}

impl CorrelationSet {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

impl RtfEstimate {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Estimates all correlation matrices on the given windows and derives the
/// desired RTFs from `(R_xn, R_n)` and each interferer's from `(R_v,p, R_n)`.
pub fn build_from_frames(
    frames: &TimelineFrames,
    windows: &EstimationWindows,
) -> Result<(CorrelationSet, RtfEstimate)> {
    check_interval(&windows.noise, frames.len())?;
    check_interval(&windows.observation, frames.len())?;
    let m = frames.mics_per_side;
    let results: Vec<(BinCorrelation, std::result::Result<BinRtf, BinFailure>)> = (0..frames
        .bins())
        .into_par_iter()
        .map(|k| -> Result<_> {
            let obs = || windows.observation.clone();
            let corr = BinCorrelation {
                bin: k,
                r_n: estimate_correlation(&frames.noise, k, windows.noise.clone())?,
                r_y: estimate_correlation(&frames.mixture, k, obs())?,
                r_v: estimate_correlation(&frames.undesired, k, obs())?,
                r_xn: estimate_correlation(&frames.desired_plus_noise, k, obs())?,
                r_vp: frames
                    .interferer_plus_noise
                    .iter()
                    .map(|f| estimate_correlation(f, k, obs()))
                    .collect::<Result<_>>()?,
            };
            let rtf = (|| -> Result<BinRtf> {
                Ok(BinRtf {
                    bin: k,
                    desired: estimate_rtf_gevd(&corr.r_xn, &corr.r_n, m)?,
                    interferers: corr
                        .r_vp
                        .iter()
                        .map(|r| estimate_rtf_gevd(r, &corr.r_n, m))
                        .collect::<Result<_>>()?,
                })
            })()
            .map_err(|e| BinFailure {
                bin: k,
                reason: e.to_string(),
            });
            Ok((corr, rtf))
        })
        .collect::<Result<_>>()?;

    let mut bins = Vec::with_capacity(results.len());
    let mut rtfs = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (corr, rtf) in results {
        bins.push(corr);
        match rtf {
            Ok(r) => rtfs.push(Some(r)),
            Err(f) => {
                failures.push(f);
                rtfs.push(None);
            }
        }
    }
    Ok((
        CorrelationSet {
            windows: windows.clone(),
            noise_frames: windows.noise.len(),
            observation_frames: windows.observation.len(),
            bins,
        },
        RtfEstimate {
            bins: rtfs,
            failures,
        },
    ))
}

/// Analyzes the timeline and estimates everything for an observation
/// interval of `seconds` starting at the end of the noise-only prefix.
pub fn build_correlation_set(
    timeline: &SignalTimeline,
    mics_per_side: usize,
    cfg: &WolaConfig,
    seconds: f64,
) -> Result<(CorrelationSet, RtfEstimate)> {
    let windows = EstimationWindows::for_timeline(timeline.noise_only_samples, cfg, seconds)?;
    let needed = (windows.observation.end - 1) * cfg.hop() + cfg.block_length;
    if needed > timeline.len() {
        return Err(Error::IntervalOutOfRange {
            start: windows.observation.start,
            end: windows.observation.end,
            available: cfg.frame_count(timeline.len()),
        });
    }
    let frames = TimelineFrames::analyze(timeline, mics_per_side, cfg, Some(needed))?;
    build_from_frames(&frames, &windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn frame_with(v: &[C64]) -> SpectralFrame {
        let mut f = SpectralFrame::zeros(0, 1, v.len());
        f.bin_mut(0).copy_from_slice(v);
        f
    }

    #[test]
    fn single_frame_outer_product() {
        let frames = [frame_with(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)])];
        let r = estimate_correlation(&frames, 0, 0..1).unwrap();
        assert_eq!(r.get(0, 0), C64::new(1.0, 0.0));
        assert_eq!(r.get(0, 1), C64::new(0.0, -1.0));
        assert_eq!(r.get(1, 0), C64::new(0.0, 1.0));
        assert_eq!(r.get(1, 1), C64::new(1.0, 0.0));
    }

    #[test]
    fn zero_frames_zero_matrix() {
        let frames = vec![frame_with(&[ZERO, ZERO]); 3];
        let r = estimate_correlation(&frames, 0, 0..3).unwrap();
        assert!(r.as_slice().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn interval_errors() {
        let frames = vec![frame_with(&[ZERO]); 3];
        assert_eq!(
            estimate_correlation(&frames, 0, 2..2),
            Err(Error::EmptyInterval)
        );
        assert!(matches!(
            estimate_correlation(&frames, 0, 1..4),
            Err(Error::IntervalOutOfRange { available: 3, .. })
        ));
    }

    #[test]
    fn identity_noise_recovers_rtf() {
        let a = [
            C64::new(1.0, 0.0),
            C64::new(0.5, -0.5),
            C64::new(0.8, 0.0),
            C64::new(0.0, 0.2),
        ];
        let r_n = HermitianMatrix::identity(4);
        let r_sn = r_n.add(&HermitianMatrix::outer(&a, 10.0)).unwrap();
        let est = estimate_rtf_gevd(&r_sn, &r_n, 2).unwrap();
        for (i, z) in a.iter().enumerate() {
            assert!((est.left[i] - z / a[0]).norm() < 1e-8);
            assert!((est.right[i] - z / a[2]).norm() < 1e-8);
        }
        assert_eq!(est.left[0], C64::new(1.0, 0.0));
        assert_eq!(est.right[2], C64::new(1.0, 0.0));
    }

    #[test]
    fn no_source_flagged() {
        let r = HermitianMatrix::diagonal(&[1.0, 2.0]);
        assert!(matches!(
            estimate_rtf_gevd(&r, &r, 1),
            Err(Error::NoSourceDetected(_))
        ));
    }

    #[test]
    fn windows_for_default_protocol() {
        let cfg = WolaConfig::default();
        let w = EstimationWindows::for_timeline(32000, &cfg, 0.1).unwrap();
        assert_eq!(w.noise, 0..249);
        assert_eq!(w.observation, 250..262);
        let w = EstimationWindows::for_timeline(32000, &cfg, 3.0).unwrap();
        assert_eq!(w.observation.len(), 375);
    }
}
