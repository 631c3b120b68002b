use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_factor, HermitianMatrix, C64, ZERO};
use crate::wola::{synthesize, MultichannelSignal, SpectralFrame, WolaConfig};

/// Corner frequency of the speech-shaped spectrum.
pub const SPEECH_CORNER_HZ: f64 = 500.0;

/// Stream id reserved for background noise; sources use their own index.
pub(crate) const NOISE_STREAM: u64 = 0xFFFF;

/// Power spectral shape of generated signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralShape {
    White,
    /// Pink-like `1 / (1 + f / 500 Hz)` roll-off with no DC content.
    SpeechShaped,
}

impl SpectralShape {
    pub fn power(self, frequency: f64) -> f64 {
        match self {
            SpectralShape::White => 1.0,
            SpectralShape::SpeechShaped if frequency <= 0.0 => 0.0,
            SpectralShape::SpeechShaped => 1.0 / (1.0 + frequency / SPEECH_CORNER_HZ),
        }
    }
}

/// `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Spherically isotropic coherence `sinc(2 pi f d_ij / c)` between all
/// microphone pairs.
pub fn diffuse_coherence(geom: &ArrayGeometry, frequency: f64) -> HermitianMatrix {
    let n = geom.channels();
    let mut data = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            let x = 2.0 * PI * frequency * geom.distance(i, j) / geom.speed_of_sound;
            data[i * n + j] = C64::new(sinc(x), 0.0);
        }
    }
    HermitianMatrix::symmetrize(n, &data)
}

/// Number of frames whose synthesis covers at least `len` samples.
pub(crate) fn frames_covering(len: usize, cfg: &WolaConfig) -> usize {
    let n = cfg.block_length;
    if len <= n {
        1
    } else {
        (len - n).div_ceil(cfg.hop()) + 1
    }
}

pub(crate) fn stream_rng(seed: u64, stream: u64, bin: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) | bin as u64);
    rng
}

/// Circular complex Gaussian with unit variance (real Gaussian at the DC and
/// Nyquist bins, which must stay real).
pub(crate) fn gaussian(rng: &mut ChaCha8Rng, real_only: bool) -> C64 {
    if real_only {
        C64::new(StandardNormal.sample(rng), 0.0)
    } else {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    }
}

/// Per-bin spectral variance giving unit time-domain variance for a white
/// spectrum after synthesis.
pub(crate) fn unit_variance_scale(cfg: &WolaConfig) -> f64 {
    cfg.block_length as f64
}

/// Gathers per-bin sequences (`per_bin[k][t * ch + c]`) into frames.
pub(crate) fn frames_from_bins(
    per_bin: &[Vec<C64>],
    frames: usize,
    ch: usize,
) -> Vec<SpectralFrame> {
    (0..frames)
        .map(|t| {
            let mut f = SpectralFrame::zeros(t, per_bin.len(), ch);
            for (k, seq) in per_bin.iter().enumerate() {
                f.bin_mut(k).copy_from_slice(&seq[t * ch..(t + 1) * ch]);
            }
            f
        })
        .collect()
}

pub(crate) fn truncate(signal: MultichannelSignal, len: usize) -> MultichannelSignal {
    let channels = signal
        .into_channels()
        .into_iter()
        .map(|mut c| {
            c.truncate(len);
            c
        })
        .collect();
    MultichannelSignal::new(channels).expect("equal lengths")
}

/// Spatially diffuse noise with a white spectrum and unit per-sample
/// variance in every channel.
pub fn diffuse_noise(
    geom: &ArrayGeometry,
    cfg: &WolaConfig,
    duration: f64,
    seed: u64,
) -> Result<MultichannelSignal> {
    diffuse_noise_shaped(geom, cfg, duration, seed, SpectralShape::White)
}

/// Diffuse noise whose per-bin spectra are independent complex Gaussians
/// shaped by the lower-triangular factor of the sinc coherence matrix. Each
/// bin draws from its own random stream keyed by `(seed, bin)`.
pub fn diffuse_noise_shaped(
    geom: &ArrayGeometry,
    cfg: &WolaConfig,
    duration: f64,
    seed: u64,
    shape: SpectralShape,
) -> Result<MultichannelSignal> {
    cfg.validate()?;
    let ch = geom.channels();
    if ch == 0 {
        return Err(Error::InvalidConfig("geometry has no microphones".into()));
    }
    let len = (duration * cfg.sample_rate).round() as usize;
    if len < cfg.block_length {
        return Err(Error::SignalTooShort {
            len,
            needed: cfg.block_length,
        });
    }
    let frames = frames_covering(len, cfg);
    let bins = cfg.bins();
    let scale = unit_variance_scale(cfg);

    let per_bin: Vec<Vec<C64>> = (0..bins)
        .into_par_iter()
        .map(|k| -> Result<Vec<C64>> {
            let f = cfg.bin_frequency(k);
            let amp = (scale * shape.power(f)).sqrt();
            let factor = hermitian_factor(&diffuse_coherence(geom, f))?;
            let real_only = k == 0 || k == bins - 1;
            let mut rng = stream_rng(seed, NOISE_STREAM, k);
            let mut out = vec![ZERO; frames * ch];
            let mut z = vec![ZERO; ch];
            for t in 0..frames {
                for zi in z.iter_mut() {
                    *zi = gaussian(&mut rng, real_only);
                }
                let shaped = factor.mul_vec(&z)?;
                for (c, v) in shaped.iter().enumerate() {
                    out[t * ch + c] = v * amp;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let spectra = frames_from_bins(&per_bin, frames, ch);
    Ok(truncate(synthesize(&spectra, cfg)?, len))
}
