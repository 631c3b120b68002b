//! Weighted overlap-add analysis/synthesis with a square-root Hann window.

mod wav;

pub use wav::{read_wav, write_wav};

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::beamform::BeamformerPair;
use crate::error::{Error, Result};
use crate::linalg::{inner, C64, ZERO};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WolaConfig {
    pub block_length: usize,
    pub overlap: f64,
    pub sample_rate: f64,
}

impl Default for WolaConfig {
    fn default() -> Self {
        Self {
            block_length: 256,
            overlap: 0.5,
            sample_rate: 16000.0,
        }
    }
}

impl WolaConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.block_length.is_power_of_two() || self.block_length < 4 {
            return Err(Error::InvalidConfig(format!(
                "block length {} is not a power of two >= 4",
                self.block_length
            )));
        }
        if !(self.overlap > 0.0 && self.overlap < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "overlap {} not in (0, 1)",
                self.overlap
            )));
        }
        let hop = self.block_length as f64 * (1.0 - self.overlap);
        if hop.fract() != 0.0 {
            return Err(Error::InvalidConfig(format!("hop {hop} is not an integer")));
        }
        if !(self.sample_rate > 0.0) {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        Ok(())
    }

    pub fn hop(&self) -> usize {
        (self.block_length as f64 * (1.0 - self.overlap)).round() as usize
    }

    pub fn bins(&self) -> usize {
        self.block_length / 2 + 1
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate / self.block_length as f64
    }

    /// Number of complete frames in a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.block_length {
            0
        } else {
            (len - self.block_length) / self.hop() + 1
        }
    }

    /// Whole frames spanning `seconds`, i.e. `floor(seconds * fs / hop)`.
    pub fn frames_in(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate / self.hop() as f64 + 1e-9).floor() as usize
    }

    /// Half-sample-shifted square-root Hann window, `sin(pi (n + 1/2) / N)`.
    /// Its square sums to exactly one at 50% overlap.
    pub fn window(&self) -> Vec<f64> {
        let n = self.block_length as f64;
        (0..self.block_length)
            .map(|i| (PI * (i as f64 + 0.5) / n).sin())
            .collect()
    }

    // Overlap-add gain of the squared window at this hop.
    fn ola_gain(&self) -> f64 {
        let w = self.window();
        let hop = self.hop();
        let mut per_phase = vec![0.0; hop];
        for (i, v) in w.iter().enumerate() {
            per_phase[i % hop] += v * v;
        }
        per_phase.iter().sum::<f64>() / hop as f64
    }
}

/// Equal-length real sample streams in stacked channel order
/// `[L1..LM, R1..RM]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultichannelSignal {
    channels: Vec<Vec<f64>>,
}

impl MultichannelSignal {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self> {
        let len = channels.first().map_or(0, Vec::len);
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: bad.len(),
            });
        }
        Ok(Self { channels })
    }

    pub fn zeros(channels: usize, len: usize) -> Self {
        Self {
            channels: vec![vec![0.0; len]; channels],
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.channels[c]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Sample-wise sum of two signals of equal shape.
    pub fn add(&self, other: &MultichannelSignal) -> Result<MultichannelSignal> {
        if other.channel_count() != self.channel_count() {
            return Err(Error::ChannelCountMismatch {
                expected: self.channel_count(),
                got: other.channel_count(),
            });
        }
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Self {
            channels: self
                .channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        })
    }

    pub fn scale(&mut self, gain: f64) {
        for c in &mut self.channels {
            for x in c.iter_mut() {
                *x *= gain;
            }
        }
    }

    /// Samples `[t * hop, t * hop + block)` of every channel.
    pub fn frame(&self, t: usize, cfg: &WolaConfig) -> MultichannelFrame {
        let start = t * cfg.hop();
        MultichannelFrame {
            index: t,
            channels: self
                .channels
                .iter()
                .map(|c| c[start..start + cfg.block_length].to_vec())
                .collect(),
        }
    }
}

/// One block of time samples per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct MultichannelFrame {
    pub index: usize,
    pub channels: Vec<Vec<f64>>,
}

/// One-sided spectrum of every channel for one frame, stored bin-major so
/// that `bin(k)` is the stacked microphone vector `y(k, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFrame {
    index: usize,
    channels: usize,
    data: Vec<C64>,
}

impl SpectralFrame {
    pub fn zeros(index: usize, bins: usize, channels: usize) -> Self {
        Self {
            index,
            channels,
            data: vec![ZERO; bins * channels],
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn bins(&self) -> usize {
        self.data.len().checked_div(self.channels).unwrap_or(0)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn bin(&self, k: usize) -> &[C64] {
        &self.data[k * self.channels..(k + 1) * self.channels]
    }

    pub fn bin_mut(&mut self, k: usize) -> &mut [C64] {
        &mut self.data[k * self.channels..(k + 1) * self.channels]
    }
}

struct Plans {
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

fn plans(n: usize) -> Plans {
    let mut planner = RealFftPlanner::<f64>::new();
    Plans {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    }
}

/// Windowed forward transform of every complete frame.
pub fn analyze(signal: &MultichannelSignal, cfg: &WolaConfig) -> Result<Vec<SpectralFrame>> {
    cfg.validate()?;
    if signal.channel_count() == 0 {
        return Err(Error::ChannelCountMismatch {
            expected: 1,
            got: 0,
        });
    }
    if signal.len() < cfg.block_length {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            needed: cfg.block_length,
        });
    }
    let n = cfg.block_length;
    let hop = cfg.hop();
    let bins = cfg.bins();
    let ch = signal.channel_count();
    let window = cfg.window();
    let fft = plans(n).forward;

    let frames = (0..cfg.frame_count(signal.len()))
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![ZERO; bins], fft.make_scratch_vec()),
            |(buf, spec, scratch), t| {
                let mut frame = SpectralFrame::zeros(t, bins, ch);
                let start = t * hop;
                for c in 0..ch {
                    let x = &signal.channel(c)[start..start + n];
                    for ((b, s), w) in buf.iter_mut().zip(x).zip(&window) {
                        *b = s * w;
                    }
                    fft.process_with_scratch(buf, spec, scratch)
                        .expect("buffer sizes match the plan");
                    for (k, v) in spec.iter().enumerate() {
                        frame.data[k * ch + c] = *v;
                    }
                }
                frame
            },
        )
        .collect();
    Ok(frames)
}

/// Windowed inverse transform and overlap-add. Frames are placed by their
/// position in the slice; the output spans `(T - 1) * hop + block` samples.
pub fn synthesize(frames: &[SpectralFrame], cfg: &WolaConfig) -> Result<MultichannelSignal> {
    cfg.validate()?;
    let first = frames.first().ok_or(Error::EmptyInput)?;
    let bins = cfg.bins();
    let ch = first.channels();
    for f in frames {
        if f.bins() != bins {
            return Err(Error::BinCountMismatch {
                expected: bins,
                got: f.bins(),
            });
        }
        if f.channels() != ch {
            return Err(Error::ChannelCountMismatch {
                expected: ch,
                got: f.channels(),
            });
        }
    }
    let n = cfg.block_length;
    let hop = cfg.hop();
    let window = cfg.window();
    let gain = 1.0 / (n as f64 * cfg.ola_gain());
    let ifft = plans(n).inverse;

    // Inverse transforms run in parallel; the overlap-add below is sequential
    // so the summation order never depends on scheduling.
    let blocks: Vec<Vec<f64>> = frames
        .par_iter()
        .map_init(
            || (vec![ZERO; bins], vec![0.0; n], ifft.make_scratch_vec()),
            |(spec, buf, scratch), frame| {
                let mut out = vec![0.0; ch * n];
                for c in 0..ch {
                    for (k, s) in spec.iter_mut().enumerate() {
                        *s = frame.data[k * ch + c];
                    }
                    spec[0].im = 0.0;
                    spec[bins - 1].im = 0.0;
                    ifft.process_with_scratch(spec, buf, scratch)
                        .expect("buffer sizes match the plan");
                    for (i, (b, w)) in buf.iter().zip(&window).enumerate() {
                        out[c * n + i] = b * w * gain;
                    }
                }
                out
            },
        )
        .collect();

    let len = (frames.len() - 1) * hop + n;
    let mut out = MultichannelSignal::zeros(ch, len);
    for (t, block) in blocks.iter().enumerate() {
        let start = t * hop;
        for c in 0..ch {
            let dst = &mut out.channels[c][start..start + n];
            for (d, s) in dst.iter_mut().zip(&block[c * n..(c + 1) * n]) {
                *d += s;
            }
        }
    }
    Ok(out)
}

/// Fixed per-bin binaural filtering: `Z_L = w_L^H y`, `Z_R = w_R^H y` for
/// every frame. Output frames have two channels `[Z_L, Z_R]`.
pub fn apply_filter(
    frames: &[SpectralFrame],
    filter: &[BeamformerPair],
) -> Result<Vec<SpectralFrame>> {
    frames
        .iter()
        .map(|frame| {
            if frame.bins() != filter.len() {
                return Err(Error::BinCountMismatch {
                    expected: filter.len(),
                    got: frame.bins(),
                });
            }
            let mut out = SpectralFrame::zeros(frame.index(), filter.len(), 2);
            for (k, w) in filter.iter().enumerate() {
                let y = frame.bin(k);
                if w.left().len() != y.len() {
                    return Err(Error::DimensionMismatch {
                        expected: y.len(),
                        got: w.left().len(),
                    });
                }
                let z = out.bin_mut(k);
                z[0] = inner(w.left(), y);
                z[1] = inner(w.right(), y);
            }
            Ok(out)
        })
        .collect()
}
