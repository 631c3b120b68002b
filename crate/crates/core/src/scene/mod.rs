//! Synthetic binaural scenes: plane-wave sources with head shadow, diffuse
//! background noise, and mixing to prescribed input SNR/SIR.

mod geometry;
mod noise;

pub(crate) use geometry::normalized as rtf_normalized;
pub use geometry::{atf_from_angle, ArrayGeometry, AtfVector, HEAD_SHADOW};
pub use noise::{
    diffuse_coherence, diffuse_noise, diffuse_noise_shaped, sinc, SpectralShape, SPEECH_CORNER_HZ,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, HermitianMatrix, C64, ZERO};
use crate::wola::{synthesize, write_wav, MultichannelSignal, WolaConfig};
use noise::{
    frames_covering, frames_from_bins, gaussian, stream_rng, truncate, unit_variance_scale,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub desired_angle: f64,
    pub interferer_angles: Vec<f64>,
    pub snr_db: f64,
    /// Input SIR applied to each interferer separately.
    pub sir_db: f64,
    pub noise_only_duration: f64,
    pub active_duration: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            desired_angle: 0.0,
            interferer_angles: Vec::new(),
            snr_db: 5.0,
            sir_db: 0.0,
            noise_only_duration: 2.0,
            active_duration: 20.0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn new(desired_angle: f64, interferer_angles: &[f64], seed: u64) -> Self {
        Self {
            desired_angle,
            interferer_angles: interferer_angles.to_vec(),
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &a in std::iter::once(&self.desired_angle).chain(&self.interferer_angles) {
            if !(a > -180.0 && a <= 180.0) {
                return Err(Error::InfeasibleSpec(format!(
                    "angle {a} outside (-180, 180]"
                )));
            }
        }
        if !(self.noise_only_duration >= 0.0 && self.active_duration > 0.0) {
            return Err(Error::InfeasibleSpec("durations must be positive".into()));
        }
        if !self.snr_db.is_finite() || !self.sir_db.is_finite() {
            return Err(Error::InfeasibleSpec("SNR and SIR must be finite".into()));
        }
        Ok(())
    }

    pub fn interferers(&self) -> usize {
        self.interferer_angles.len()
    }
}

/// Component signals of a scene; all streams share length and channel order.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalTimeline {
    pub desired: MultichannelSignal,
    pub interferers: Vec<MultichannelSignal>,
    pub noise: MultichannelSignal,
    /// Samples of the noise-only prefix.
    pub noise_only_samples: usize,
}

impl SignalTimeline {
    /// `y = x + sum_p u_p + n`, summed in that order.
    pub fn mixture(&self) -> MultichannelSignal {
        let mut y = self.desired.clone();
        for u in &self.interferers {
            y = y.add(u).expect("matching shapes");
        }
        y.add(&self.noise).expect("matching shapes")
    }

    /// `v = sum_p u_p + n`.
    pub fn undesired(&self) -> MultichannelSignal {
        let mut v = MultichannelSignal::zeros(self.noise.channel_count(), self.noise.len());
        for u in &self.interferers {
            v = v.add(u).expect("matching shapes");
        }
        v.add(&self.noise).expect("matching shapes")
    }

    /// `x + n`
    pub fn desired_plus_noise(&self) -> MultichannelSignal {
        self.desired.add(&self.noise).expect("matching shapes")
    }

    /// `u_p + n`
    pub fn interferer_plus_noise(&self, p: usize) -> MultichannelSignal {
        self.interferers[p]
            .add(&self.noise)
            .expect("matching shapes")
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }
}

/// Ground truth of a generated scene: per-bin ATFs and PSDs in the analysis
/// domain of the filterbank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub spec: SceneSpec,
    pub geometry: ArrayGeometry,
    pub wola: WolaConfig,
    pub source_shape: SpectralShape,
    pub noise_shape: SpectralShape,
    /// Amplitude gains applied to the desired source, each interferer and
    /// the noise.
    pub desired_gain: f64,
    pub interferer_gains: Vec<f64>,
    pub noise_gain: f64,
    pub bins: Vec<TruthBin>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthBin {
    pub bin: usize,
    pub frequency_hz: f64,
    pub desired_atf: ComplexVector,
    pub interferer_atfs: Vec<ComplexVector>,
    pub desired_psd: f64,
    pub interferer_psds: Vec<f64>,
    pub noise_psd: f64,
}

/// Population correlation matrices of every component at one bin.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueMatrices {
    pub r_x: HermitianMatrix,
    pub r_u_each: Vec<HermitianMatrix>,
    pub r_u: HermitianMatrix,
    pub r_n: HermitianMatrix,
    pub r_v: HermitianMatrix,
    pub r_y: HermitianMatrix,
}

impl SceneTruth {
    pub fn mics_per_side(&self) -> usize {
        self.geometry.mics_per_side
    }

    pub fn desired_atf(&self, bin: usize) -> AtfVector {
        AtfVector {
            bin,
            mics_per_side: self.mics_per_side(),
            a: self.bins[bin].desired_atf.clone(),
        }
    }

    pub fn interferer_atf(&self, bin: usize, p: usize) -> AtfVector {
        AtfVector {
            bin,
            mics_per_side: self.mics_per_side(),
            a: self.bins[bin].interferer_atfs[p].clone(),
        }
    }

    pub fn matrices(&self, bin: usize) -> TrueMatrices {
        let b = &self.bins[bin];
        let r_x = HermitianMatrix::outer(&b.desired_atf, b.desired_psd);
        let r_u_each: Vec<HermitianMatrix> = b
            .interferer_atfs
            .iter()
            .zip(&b.interferer_psds)
            .map(|(atf, &psd)| HermitianMatrix::outer(atf, psd))
            .collect();
        let dim = b.desired_atf.len();
        let r_u = r_u_each.iter().fold(HermitianMatrix::zeros(dim), |acc, m| {
            acc.add(m).expect("same dim")
        });
        let r_n = diffuse_coherence(&self.geometry, b.frequency_hz).scaled(b.noise_psd);
        let r_v = r_u.add(&r_n).expect("same dim");
        let r_y = r_x.add(&r_v).expect("same dim");
        TrueMatrices {
            r_x,
            r_u_each,
            r_u,
            r_n,
            r_v,
            r_y,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// A generated scene: time-domain components plus their ground truth.
#[derive(Clone, Debug)]
pub struct Scene {
    pub timeline: SignalTimeline,
    pub truth: SceneTruth,
}

// Analysis-domain power per unit of generation variance: a sqrt-Hann frame
// of unit-variance white noise has sum(w^2) = N / 2 per bin.
fn analysis_power_scale(cfg: &WolaConfig) -> f64 {
    cfg.window().iter().map(|w| w * w).sum::<f64>() / unit_variance_scale(cfg)
}

/// Renders one point source through its per-bin ATFs: the source spectrum
/// is drawn per bin from the stream `(seed, stream, bin)` and multiplied by
/// the ATF before synthesis of each microphone channel.
fn render_source(
    angle: f64,
    geom: &ArrayGeometry,
    cfg: &WolaConfig,
    len: usize,
    seed: u64,
    stream: u64,
    shape: SpectralShape,
) -> Result<MultichannelSignal> {
    let frames = frames_covering(len, cfg);
    let bins = cfg.bins();
    let ch = geom.channels();
    let scale = unit_variance_scale(cfg);
    let per_bin: Vec<Vec<C64>> = (0..bins)
        .into_par_iter()
        .map(|k| {
            let f = cfg.bin_frequency(k);
            let mut out = vec![ZERO; frames * ch];
            if !carries_direction(k, bins) {
                return out;
            }
            let amp = (scale * shape.power(f)).sqrt();
            let atf = geom.response(angle, f);
            let mut rng = stream_rng(seed, stream, k);
            for t in 0..frames {
                let s = gaussian(&mut rng, false) * amp;
                for (c, a) in atf.iter().enumerate() {
                    out[t * ch + c] = a * s;
                }
            }
            out
        })
        .collect();
    let spectra = frames_from_bins(&per_bin, frames, ch);
    Ok(truncate(synthesize(&spectra, cfg)?, len))
}

/// A delay has no real-valued spectrum at DC or Nyquist, so directional
/// sources carry no energy there.
fn carries_direction(bin: usize, bins: usize) -> bool {
    bin != 0 && bin != bins - 1
}

fn delayed(signal: MultichannelSignal, offset: usize) -> MultichannelSignal {
    let channels = signal
        .into_channels()
        .into_iter()
        .map(|c| {
            let mut v = vec![0.0; offset];
            v.extend(c);
            v
        })
        .collect();
    MultichannelSignal::new(channels).expect("equal lengths")
}

// Power of the reference channels (indices 0 and M) over `[from, ..)`,
// averaged over left and right.
fn reference_power(s: &MultichannelSignal, m: usize, from: usize) -> f64 {
    let p = |c: usize| s.channel(c)[from..].iter().map(|v| v * v).sum::<f64>();
    0.5 * (p(0) + p(m)) / (s.len() - from) as f64
}

/// Builds the scene: a noise-only prefix followed by all sources active.
/// Desired and interferer levels are set so the broadband input SNR and
/// each interferer's SIR, measured at the reference microphones over the
/// active segment, hit the requested values.
pub fn mix_scene(spec: &SceneSpec, geom: &ArrayGeometry, cfg: &WolaConfig) -> Result<Scene> {
    spec.validate()?;
    geom.validate()?;
    cfg.validate()?;
    let fs = cfg.sample_rate;
    let prefix = (spec.noise_only_duration * fs).round() as usize;
    let active = (spec.active_duration * fs).round() as usize;
    if active < cfg.block_length {
        return Err(Error::InfeasibleSpec(
            "active segment shorter than one block".into(),
        ));
    }
    let total = prefix + active;
    let m = geom.mics_per_side;
    let source_shape = SpectralShape::SpeechShaped;
    let noise_shape = SpectralShape::SpeechShaped;

    let noise = diffuse_noise_shaped(geom, cfg, total as f64 / fs, spec.seed, noise_shape)?;
    let noise = truncate(noise, total);
    let noise_power = reference_power(&noise, m, prefix);

    let mut desired = render_source(
        spec.desired_angle,
        geom,
        cfg,
        active,
        spec.seed,
        0,
        source_shape,
    )?;
    let desired_raw = reference_power(&desired, m, 0);
    if !(desired_raw > 0.0 && noise_power > 0.0) {
        return Err(Error::InfeasibleSpec("zero-power component".into()));
    }
    let desired_gain = (noise_power * 10f64.powf(spec.snr_db / 10.0) / desired_raw).sqrt();
    desired.scale(desired_gain);
    let desired_power = desired_raw * desired_gain * desired_gain;

    let mut interferers = Vec::with_capacity(spec.interferers());
    let mut interferer_gains = Vec::with_capacity(spec.interferers());
    for (p, &angle) in spec.interferer_angles.iter().enumerate() {
        let mut u = render_source(
            angle,
            geom,
            cfg,
            active,
            spec.seed,
            1 + p as u64,
            source_shape,
        )?;
        let raw = reference_power(&u, m, 0);
        if !(raw > 0.0) {
            return Err(Error::InfeasibleSpec(format!(
                "interferer {p} has zero power"
            )));
        }
        let gain = (desired_power / 10f64.powf(spec.sir_db / 10.0) / raw).sqrt();
        u.scale(gain);
        interferers.push(delayed(u, prefix));
        interferer_gains.push(gain);
    }

    let power_scale = analysis_power_scale(cfg) * unit_variance_scale(cfg);
    let bins = (0..cfg.bins())
        .map(|k| {
            let f = cfg.bin_frequency(k);
            let src = if carries_direction(k, cfg.bins()) {
                source_shape.power(f) * power_scale
            } else {
                0.0
            };
            Ok(TruthBin {
                bin: k,
                frequency_hz: f,
                desired_atf: ComplexVector::new(geom.response(spec.desired_angle, f))?,
                interferer_atfs: spec
                    .interferer_angles
                    .iter()
                    .map(|&a| ComplexVector::new(geom.response(a, f)))
                    .collect::<Result<_>>()?,
                desired_psd: src * desired_gain * desired_gain,
                interferer_psds: interferer_gains.iter().map(|g| src * g * g).collect(),
                noise_psd: noise_shape.power(f) * power_scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Scene {
        timeline: SignalTimeline {
            desired: delayed(desired, prefix),
            interferers,
            noise,
            noise_only_samples: prefix,
        },
        truth: SceneTruth {
            spec: spec.clone(),
            geometry: geom.clone(),
            wola: cfg.clone(),
            source_shape,
            noise_shape,
            desired_gain,
            interferer_gains,
            noise_gain: 1.0,
            bins,
        },
    })
}

/// Broadband input SNR and per-interferer SIR in dB, measured on the time
/// signals at the reference microphones over the active segment.
pub fn measured_input_ratios(timeline: &SignalTimeline, mics_per_side: usize) -> (f64, Vec<f64>) {
    let from = timeline.noise_only_samples;
    let px = reference_power(&timeline.desired, mics_per_side, from);
    let pn = reference_power(&timeline.noise, mics_per_side, from);
    let sirs = timeline
        .interferers
        .iter()
        .map(|u| 10.0 * (px / reference_power(u, mics_per_side, from)).log10())
        .collect();
    (10.0 * (px / pn).log10(), sirs)
}

/// Writes `mixture.wav`, `desired.wav`, `noise.wav`, `interferer_<p>.wav`
/// (float32, stacked channel order) and the `scene.json` sidecar into `dir`.
pub fn export_scene(scene: &Scene, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let fs = scene.truth.wola.sample_rate.round() as u32;
    let t = &scene.timeline;
    write_wav(dir.join("mixture.wav"), &t.mixture(), fs)?;
    write_wav(dir.join("desired.wav"), &t.desired, fs)?;
    write_wav(dir.join("noise.wav"), &t.noise, fs)?;
    for (p, u) in t.interferers.iter().enumerate() {
        write_wav(dir.join(format!("interferer_{}.wav", p + 1)), u, fs)?;
    }
    scene.truth.save(dir.join("scene.json"))
}
