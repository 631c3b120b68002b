use std::path::Path;

use hound::{SampleFormat, WavSpec};

use super::MultichannelSignal;
use crate::error::{Error, Result};

/// Reads an interleaved PCM16 or float32 WAV file. Returns the signal and its
/// sample rate.
pub fn read_wav(path: impl AsRef<Path>) -> Result<(MultichannelSignal, u32)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let ch = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (fmt, bits) => {
            return Err(Error::Wav(format!(
                "unsupported sample format {fmt:?} with {bits} bits"
            )))
        }
    };
    let mut channels = vec![Vec::with_capacity(interleaved.len() / ch.max(1)); ch];
    for frame in interleaved.chunks_exact(ch) {
        for (c, v) in frame.iter().enumerate() {
            channels[c].push(*v);
        }
    }
    Ok((MultichannelSignal::new(channels)?, spec.sample_rate))
}

/// Writes an interleaved float32 WAV file.
pub fn write_wav(
    path: impl AsRef<Path>,
    signal: &MultichannelSignal,
    sample_rate: u32,
) -> Result<()> {
    let spec = WavSpec {
        channels: signal.channel_count() as u16,
        sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for i in 0..signal.len() {
        for c in 0..signal.channel_count() {
            writer.write_sample(signal.channel(c)[i] as f32)?;
        }
    }
    writer.finalize()?;
    Ok(())
}
