//! Binaural SNR/SIR/SINR and interaural cue errors computed from true
//! component correlation matrices and per-bin filters.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::beamform::BeamformerPair;
use crate::error::{Error, Result};
use crate::linalg::{inner, HermitianMatrix, C64};
use crate::scene::SceneTruth;

/// Upper frequency limit for ITD errors.
pub const ITD_MAX_HZ: f64 = 1500.0;

// Filter responses smaller than this leave the interaural ratio undefined.
const CUE_FLOOR: f64 = 1e-12;

/// Per-bin ratios in dB; SIR is `None` without interferers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub snr: f64,
    pub sir: Option<f64>,
    pub sinr: f64,
}

fn power(r: &HermitianMatrix, w: &BeamformerPair) -> Result<f64> {
    Ok(r.quad_form(w.left())? + r.quad_form(w.right())?)
}

fn ratio_db(num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator(den));
    }
    Ok(10.0 * (num / den).log10())
}

/// Output power of the desired component over that of the noise, the
/// interference and their sum, each summed over both ears. Pass
/// `BeamformerPair::reference_selector` for the input values.
pub fn binaural_ratios(
    r_x: &HermitianMatrix,
    r_u: &HermitianMatrix,
    r_n: &HermitianMatrix,
    r_v: &HermitianMatrix,
    w: &BeamformerPair,
) -> Result<Ratios> {
    let x = power(r_x, w)?;
    let u = power(r_u, w)?;
    let sir = if r_u.trace() > 0.0 {
        Some(ratio_db(x, u)?)
    } else {
        None
    };
    Ok(Ratios {
        snr: ratio_db(x, power(r_n, w)?)?,
        sir,
        sinr: ratio_db(x, power(r_v, w)?)?,
    })
}

/// Interaural cue errors of one source, averaged over bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CueErrors {
    pub ild_db: f64,
    pub itd_us: f64,
    /// Bins where a filter response vanished and the cue was undefined.
    pub skipped_bins: usize,
}

/// Compares the output interaural transfer `(w_L^H b)/(w_R^H b)` with the
/// input one `b[0]/b[M]`. ILD errors are averaged over all given bins, ITD
/// errors over the given bins with `0 < f < ITD_MAX_HZ`.
pub fn cue_errors(
    filters: &[BeamformerPair],
    atfs: &[&[C64]],
    frequencies: &[f64],
    mics_per_side: usize,
) -> Result<CueErrors> {
    if filters.len() != atfs.len() || filters.len() != frequencies.len() {
        return Err(Error::BinCountMismatch {
            expected: filters.len(),
            got: atfs.len().min(frequencies.len()),
        });
    }
    let (mut ild_sum, mut ild_n, mut itd_sum, mut itd_n, mut skipped) =
        (0.0, 0usize, 0.0, 0usize, 0usize);
    for ((w, b), &f) in filters.iter().zip(atfs).zip(frequencies) {
        if w.left().len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: w.left().len(),
                got: b.len(),
            });
        }
        let (zl, zr) = (inner(w.left(), b), inner(w.right(), b));
        let (bl, br) = (b[0], b[mics_per_side]);
        if zl.norm() <= CUE_FLOOR
            || zr.norm() <= CUE_FLOOR
            || bl.norm() <= CUE_FLOOR
            || br.norm() <= CUE_FLOOR
        {
            skipped += 1;
            continue;
        }
        let h_out = zl / zr;
        let h_in = bl / br;
        ild_sum += (20.0 * h_out.norm().log10() - 20.0 * h_in.norm().log10()).abs();
        ild_n += 1;
        if f > 0.0 && f < ITD_MAX_HZ {
            itd_sum += (h_out * h_in.conj()).arg().abs() / (2.0 * PI * f) * 1e6;
            itd_n += 1;
        }
    }
    if ild_n == 0 || itd_n == 0 {
        return Err(Error::AllBinsSkipped);
    }
    Ok(CueErrors {
        ild_db: ild_sum / ild_n as f64,
        itd_us: itd_sum / itd_n as f64,
        skipped_bins: skipped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinMetrics {
    pub bin: usize,
    pub frequency_hz: f64,
    pub input: Ratios,
    pub output: Ratios,
}

/// Frequency-averaged values in dB.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Broadband {
    pub snr_in: f64,
    pub snr_out: f64,
    pub sir_in: Option<f64>,
    pub sir_out: Option<f64>,
    pub sinr_in: f64,
    pub sinr_out: f64,
}

impl Broadband {
    pub fn snr_improvement(&self) -> f64 {
        self.snr_out - self.snr_in
    }

    pub fn sir_improvement(&self) -> Option<f64> {
        Some(self.sir_out? - self.sir_in?)
    }

    pub fn sinr_improvement(&self) -> f64 {
        self.sinr_out - self.sinr_in
    }

    /// Arithmetic mean of per-bin dB values.
    pub fn mean_of(bins: &[BinMetrics]) -> Self {
        let n = bins.len() as f64;
        let mean = |f: &dyn Fn(&BinMetrics) -> f64| bins.iter().map(f).sum::<f64>() / n;
        let mean_opt = |f: &dyn Fn(&BinMetrics) -> Option<f64>| {
            bins.iter().map(f).sum::<Option<f64>>().map(|s| s / n)
        };
        Self {
            snr_in: mean(&|b| b.input.snr),
            snr_out: mean(&|b| b.output.snr),
            sir_in: mean_opt(&|b| b.input.sir),
            sir_out: mean_opt(&|b| b.output.sir),
            sinr_in: mean(&|b| b.input.sinr),
            sinr_out: mean(&|b| b.output.sinr),
        }
    }
}

/// Metrics of one filter set on one scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub bins: Vec<BinMetrics>,
    pub broadband: Broadband,
    /// One entry per interferer.
    pub cues: Vec<CueErrors>,
}

impl MetricsReport {
    /// Cue errors averaged over interferers (NaN without interferers).
    pub fn mean_cue_errors(&self) -> (f64, f64) {
        if self.cues.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let n = self.cues.len() as f64;
        (
            self.cues.iter().map(|c| c.ild_db).sum::<f64>() / n,
            self.cues.iter().map(|c| c.itd_us).sum::<f64>() / n,
        )
    }
}

/// Bins excluding DC and Nyquist.
pub fn interior_bins(bins: usize) -> Range<usize> {
    1..bins.saturating_sub(1)
}

/// Evaluates `filters` (one per bin, all bins) against the scene's true
/// matrices over `bins`.
pub fn evaluate(
    truth: &SceneTruth,
    filters: &[BeamformerPair],
    bins: Range<usize>,
) -> Result<MetricsReport> {
    if filters.len() != truth.bins.len() {
        return Err(Error::BinCountMismatch {
            expected: truth.bins.len(),
            got: filters.len(),
        });
    }
    if bins.is_empty() || bins.end > filters.len() {
        return Err(Error::AllBinsSkipped);
    }
    let m = truth.mics_per_side();
    let selector = BeamformerPair::reference_selector(m);
    let per_bin = bins
        .clone()
        .map(|k| {
            let t = truth.matrices(k);
            Ok(BinMetrics {
                bin: k,
                frequency_hz: truth.bins[k].frequency_hz,
                input: binaural_ratios(&t.r_x, &t.r_u, &t.r_n, &t.r_v, &selector)?,
                output: binaural_ratios(&t.r_x, &t.r_u, &t.r_n, &t.r_v, &filters[k])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let freqs: Vec<f64> = bins.clone().map(|k| truth.bins[k].frequency_hz).collect();
    let cues = (0..truth.spec.interferers())
        .map(|p| {
            let atfs: Vec<&[_]> = bins
                .clone()
                .map(|k| &truth.bins[k].interferer_atfs[p][..])
                .collect();
            cue_errors(&filters[bins.clone()], &atfs, &freqs, m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        broadband: Broadband::mean_of(&per_bin),
        bins: per_bin,
        cues,
    })
}

/// One line of the results table. Columns are fixed; `status` is `ok`,
/// `healed=<bins>` or `failed: <reason>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub beamformer: String,
    #[serde(rename = "R")]
    pub r: String,
    pub delta_mode: String,
    #[serde(rename = "L_seconds")]
    pub l_seconds: f64,
    pub snr_in: f64,
    pub snr_out: f64,
    pub sir_in: Option<f64>,
    pub sir_out: Option<f64>,
    pub sinr_in: f64,
    pub sinr_out: f64,
    pub sinr_improvement: f64,
    pub ild_err_db: f64,
    pub itd_err_us: f64,
    pub status: String,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "scenario",
    "beamformer",
    "R",
    "delta_mode",
    "L_seconds",
    "snr_in",
    "snr_out",
    "sir_in",
    "sir_out",
    "sinr_in",
    "sinr_out",
    "sinr_improvement",
    "ild_err_db",
    "itd_err_us",
    "status",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexVector;

    fn cv(v: &[f64]) -> ComplexVector {
        ComplexVector::new(v.iter().map(|&x| C64::new(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn known_sinr_ratio() {
        let r_v = HermitianMatrix::diagonal(&[1.0, 2.0, 1.5, 0.5]);
        let r_x = r_v.scaled(2.0);
        let zero = HermitianMatrix::zeros(4);
        let r = binaural_ratios(
            &r_x,
            &zero,
            &r_v,
            &r_v,
            &BeamformerPair::reference_selector(2),
        )
        .unwrap();
        assert!((r.sinr - 10.0 * 2f64.log10()).abs() < 1e-12);
        assert_eq!(r.sir, None);
    }

    #[test]
    fn factor_two_ild() {
        let w = BeamformerPair::new(cv(&[0.4, 0.0]), cv(&[0.0, 0.2])).unwrap();
        let b = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        let e = cue_errors(&[w.clone(), w], &[&b, &b], &[500.0, 3000.0], 1).unwrap();
        assert!((e.ild_db - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!(e.itd_us.abs() < 1e-12);
    }

    #[test]
    fn skipped_bins() {
        let w = BeamformerPair::new(cv(&[0.0, 1.0]), cv(&[0.0, 1.0])).unwrap();
        let b = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert_eq!(
            cue_errors(&[w], &[&b], &[500.0], 1),
            Err(Error::AllBinsSkipped)
        );
    }

    #[test]
    fn csv_header() {
        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(MetricsRow {
            scenario: "s".into(),
            beamformer: "BMVDR".into(),
            r: "Ry".into(),
            delta_mode: "none".into(),
            l_seconds: 0.1,
            snr_in: 0.0,
            snr_out: 0.0,
            sir_in: None,
            sir_out: None,
            sinr_in: 0.0,
            sinr_out: 0.0,
            sinr_improvement: 0.0,
            ild_err_db: 0.0,
            itd_err_us: 0.0,
            status: "ok".into(),
        })
        .unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    }
}
