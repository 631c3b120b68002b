//! Experiment sweep: scenes x observation intervals x correlation choices x
//! beamformers, averaged over seeds, written as CSV with a JSON manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::beamform::{
    blcmv, bmvdr, bmvdr_rtf, default_ridge, optimal_deltas, threshold_deltas, BeamformerPair,
    StackedCorrelation, DEFAULT_DELTA_MAX, DEFAULT_DELTA_MIN,
};
use crate::error::{Error, Result};
use crate::estimation::{
    build_from_frames, BinCorrelation, BinRtf, EstimationWindows, TimelineFrames,
};
use crate::linalg::HermitianMatrix;
use crate::metrics::{evaluate, interior_bins, MetricsReport, MetricsRow, CSV_COLUMNS};
use crate::scene::{mix_scene, ArrayGeometry, Scene, SceneSpec};
use crate::wola::WolaConfig;

/// The noise-only prefix preceding every scene, in seconds.
pub const NOISE_ONLY_SECONDS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RChoice {
    Ry,
    Rv,
    Rn,
}

impl RChoice {
    pub const ALL: [RChoice; 3] = [RChoice::Ry, RChoice::Rv, RChoice::Rn];

    pub fn select<'a>(&self, c: &'a BinCorrelation) -> &'a HermitianMatrix {
        match self {
            RChoice::Ry => &c.r_y,
            RChoice::Rv => &c.r_v,
            RChoice::Rn => &c.r_n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BeamformerKind {
    #[serde(rename = "BMVDR")]
    Bmvdr,
    #[serde(rename = "BLCMV_opt")]
    BlcmvOpt,
    #[serde(rename = "BLCMV_thr")]
    BlcmvThr,
    #[serde(rename = "BMVDR_RTF")]
    BmvdrRtf,
}

impl BeamformerKind {
    pub const ALL: [BeamformerKind; 4] = [
        BeamformerKind::Bmvdr,
        BeamformerKind::BlcmvOpt,
        BeamformerKind::BlcmvThr,
        BeamformerKind::BmvdrRtf,
    ];

    pub fn delta_mode(&self) -> &'static str {
        match self {
            BeamformerKind::BlcmvOpt => "opt",
            BeamformerKind::BlcmvThr => "thr",
            _ => "none",
        }
    }
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

impl fmt::Display for RChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&label(self))
    }
}

impl fmt::Display for BeamformerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&label(self))
    }
}

impl std::str::FromStr for RChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::InvalidConfig(format!("unknown correlation choice {s:?}")))
    }
}

impl std::str::FromStr for BeamformerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::InvalidConfig(format!("unknown beamformer {s:?}")))
    }
}

/// A named scene layout; its `seed` is replaced by each run seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(flatten)]
    pub scene: SceneSpec,
}

impl Scenario {
    pub fn new(name: &str, desired: f64, interferers: &[f64]) -> Self {
        Self {
            name: name.into(),
            scene: SceneSpec::new(desired, interferers, 0),
        }
    }

    /// The three default layouts: desired -35 deg with an interferer at 150
    /// deg, desired 0 deg with one at -35 deg, and desired 0 deg with both.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::new("S1", -35.0, &[150.0]),
            Self::new("S2", 0.0, &[-35.0]),
            Self::new("S3", 0.0, &[-35.0, 150.0]),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<Scenario>,
    /// Observation intervals in seconds.
    pub intervals: Vec<f64>,
    pub r_choices: Vec<RChoice>,
    pub beamformers: Vec<BeamformerKind>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub wola: WolaConfig,
    pub geometry: ArrayGeometry,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenarios: Scenario::defaults(),
            intervals: vec![0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 3.0],
            r_choices: RChoice::ALL.to_vec(),
            beamformers: BeamformerKind::ALL.to_vec(),
            delta_min: DEFAULT_DELTA_MIN,
            delta_max: DEFAULT_DELTA_MAX,
            seeds: (1..=5).collect(),
            output: PathBuf::from("results"),
            wola: WolaConfig::default(),
            geometry: ArrayGeometry::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidConfig(format!("{what} must not be empty")));
        if self.scenarios.is_empty() {
            return empty("scenarios");
        }
        if self.intervals.is_empty() {
            return empty("intervals");
        }
        if self.r_choices.is_empty() {
            return empty("r_choices");
        }
        if self.beamformers.is_empty() {
            return empty("beamformers");
        }
        if self.seeds.is_empty() {
            return empty("seeds");
        }
        self.wola.validate()?;
        self.geometry.validate()?;
        if !(self.delta_min > 0.0 && self.delta_max > self.delta_min && self.delta_max.is_finite())
        {
            return Err(Error::InvalidThresholds {
                min: self.delta_min,
                max: self.delta_max,
            });
        }
        for s in &self.scenarios {
            s.scene.validate()?;
            if s.scene.noise_only_duration != NOISE_ONLY_SECONDS {
                return Err(Error::InvalidConfig(format!(
                    "scenario {}: the noise-only prefix is fixed at {NOISE_ONLY_SECONDS} s",
                    s.name
                )));
            }
            for &l in &self.intervals {
                if !(l > 0.0) || self.wola.frames_in(l) == 0 {
                    return Err(Error::InvalidConfig(format!(
                        "interval {l} s holds no frame"
                    )));
                }
                // The last analysis frame reaches a block past its hop, so the
                // frames of L seconds need slightly more than L of signal.
                let fs = self.wola.sample_rate;
                let prefix = (s.scene.noise_only_duration * fs).round() as usize;
                let total = prefix + (s.scene.active_duration * fs).round() as usize;
                let w = EstimationWindows::for_timeline(prefix, &self.wola, l)?;
                let needed = (w.observation.end - 1) * self.wola.hop() + self.wola.block_length;
                if l > s.scene.active_duration || needed > total {
                    return Err(Error::InvalidConfig(format!(
                        "interval {l} s does not fit the {} s active segment of scenario {}",
                        s.scene.active_duration, s.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Content hash of the canonical JSON, computed like a git blob id but
    /// with SHA-256.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", json.len()).as_bytes());
        h.update(json.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn cell_count(&self) -> usize {
        self.scenarios.len() * self.intervals.len() * self.r_choices.len() * self.beamformers.len()
    }
}

/// Filters for every bin plus the bins that fell back to BMVDR (or to the
/// reference microphones when no desired RTF was available).
#[derive(Clone, Debug, PartialEq)]
pub struct FilterSet {
    pub filters: Vec<BeamformerPair>,
    pub healed_bins: Vec<usize>,
}

fn design_bin(
    kind: BeamformerKind,
    r: &HermitianMatrix,
    rtf: &BinRtf,
    delta_min: f64,
    delta_max: f64,
) -> Result<BeamformerPair> {
    let (a_l, a_r) = (&rtf.desired.left, &rtf.desired.right);
    let ridge = default_ridge(r);
    if kind == BeamformerKind::Bmvdr {
        return bmvdr(r, a_l, a_r, ridge);
    }
    let (b_l, b_r) = (rtf.interferers_left(), rtf.interferers_right());
    let rt = StackedCorrelation::new(r.clone());
    let w_rtf = bmvdr_rtf(&rt, a_l, a_r, &b_l, &b_r, ridge)?;
    if kind == BeamformerKind::BmvdrRtf {
        return Ok(w_rtf);
    }
    let mut delta = optimal_deltas(&w_rtf, &b_l, &b_r)?;
    if kind == BeamformerKind::BlcmvThr {
        delta = threshold_deltas(&delta, delta_min, delta_max)?;
    }
    blcmv(&rt, a_l, a_r, &b_l, &b_r, &delta, ridge)
}

/// Designs per-bin filters from estimated matrices and RTFs. DC and Nyquist
/// keep the reference selector; a bin whose design fails falls back to
/// BMVDR and is reported in `healed_bins`.
pub fn design_filters(
    kind: BeamformerKind,
    choice: RChoice,
    correlations: &[BinCorrelation],
    rtfs: &[Option<BinRtf>],
    mics_per_side: usize,
    delta_min: f64,
    delta_max: f64,
) -> FilterSet {
    let bins = correlations.len();
    let interior = interior_bins(bins);
    let selector = BeamformerPair::reference_selector(mics_per_side);
    let designed: Vec<(BeamformerPair, bool)> = (0..bins)
        .into_par_iter()
        .map(|k| {
            if !interior.contains(&k) {
                return (selector.clone(), false);
            }
            let Some(rtf) = &rtfs[k] else {
                return (selector.clone(), true);
            };
            let r = choice.select(&correlations[k]);
            match design_bin(kind, r, rtf, delta_min, delta_max) {
                Ok(w) => (w, false),
                Err(_) => {
                    let w = bmvdr(r, &rtf.desired.left, &rtf.desired.right, default_ridge(r))
                        .unwrap_or_else(|_| selector.clone());
                    (w, true)
                }
            }
        })
        .collect();
    let healed_bins = designed
        .iter()
        .enumerate()
        .filter(|(_, d)| d.1)
        .map(|(k, _)| k)
        .collect();
    FilterSet {
        filters: designed.into_iter().map(|d| d.0).collect(),
        healed_bins,
    }
}

/// Metrics of one (scenario, seed, interval, R, beamformer) combination.
#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    pub report: Result<MetricsReport>,
    pub healed: usize,
}

fn scene_for(cfg: &ExperimentConfig, scenario: &Scenario, seed: u64) -> Result<Scene> {
    let spec = SceneSpec {
        seed,
        ..scenario.scene.clone()
    };
    mix_scene(&spec, &cfg.geometry, &cfg.wola)
}

/// All outcomes of one scene, indexed `[interval][r_choice][beamformer]`.
fn run_scene(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    seed: u64,
) -> Result<Vec<Vec<Vec<CellOutcome>>>> {
    let scene = scene_for(cfg, scenario, seed)?;
    let windows: Vec<EstimationWindows> = cfg
        .intervals
        .iter()
        .map(|&l| EstimationWindows::for_timeline(scene.timeline.noise_only_samples, &cfg.wola, l))
        .collect::<Result<_>>()?;
    let last = windows.iter().map(|w| w.observation.end).max().unwrap_or(0);
    let needed = (last.max(1) - 1) * cfg.wola.hop() + cfg.wola.block_length;
    let frames = TimelineFrames::analyze(
        &scene.timeline,
        cfg.geometry.mics_per_side,
        &cfg.wola,
        Some(needed),
    )?;
    let m = cfg.geometry.mics_per_side;
    let eval_bins = interior_bins(cfg.wola.bins());
    windows
        .iter()
        .map(|w| {
            let (corr, rtf) = build_from_frames(&frames, w)?;
            Ok(cfg
                .r_choices
                .iter()
                .map(|&choice| {
                    cfg.beamformers
                        .iter()
                        .map(|&kind| {
                            let fs = design_filters(
                                kind,
                                choice,
                                &corr.bins,
                                &rtf.bins,
                                m,
                                cfg.delta_min,
                                cfg.delta_max,
                            );
                            let healed = fs
                                .healed_bins
                                .iter()
                                .filter(|k| eval_bins.contains(k))
                                .count();
                            CellOutcome {
                                report: evaluate(&scene.truth, &fs.filters, eval_bins.clone()),
                                healed,
                            }
                        })
                        .collect()
                })
                .collect())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSeed {
    pub scenario: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub runs: Vec<RunSeed>,
    pub artifacts: Vec<PathBuf>,
    pub rows: usize,
    pub failed_cells: usize,
    pub healed_bins: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<MetricsRow>,
}

impl ExperimentResult {
    pub fn failed_cells(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status.starts_with("failed"))
            .count()
    }

    pub fn healed_bins(&self) -> usize {
        self.rows
            .iter()
            .filter_map(|r| r.status.strip_prefix("healed="))
            .filter_map(|n| n.parse::<usize>().ok())
            .sum()
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        write_rows(&self.rows)
    }

    /// Writes `results.csv` and `manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<RunManifest> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join("results.csv");
        let manifest_path = dir.join("manifest.json");
        std::fs::write(&csv_path, self.csv_bytes()?)?;
        let manifest = RunManifest {
            config: self.config.clone(),
            config_hash: self.config.content_hash(),
            runs: self
                .config
                .scenarios
                .iter()
                .flat_map(|s| {
                    self.config.seeds.iter().map(|&seed| RunSeed {
                        scenario: s.name.clone(),
                        seed,
                    })
                })
                .collect(),
            artifacts: vec![csv_path, manifest_path.clone()],
            rows: self.rows.len(),
            failed_cells: self.failed_cells(),
            healed_bins: self.healed_bins(),
        };
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

fn write_rows<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.to_string()))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.map(|v| mean(v.into_iter()))
}

/// Averages the seeds of one cell into a row. A failure in any seed fails
/// the cell.
fn cell_row(
    scenario: &str,
    kind: BeamformerKind,
    choice: RChoice,
    l: f64,
    outcomes: &[&CellOutcome],
) -> MetricsRow {
    let healed: usize = outcomes.iter().map(|o| o.healed).sum();
    let reports: std::result::Result<Vec<&MetricsReport>, &Error> =
        outcomes.iter().map(|o| o.report.as_ref()).collect();
    let mut row = MetricsRow {
        scenario: scenario.into(),
        beamformer: kind.to_string(),
        r: choice.to_string(),
        delta_mode: kind.delta_mode().into(),
        l_seconds: l,
        snr_in: f64::NAN,
        snr_out: f64::NAN,
        sir_in: None,
        sir_out: None,
        sinr_in: f64::NAN,
        sinr_out: f64::NAN,
        sinr_improvement: f64::NAN,
        ild_err_db: f64::NAN,
        itd_err_us: f64::NAN,
        status: String::new(),
    };
    match reports {
        Err(e) => row.status = format!("failed: {e}"),
        Ok(reports) => {
            let b = |f: fn(&MetricsReport) -> f64| mean(reports.iter().map(|r| f(r)));
            row.snr_in = b(|r| r.broadband.snr_in);
            row.snr_out = b(|r| r.broadband.snr_out);
            row.sir_in = mean_opt(reports.iter().map(|r| r.broadband.sir_in));
            row.sir_out = mean_opt(reports.iter().map(|r| r.broadband.sir_out));
            row.sinr_in = b(|r| r.broadband.sinr_in);
            row.sinr_out = b(|r| r.broadband.sinr_out);
            row.sinr_improvement = row.sinr_out - row.sinr_in;
            row.ild_err_db = b(|r| r.mean_cue_errors().0);
            row.itd_err_us = b(|r| r.mean_cue_errors().1);
            row.status = if healed == 0 {
                "ok".into()
            } else {
                format!("healed={healed}")
            };
        }
    }
    row
}

/// Runs the full sweep. Scenes are independent jobs; rows come out in the
/// fixed order scenario, beamformer, R, L regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> = (0..cfg.scenarios.len())
        .flat_map(|s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let outcomes: Vec<Result<Vec<Vec<Vec<CellOutcome>>>>> = jobs
        .par_iter()
        .map(|&(s, seed)| run_scene(cfg, &cfg.scenarios[s], seed))
        .collect();

    let mut rows = Vec::with_capacity(cfg.cell_count());
    for (s, scenario) in cfg.scenarios.iter().enumerate() {
        let seeds = &outcomes[s * cfg.seeds.len()..(s + 1) * cfg.seeds.len()];
        for (bi, &kind) in cfg.beamformers.iter().enumerate() {
            for (ri, &choice) in cfg.r_choices.iter().enumerate() {
                for (li, &l) in cfg.intervals.iter().enumerate() {
                    let cell: std::result::Result<Vec<&CellOutcome>, &Error> = seeds
                        .iter()
                        .map(|o| o.as_ref().map(|o| &o[li][ri][bi]))
                        .collect();
                    rows.push(match cell {
                        Ok(c) => cell_row(&scenario.name, kind, choice, l, &c),
                        Err(e) => {
                            let failed = CellOutcome {
                                report: Err(e.clone()),
                                healed: 0,
                            };
                            cell_row(&scenario.name, kind, choice, l, &[&failed])
                        }
                    });
                }
            }
        }
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        rows,
    })
}

/// Metrics averaged over scenarios for one (beamformer, R, delta mode, L).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub beamformer: String,
    #[serde(rename = "R")]
    pub r: String,
    pub delta_mode: String,
    #[serde(rename = "L_seconds")]
    pub l_seconds: f64,
    pub scenarios: usize,
    pub snr_in: f64,
    pub snr_out: f64,
    pub sir_in: Option<f64>,
    pub sir_out: Option<f64>,
    pub sinr_in: f64,
    pub sinr_out: f64,
    pub sinr_improvement: f64,
    pub ild_err_db: f64,
    pub itd_err_us: f64,
}

/// Groups rows by (beamformer, R, delta mode, L) and averages every metric
/// over scenarios. Failed rows are left out; groups keep first-seen order.
pub fn summarize_rows(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String, String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, String, String, u64), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.status.starts_with("failed")) {
        let key = (
            r.beamformer.clone(),
            r.r.clone(),
            r.delta_mode.clone(),
            r.l_seconds.to_bits(),
        );
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let avg = |f: fn(&MetricsRow) -> f64| mean(g.iter().map(|r| f(r)));
            SummaryRow {
                beamformer: key.0.clone(),
                r: key.1.clone(),
                delta_mode: key.2.clone(),
                l_seconds: f64::from_bits(key.3),
                scenarios: g.len(),
                snr_in: avg(|r| r.snr_in),
                snr_out: avg(|r| r.snr_out),
                sir_in: mean_opt(g.iter().map(|r| r.sir_in)),
                sir_out: mean_opt(g.iter().map(|r| r.sir_out)),
                sinr_in: avg(|r| r.sinr_in),
                sinr_out: avg(|r| r.sinr_out),
                sinr_improvement: avg(|r| r.sinr_improvement),
                ild_err_db: avg(|r| r.ild_err_db),
                itd_err_us: avg(|r| r.itd_err_us),
            }
        })
        .collect()
}

/// Reads a results table, checking the header against the fixed schema.
pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(Error::SchemaMismatch(format!(
            "unexpected header {}",
            header.join(",")
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::SchemaMismatch(e.to_string())))
        .collect()
}

/// One gnuplot data block per (beamformer, R, delta mode): columns
/// `L sinr_improvement ild_err_db itd_err_us`, blocks separated by two blank
/// lines so `index` selects them.
pub fn gnuplot_data(summary: &[SummaryRow]) -> String {
    let mut blocks: Vec<(String, Vec<&SummaryRow>)> = Vec::new();
    for r in summary {
        let name = format!("{} {} {}", r.beamformer, r.r, r.delta_mode);
        match blocks.iter_mut().find(|b| b.0 == name) {
            Some(b) => b.1.push(r),
            None => blocks.push((name, vec![r])),
        }
    }
    let mut out = String::new();
    for (i, (name, rows)) in blocks.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!(
            "# {name}\n# L_seconds sinr_improvement ild_err_db itd_err_us\n"
        ));
        for r in rows {
            out.push_str(&format!(
                "{} {} {} {}\n",
                r.l_seconds, r.sinr_improvement, r.ild_err_db, r.itd_err_us
            ));
        }
    }
    out
}

/// Writes `summary.csv` and `summary.dat` next to each other in `dir`.
pub fn summarize(csv_path: impl AsRef<Path>, dir: impl AsRef<Path>) -> Result<Vec<SummaryRow>> {
    let summary = summarize_rows(&read_results(csv_path)?);
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("summary.csv"), write_rows(&summary)?)?;
    let mut f = std::fs::File::create(dir.join("summary.dat"))?;
    f.write_all(gnuplot_data(&summary).as_bytes())?;
    Ok(summary)
}

/// Estimates and designs the filters of one configuration cell for export.
pub fn cell_filters(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    seed: u64,
    seconds: f64,
    choice: RChoice,
    kind: BeamformerKind,
) -> Result<(Scene, FilterSet)> {
    let scene = scene_for(cfg, scenario, seed)?;
    let w = EstimationWindows::for_timeline(scene.timeline.noise_only_samples, &cfg.wola, seconds)?;
    let needed = (w.observation.end - 1) * cfg.wola.hop() + cfg.wola.block_length;
    let frames = TimelineFrames::analyze(
        &scene.timeline,
        cfg.geometry.mics_per_side,
        &cfg.wola,
        Some(needed),
    )?;
    let (corr, rtf) = build_from_frames(&frames, &w)?;
    let fs = design_filters(
        kind,
        choice,
        &corr.bins,
        &rtf.bins,
        cfg.geometry.mics_per_side,
        cfg.delta_min,
        cfg.delta_max,
    );
    Ok((scene, fs))
}
