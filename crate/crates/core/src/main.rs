use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use binaural_core::beamform::FilterBank;
use binaural_core::runner::{
    cell_filters, run_experiment, summarize, BeamformerKind, ExperimentConfig, RChoice, Scenario,
};
use binaural_core::scene::{export_scene, mix_scene, SceneSpec};
use binaural_core::wola::{analyze, apply_filter, synthesize, write_wav};
use binaural_core::Result;

/// Binaural beamforming experiments on synthetic scenes.
#[derive(Parser)]
#[command(name = "binaural", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep and write results.csv and manifest.json.
    Run(Overrides),
    /// Average a results table over scenarios; writes summary.csv and summary.dat.
    Summarize {
        csv: PathBuf,
        #[arg(long, env = "BINAURAL_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Generate one scene and export WAV files plus a scene.json sidecar.
    Simulate(Overrides),
    /// Design the filters of one cell, export them as JSON and write the
    /// filtered mixture.
    Filters(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// JSON configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario as `name` from the config or `desired:int1,int2` in degrees.
    #[arg(long, allow_hyphen_values = true)]
    scenario: Vec<String>,
    /// Observation interval in seconds.
    #[arg(long)]
    interval: Vec<f64>,
    #[arg(long = "r-choice")]
    r_choice: Vec<RChoice>,
    #[arg(long)]
    beamformer: Vec<BeamformerKind>,
    #[arg(long)]
    seed: Vec<u64>,
    /// Output directory.
    #[arg(long, env = "BINAURAL_OUT_DIR")]
    out: Option<PathBuf>,
}

fn parse_scenario(s: &str, known: &[Scenario]) -> Result<Scenario> {
    if let Some(sc) = known.iter().find(|k| k.name == s) {
        return Ok(sc.clone());
    }
    let bad = || binaural_core::Error::InvalidConfig(format!("cannot parse scenario {s:?}"));
    let (desired, rest) = s.split_once(':').ok_or_else(bad)?;
    let desired: f64 = desired.trim().parse().map_err(|_| bad())?;
    let interferers = rest
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario::new(s, desired, &interferers))
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if !self.scenario.is_empty() {
            cfg.scenarios = self
                .scenario
                .iter()
                .map(|s| parse_scenario(s, &cfg.scenarios))
                .collect::<Result<_>>()?;
        }
        if !self.interval.is_empty() {
            cfg.intervals = self.interval.clone();
        }
        if !self.r_choice.is_empty() {
            cfg.r_choices = self.r_choice.clone();
        }
        if !self.beamformer.is_empty() {
            cfg.beamformers = self.beamformer.clone();
        }
        if !self.seed.is_empty() {
            cfg.seeds = self.seed.clone();
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.resolve()?;
            let result = run_experiment(&cfg)?;
            let manifest = result.write(&cfg.output)?;
            eprintln!(
                "{} rows, {} failed cells, {} healed bins -> {}",
                manifest.rows,
                manifest.failed_cells,
                manifest.healed_bins,
                cfg.output.display()
            );
            Ok(if manifest.failed_cells > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Summarize { csv, out } => {
            let dir = out.unwrap_or_else(|| csv.parent().map(PathBuf::from).unwrap_or_default());
            let rows = summarize(&csv, &dir)?;
            eprintln!("{} summary rows -> {}", rows.len(), dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate(o) => {
            let cfg = o.resolve()?;
            let scenario = &cfg.scenarios[0];
            let spec = SceneSpec {
                seed: cfg.seeds[0],
                ..scenario.scene.clone()
            };
            let scene = mix_scene(&spec, &cfg.geometry, &cfg.wola)?;
            export_scene(&scene, &cfg.output)?;
            eprintln!(
                "scene {} (seed {}) -> {}",
                scenario.name,
                spec.seed,
                cfg.output.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Filters(o) => {
            let cfg = o.resolve()?;
            let (scenario, seed, l) = (&cfg.scenarios[0], cfg.seeds[0], cfg.intervals[0]);
            let (choice, kind) = (cfg.r_choices[0], cfg.beamformers[0]);
            let (scene, fs) = cell_filters(&cfg, scenario, seed, l, choice, kind)?;
            std::fs::create_dir_all(&cfg.output)?;
            let label = format!("{kind} {choice} L={l}s {} seed={seed}", scenario.name);
            FilterBank::new(
                cfg.wola.sample_rate,
                cfg.wola.block_length,
                label,
                &fs.filters,
            )
            .save(cfg.output.join("filters.json"))?;
            let frames = analyze(&scene.timeline.mixture(), &cfg.wola)?;
            let out = synthesize(&apply_filter(&frames, &fs.filters)?, &cfg.wola)?;
            write_wav(
                cfg.output.join("output.wav"),
                &out,
                cfg.wola.sample_rate.round() as u32,
            )?;
            eprintln!(
                "{} healed bins -> {}",
                fs.healed_bins.len(),
                cfg.output.display()
            );
            Ok(if fs.healed_bins.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
