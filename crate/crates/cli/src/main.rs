use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use trenchbt::io::write_json;
use trenchbt::pipeline::{run_pipeline, ErrorReport, PipelineConfig, Runner, Stage};
use trenchbt::Error;

#[derive(Parser, Debug)]
#[command(name = "trenchbt", version, about = "Bradley-Terry ratings for pass-rush interactions")]
struct Cli {
    /// Worker threads for cross-validation folds and bootstrap replicates.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (single-stage commands).
    #[arg(long, default_value = ".")]
    out: PathBuf,

    #[command(flatten)]
    keys: ConfigKeys,
}

/// One flag per config key.
#[derive(Args, Debug, Default, Serialize)]
struct ConfigKeys {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    run_name: Option<String>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    stages: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    interactions: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tracking: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    engagements: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon_frames: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tie_tolerance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    min_overlap_frames: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_rushers: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_blockers: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_games: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_plays_per_game: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_interactions_per_play: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_weeks: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_sigma_r: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_sigma_b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_delta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_double_team_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_coupled: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_first_team: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    synth_second_team: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_win: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_severity: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_min: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    folds: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    split_ratio: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m_win: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m_severity: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    sensitivity_m: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    w_win: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    w_hit: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap_replicates: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    path_replicates: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    accolades: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    external_min_n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    min_n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    top: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build interactions.csv from tracking, events, engagements and schedule files.
    Ingest(Common),
    /// Generate a synthetic interaction table with known parameters.
    Synth(Common),
    /// Fit both models on the full table (penalties fixed or cross-validated).
    Fit(Common),
    /// Ordered holdout comparison against the global and matchup baselines.
    Validate(Common),
    /// Matchup-baseline prior-strength sweep.
    Sensitivity(Common),
    /// End-to-end game bootstrap with fixed penalties.
    Bootstrap(Common),
    /// Weekly cumulative rating paths with bootstrap bands.
    Path(Common),
    /// Rank validation against accolade labels.
    External(Common),
    /// Top players per model and role.
    Leaderboard {
        #[command(flatten)]
        common: Common,
        /// Run the bootstrap first and attach interquartile bands.
        #[arg(long)]
        bands: bool,
    },
    /// Run the configured stages under a fresh run directory.
    Pipeline(Common),
}

fn load_config(common: &Common) -> Result<PipelineConfig, Error> {
    let mut table = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    let overrides = toml::Table::try_from(&common.keys).map_err(|e| Error::Config(e.to_string()))?;
    table.extend(overrides);
    table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

fn fail(dir: Option<&Path>, stage: Option<Stage>, e: &Error) -> ExitCode {
    eprintln!("error{}: {e}", stage.map(|s| format!(" in stage {s}")).unwrap_or_default());
    if let Some(dir) = dir {
        if dir.is_dir() {
            let _ = write_json(dir.join("error.json"), &ErrorReport::new(stage, e));
        }
    }
    ExitCode::from(e.kind().exit_code() as u8)
}

fn run_stages(common: &Common, stages: &[Stage]) -> ExitCode {
    let cfg = match load_config(common) {
        Ok(c) => c,
        Err(e) => return fail(None, None, &e),
    };
    let mut runner = match Runner::new(cfg, &common.out) {
        Ok(r) => r,
        Err(e) => return fail(None, None, &e),
    };
    match runner.run(stages) {
        Ok(()) => {
            println!("{}", common.out.display());
            ExitCode::SUCCESS
        }
        Err((stage, e)) => fail(Some(&common.out), stage, &e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match &cli.command {
        Command::Ingest(c) => run_stages(c, &[Stage::Ingest]),
        Command::Synth(c) => run_stages(c, &[Stage::Synth]),
        Command::Fit(c) => run_stages(c, &[Stage::Fit]),
        Command::Validate(c) => run_stages(c, &[Stage::Validate]),
        Command::Sensitivity(c) => run_stages(c, &[Stage::Sensitivity]),
        Command::Bootstrap(c) => run_stages(c, &[Stage::Bootstrap]),
        Command::Path(c) => run_stages(c, &[Stage::Path]),
        Command::External(c) => run_stages(c, &[Stage::External]),
        Command::Leaderboard { common, bands } => {
            let stages: &[Stage] = if *bands { &[Stage::Bootstrap, Stage::Leaderboard] } else { &[Stage::Leaderboard] };
            run_stages(common, stages)
        }
        Command::Pipeline(c) => {
            let cfg = match load_config(c) {
                Ok(cfg) => cfg,
                Err(e) => return fail(None, None, &e),
            };
            if cli.threads.is_none() {
                if let Some(n) = cfg.threads {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
            match run_pipeline(cfg) {
                Ok(dir) => {
                    println!("{}", dir.display());
                    ExitCode::SUCCESS
                }
                Err((dir, e)) => {
                    eprintln!("error: {e} (run directory {})", dir.display());
                    ExitCode::from(e.kind().exit_code() as u8)
                }
            }
        }
    }
}
