//! Stage orchestration: one flat config, one output directory per run.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    end_to_end_bootstrap, weekly_path_bootstrap, write_replicates, write_summary, BootstrapConfig, BootstrapSummary,
};
use crate::bt::{log_spaced_grid, BinaryFit, FitResult, MultinomialFit, SolverOptions};
use crate::error::{Error, Result};
use crate::evaluate::{
    prior_sensitivity, run_validation, select_lambdas, write_sensitivity, write_validation, LambdaChoice, Lambdas,
    ValidationConfig,
};
use crate::external::{run_external_eval, write_external, AccoladeLabels, TeamLevel};
use crate::ingest::{IngestConfig, TrackingInputs, WinRule};
use crate::interaction::{summarize, InteractionTable, Role, SeverityWeights};
use crate::io::{read_interactions, write_interactions, write_json};
use crate::report::{leaderboard, path_rows, write_leaderboard, write_path, LeaderboardOptions};
use crate::synth::{synth_generate, SynthConfig, SynthTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Synth,
    Fit,
    Validate,
    Sensitivity,
    Bootstrap,
    Path,
    External,
    Leaderboard,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Synth,
        Stage::Fit,
        Stage::Validate,
        Stage::Sensitivity,
        Stage::Bootstrap,
        Stage::Path,
        Stage::External,
        Stage::Leaderboard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Synth => "synth",
            Stage::Fit => "fit",
            Stage::Validate => "validate",
            Stage::Sensitivity => "sensitivity",
            Stage::Bootstrap => "bootstrap",
            Stage::Path => "path",
            Stage::External => "external",
            Stage::Leaderboard => "leaderboard",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage '{s}'")))
    }
}

/// Every key of the run config. Missing keys take the defaults below,
/// except `seed`, which must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub run_name: Option<String>,
    pub stages: Vec<Stage>,

    pub interactions: Option<PathBuf>,
    pub tracking: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub engagements: Option<PathBuf>,
    pub schedule: Option<PathBuf>,
    pub horizon_frames: u32,
    pub tie_tolerance: f64,
    pub min_overlap_frames: u32,

    pub synth_rushers: usize,
    pub synth_blockers: usize,
    pub synth_games: usize,
    pub synth_plays_per_game: usize,
    pub synth_interactions_per_play: usize,
    pub synth_weeks: u32,
    pub synth_sigma_r: f64,
    pub synth_sigma_b: f64,
    pub synth_alpha: f64,
    pub synth_delta: f64,
    pub synth_double_team_rate: f64,
    pub synth_coupled: bool,
    /// Accolades derived from the generator: this many first-team players per role...
    pub synth_first_team: usize,
    /// ...followed by this many second-team players.
    pub synth_second_team: usize,

    pub lambda_win: Option<f64>,
    pub lambda_severity: Option<f64>,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_size: usize,
    pub folds: usize,
    pub split_ratio: f64,
    pub m_win: f64,
    pub m_severity: f64,
    pub sensitivity_m: Vec<f64>,
    pub w_win: f64,
    pub w_hit: f64,

    pub bootstrap_replicates: usize,
    pub path_replicates: usize,

    pub accolades: Option<PathBuf>,
    pub external_min_n: usize,
    pub min_n: usize,
    pub top: usize,
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let rule = WinRule::default();
        let ingest = IngestConfig::default();
        PipelineConfig {
            seed: None,
            out_dir: PathBuf::from("runs"),
            run_name: None,
            stages: vec![Stage::Fit, Stage::Validate],
            interactions: None,
            tracking: None,
            events: None,
            engagements: None,
            schedule: None,
            horizon_frames: rule.horizon_frames,
            tie_tolerance: rule.tie_tolerance,
            min_overlap_frames: ingest.min_overlap_frames,
            synth_rushers: synth.n_rushers,
            synth_blockers: synth.n_blockers,
            synth_games: synth.n_games,
            synth_plays_per_game: synth.plays_per_game,
            synth_interactions_per_play: synth.interactions_per_play,
            synth_weeks: synth.weeks,
            synth_sigma_r: synth.sigma_r,
            synth_sigma_b: synth.sigma_b,
            synth_alpha: synth.alpha,
            synth_delta: synth.delta,
            synth_double_team_rate: synth.double_team_rate,
            synth_coupled: synth.coupled,
            synth_first_team: 4,
            synth_second_team: 4,
            lambda_win: None,
            lambda_severity: None,
            grid_min: 1e-6,
            grid_max: 1e2,
            grid_size: 25,
            folds: crate::bt::DEFAULT_FOLDS,
            split_ratio: crate::evaluate::DEFAULT_SPLIT_RATIO,
            m_win: crate::baselines::DEFAULT_M_WIN,
            m_severity: crate::baselines::DEFAULT_M_SEVERITY,
            sensitivity_m: crate::baselines::SENSITIVITY_GRID.to_vec(),
            w_win: 0.10,
            w_hit: 0.20,
            bootstrap_replicates: 1000,
            path_replicates: 100,
            accolades: None,
            external_min_n: 0,
            min_n: crate::report::DEFAULT_MIN_INTERACTIONS,
            top: crate::report::DEFAULT_TOP,
            threads: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("config must set an explicit `seed`".into()))
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        Ok(SynthConfig {
            n_rushers: self.synth_rushers,
            n_blockers: self.synth_blockers,
            n_games: self.synth_games,
            plays_per_game: self.synth_plays_per_game,
            interactions_per_play: self.synth_interactions_per_play,
            weeks: self.synth_weeks,
            sigma_r: self.synth_sigma_r,
            sigma_b: self.synth_sigma_b,
            alpha: self.synth_alpha,
            delta: self.synth_delta,
            double_team_rate: self.synth_double_team_rate,
            coupled: self.synth_coupled,
            seed: self.seed()?,
            ..SynthConfig::default()
        })
    }

    pub fn ingest_config(&self) -> IngestConfig {
        IngestConfig {
            win_rule: WinRule { horizon_frames: self.horizon_frames, tie_tolerance: self.tie_tolerance },
            min_overlap_frames: self.min_overlap_frames,
        }
    }

    pub fn weights(&self) -> Result<SeverityWeights<f64>> {
        SeverityWeights::new(self.w_win, self.w_hit)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.grid_min > 0.0 && self.grid_max >= self.grid_min && self.grid_size >= 1) {
            return Err(Error::Config(format!(
                "lambda grid needs 0 < grid_min <= grid_max and grid_size >= 1 (got {}, {}, {})",
                self.grid_min, self.grid_max, self.grid_size
            )));
        }
        Ok(log_spaced_grid(self.grid_min, self.grid_max, self.grid_size))
    }

    pub fn fixed_lambdas(&self) -> Result<Option<Lambdas<f64>>> {
        match (self.lambda_win, self.lambda_severity) {
            (Some(win), Some(severity)) => Ok(Some(Lambdas { win, severity })),
            (None, None) => Ok(None),
            _ => Err(Error::Config("set both lambda_win and lambda_severity, or neither".into())),
        }
    }

    pub fn validation_config(&self) -> Result<ValidationConfig<f64>> {
        let lambda = match self.fixed_lambdas()? {
            Some(l) => LambdaChoice::Fixed(l),
            None => LambdaChoice::Cv(self.grid()?),
        };
        Ok(ValidationConfig {
            ratio: self.split_ratio,
            lambda,
            folds: self.folds,
            m_win: self.m_win,
            m_severity: self.m_severity,
            solver: SolverOptions::default(),
        })
    }

    /// Requested stages in execution order, without repeats.
    pub fn ordered_stages(&self) -> Vec<Stage> {
        let set: BTreeSet<Stage> = self.stages.iter().copied().collect();
        set.into_iter().collect()
    }
}

/// Synthetic accolades: the generator's strongest players per role by
/// binary effect, first team then second team.
pub fn synth_accolades(truth: &SynthTruth, first: usize, second: usize) -> AccoladeLabels {
    let mut labels = AccoladeLabels::default();
    for role in Role::BOTH {
        let mut ranked: Vec<_> = truth.effects(role).iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for (i, (id, _)) in ranked.into_iter().take(first + second).enumerate() {
            labels.labels.insert(id.clone(), if i < first { TeamLevel::First } else { TeamLevel::Second });
        }
    }
    labels
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub stage: Option<Stage>,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl ErrorReport {
    pub fn new(stage: Option<Stage>, e: &Error) -> Self {
        ErrorReport { stage, kind: e.kind().as_str(), exit_code: e.kind().exit_code(), message: e.to_string() }
    }
}

/// Holds the data and intermediate results shared between stages.
pub struct Runner {
    pub cfg: PipelineConfig,
    pub dir: PathBuf,
    pub table: Option<InteractionTable>,
    pub truth: Option<SynthTruth>,
    pub accolades: Option<AccoladeLabels>,
    pub lambdas: Option<Lambdas<f64>>,
    pub fits: Option<(BinaryFit<f64>, MultinomialFit<f64>)>,
    pub bootstrap: Option<BootstrapSummary>,
    validated: Option<Lambdas<f64>>,
}

impl Runner {
    pub fn new(cfg: PipelineConfig, dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Runner {
            cfg,
            dir,
            table: None,
            truth: None,
            accolades: None,
            lambdas: None,
            fits: None,
            bootstrap: None,
            validated: None,
        })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Runs the stages in pipeline order; the failing stage is reported with the error.
    pub fn run(&mut self, stages: &[Stage]) -> std::result::Result<(), (Option<Stage>, Error)> {
        let set: BTreeSet<Stage> = stages.iter().copied().collect();
        for &stage in &set {
            log::info!("stage {stage}");
            self.run_stage(stage).map_err(|e| (Some(stage), e))?;
        }
        Ok(())
    }

    fn run_stage(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Synth => self.synth(),
            Stage::Fit => self.fit(),
            Stage::Validate => self.validate(),
            Stage::Sensitivity => self.sensitivity(),
            Stage::Bootstrap => self.run_bootstrap(),
            Stage::Path => self.path(),
            Stage::External => self.external(),
            // carries bootstrap bands when that stage ran first
            Stage::Leaderboard => self.leaderboard(),
        }
    }

    fn set_table(&mut self, table: InteractionTable) -> Result<()> {
        let table = table.canonical_sort();
        if table.is_empty() {
            return Err(Error::Empty("interaction table"));
        }
        write_json(self.out("data_summary.json"), &summarize(&table))?;
        self.table = Some(table);
        Ok(())
    }

    pub fn ingest(&mut self) -> Result<()> {
        let need = |p: &Option<PathBuf>, key: &str| {
            p.clone().ok_or_else(|| Error::Config(format!("ingest needs `{key}`")))
        };
        let inputs = TrackingInputs::load(
            need(&self.cfg.tracking, "tracking")?,
            need(&self.cfg.events, "events")?,
            need(&self.cfg.engagements, "engagements")?,
            need(&self.cfg.schedule, "schedule")?,
        )?;
        let table = inputs.build(&self.cfg.ingest_config())?;
        write_interactions(self.out("interactions.csv"), &table)?;
        self.set_table(table)
    }

    pub fn synth(&mut self) -> Result<()> {
        let out = synth_generate(&self.cfg.synth_config()?)?;
        write_interactions(self.out("interactions.csv"), &out.table)?;
        write_json(self.out("truth.json"), &out.truth)?;
        let acc = synth_accolades(&out.truth, self.cfg.synth_first_team, self.cfg.synth_second_team);
        acc.save(self.out("accolades.csv"))?;
        self.accolades = Some(acc);
        self.truth = Some(out.truth);
        self.set_table(out.table)
    }

    pub fn table(&mut self) -> Result<&InteractionTable> {
        if self.table.is_none() {
            let path = self.cfg.interactions.clone().ok_or_else(|| {
                Error::Config("no input data: set `interactions`, or run the ingest or synth stage".into())
            })?;
            let t = read_interactions(&path)?;
            self.set_table(t)?;
        }
        Ok(self.table.as_ref().expect("table loaded"))
    }

    /// Fixed penalties from the config, else cross-validation on the full table.
    pub fn lambdas(&mut self) -> Result<Lambdas<f64>> {
        if let Some(l) = self.lambdas {
            return Ok(l);
        }
        let l = match self.cfg.fixed_lambdas()? {
            Some(l) => l,
            None => {
                let grid = self.cfg.grid()?;
                let folds = self.cfg.folds;
                let sel = select_lambdas(self.table()?, &grid, folds, &SolverOptions::default())?;
                write_json(self.out("lambda_selection.json"), &sel)?;
                sel.lambdas
            }
        };
        self.lambdas = Some(l);
        Ok(l)
    }

    pub fn fits(&mut self) -> Result<&(BinaryFit<f64>, MultinomialFit<f64>)> {
        if self.fits.is_none() {
            let l = self.lambdas()?;
            let fits = crate::evaluate::fit_models(self.table()?, l, &SolverOptions::default())?;
            self.fits = Some(fits);
        }
        Ok(self.fits.as_ref().expect("fits present"))
    }

    pub fn fit(&mut self) -> Result<()> {
        let (w, s) = self.fits()?.clone();
        write_json(self.out("fit_win.json"), &FitResult::Binary(w))?;
        write_json(self.out("fit_severity.json"), &FitResult::Multinomial(s))
    }

    pub fn validate(&mut self) -> Result<()> {
        let cfg = self.cfg.validation_config()?;
        let report = run_validation(self.table()?, &cfg)?;
        self.validated = Some(report.lambdas);
        write_validation(&self.dir, &report.summary())
    }

    pub fn sensitivity(&mut self) -> Result<()> {
        let mut cfg = self.cfg.validation_config()?;
        if let Some(l) = self.validated {
            // same training portion as validate, so its penalties carry over
            cfg.lambda = LambdaChoice::Fixed(l);
        }
        let grid = self.cfg.sensitivity_m.clone();
        let report = prior_sensitivity(self.table()?, &cfg, &grid)?;
        write_sensitivity(&self.dir, &report)
    }

    fn bootstrap_config(&mut self, replicates: usize, seed: u64) -> Result<BootstrapConfig<f64>> {
        let mut bc = BootstrapConfig::new(replicates, seed, self.lambdas()?);
        bc.m_win = self.cfg.m_win;
        bc.m_severity = self.cfg.m_severity;
        bc.ratio = self.cfg.split_ratio;
        bc.weights = self.cfg.weights()?;
        Ok(bc)
    }

    pub fn run_bootstrap(&mut self) -> Result<()> {
        let seed = self.cfg.seed()?;
        let bc = self.bootstrap_config(self.cfg.bootstrap_replicates, seed)?;
        let summary = end_to_end_bootstrap(self.table()?, &bc)?;
        write_summary(self.out("bootstrap_summary.json"), &summary)?;
        write_replicates(self.out("bootstrap_replicates.csv"), &summary)?;
        self.bootstrap = Some(summary);
        Ok(())
    }

    pub fn path(&mut self) -> Result<()> {
        let seed = self.cfg.seed()?.wrapping_add(1);
        let mut bc = self.bootstrap_config(self.cfg.path_replicates, seed)?;
        bc.track_metrics = false;
        let summary = weekly_path_bootstrap(self.table()?, &bc)?;
        write_summary(self.out("path_summary.json"), &summary)?;
        write_path(self.out("path.csv"), &path_rows(&summary))
    }

    fn accolades(&mut self) -> Result<AccoladeLabels> {
        if let Some(path) = &self.cfg.accolades {
            return AccoladeLabels::load(path);
        }
        self.accolades
            .clone()
            .ok_or_else(|| Error::Config("external stage needs `accolades` (or the synth stage)".into()))
    }

    pub fn external(&mut self) -> Result<()> {
        let labels = self.accolades()?;
        let w = self.cfg.weights()?;
        let min_n = self.cfg.external_min_n;
        let (win, sev) = self.fits()?.clone();
        let report = run_external_eval(&win, &sev, self.table()?, &labels, &w, min_n)?;
        write_external(&self.dir, &report)
    }

    pub fn leaderboard(&mut self) -> Result<()> {
        let w = self.cfg.weights()?;
        let opts = LeaderboardOptions { min_n: self.cfg.min_n, top: Some(self.cfg.top) };
        let (win, sev) = self.fits()?.clone();
        self.table()?;
        let table = self.table.as_ref().expect("table loaded");
        let rows = leaderboard(&win, &sev, table, &w, opts, self.bootstrap.as_ref());
        write_leaderboard(self.out("leaderboard.csv"), &rows)
    }
}

/// `<out_dir>/<run_name>`, or a timestamped name when none is given.
pub fn create_run_dir(cfg: &PipelineConfig) -> Result<PathBuf> {
    let name = match &cfg.run_name {
        Some(n) => n.clone(),
        None => format!("run-{}", chrono::Local::now().format("%Y%m%d-%H%M%S")),
    };
    let mut dir = cfg.out_dir.join(&name);
    let mut k = 1;
    while cfg.run_name.is_none() && dir.exists() {
        dir = cfg.out_dir.join(format!("{name}-{k}"));
        k += 1;
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

#[derive(Debug, Clone, Serialize)]
struct Seeds {
    synth: u64,
    bootstrap: u64,
    path: u64,
}

/// Runs every configured stage under a fresh run directory. On failure an
/// `error.json` is written next to whatever outputs were already produced.
pub fn run_pipeline(cfg: PipelineConfig) -> std::result::Result<PathBuf, (PathBuf, Error)> {
    let seed = cfg.seed().map_err(|e| (cfg.out_dir.clone(), e))?;
    let dir = create_run_dir(&cfg).map_err(|e| (cfg.out_dir.clone(), e))?;
    let fail = |dir: &Path, stage: Option<Stage>, e: Error| {
        if let Err(w) = write_json(dir.join("error.json"), &ErrorReport::new(stage, &e)) {
            log::error!("could not write error report: {w}");
        }
        (dir.to_path_buf(), e)
    };
    let prelude = (|| -> Result<()> {
        std::fs::write(dir.join("config.toml"), cfg.to_toml()?).map_err(|e| Error::io(dir.join("config.toml"), e))?;
        write_json(dir.join("seeds.json"), &Seeds { synth: seed, bootstrap: seed, path: seed.wrapping_add(1) })
    })();
    prelude.map_err(|e| fail(&dir, None, e))?;
    let stages = cfg.ordered_stages();
    let mut runner = Runner::new(cfg, &dir).map_err(|e| fail(&dir, None, e))?;
    runner.run(&stages).map_err(|(stage, e)| fail(&dir, stage, e))?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let cfg = PipelineConfig { seed: Some(3), stages: vec![Stage::Synth, Stage::Validate], ..Default::default() };
        let text = cfg.to_toml().unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_requires_seed_and_rejects_unknown_keys() {
        let cfg: PipelineConfig = toml::from_str("stages = [\"synth\"]").unwrap();
        assert!(matches!(cfg.seed(), Err(Error::Config(_))));
        assert!(toml::from_str::<PipelineConfig>("seed = 1\nbogus = 2").is_err());
    }

    #[test]
    fn stage_order() {
        let cfg = PipelineConfig { stages: vec![Stage::Leaderboard, Stage::Synth, Stage::Fit, Stage::Synth], ..Default::default() };
        assert_eq!(cfg.ordered_stages(), vec![Stage::Synth, Stage::Fit, Stage::Leaderboard]);
    }

    #[test]
    fn half_fixed_lambdas_rejected() {
        let cfg = PipelineConfig { lambda_win: Some(1.0), ..Default::default() };
        assert!(cfg.fixed_lambdas().is_err());
    }
}
