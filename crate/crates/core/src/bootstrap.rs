//! Game-level resampling: end-to-end metric and rating uncertainty, and
//! cumulative weekly rating paths. Penalties stay fixed in every replicate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::baselines::{DEFAULT_M_SEVERITY, DEFAULT_M_WIN};
use crate::bt::{BinaryFit, MultinomialFit, SolverOptions};
use crate::error::{Error, Result};
use crate::evaluate::{ordered_split, validate_split, BaselineKind, Lambdas, Task, DEFAULT_SPLIT_RATIO};
use crate::interaction::{default_severity_weights, Id, Interaction, InteractionTable, Role, SeverityWeights};
use crate::io::{write_csv, write_json};
use crate::scalar::Real;
use crate::stats;

pub const DEFAULT_LEVELS: [f64; 4] = [0.025, 0.25, 0.75, 0.975];
pub const MAX_FAILURE_RATE: f64 = 0.05;
pub const PATH_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    Bootstrap,
    /// Every game drawn exactly once; reproduces the point estimates.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    EndToEnd,
    WeeklyPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig<T: Real> {
    pub replicates: usize,
    pub seed: u64,
    pub lambdas: Lambdas<T>,
    pub m_win: T,
    pub m_severity: T,
    pub ratio: f64,
    pub resample: ResampleMode,
    /// Recompute the four holdout improvements per replicate.
    pub track_metrics: bool,
    /// Record player ratings per replicate, from fits on the whole resampled table.
    pub track_ratings: bool,
    pub models: Vec<Task>,
    /// Players whose ratings are recorded; `None` records everyone.
    pub players: Option<BTreeSet<(Role, Id)>>,
    pub weights: SeverityWeights<T>,
    pub levels: Vec<f64>,
    pub solver: SolverOptions<T>,
}

impl<T: Real> BootstrapConfig<T> {
    pub fn new(replicates: usize, seed: u64, lambdas: Lambdas<T>) -> Self {
        BootstrapConfig {
            replicates,
            seed,
            lambdas,
            m_win: T::lit(DEFAULT_M_WIN),
            m_severity: T::lit(DEFAULT_M_SEVERITY),
            ratio: DEFAULT_SPLIT_RATIO,
            resample: ResampleMode::Bootstrap,
            track_metrics: true,
            track_ratings: true,
            models: Task::BOTH.to_vec(),
            players: None,
            weights: default_severity_weights(),
            levels: DEFAULT_LEVELS.to_vec(),
            solver: SolverOptions::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("bootstrap needs at least one replicate".into()));
        }
        let l = [self.lambdas.win, self.lambdas.severity];
        if l.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bootstrap penalties must be positive, got win={} severity={}",
                self.lambdas.win, self.lambdas.severity
            )));
        }
        if self.levels.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::InvalidArgument("percentile levels must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// What one replicate value measures.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuantityKey {
    Improvement { task: Task, baseline: BaselineKind },
    Rating { model: Task, role: Role, player: Id },
    PathRating { model: Task, role: Role, player: Id, week: u32 },
}

impl fmt::Display for QuantityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantityKey::Improvement { task, baseline } => write!(f, "improvement:{task}:{}", baseline.as_str()),
            QuantityKey::Rating { model, role, player } => write!(f, "rating:{model}:{role}:{player}"),
            QuantityKey::PathRating { model, role, player, week } => write!(f, "path:{model}:{role}:{player}:{week}"),
        }
    }
}

impl Serialize for QuantityKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Game units of a table: `(game_id, game_copy)` in sorted order.
pub fn game_units(table: &InteractionTable) -> Vec<(Id, u32)> {
    table.games().into_iter().map(|(g, c)| (g.clone(), c)).collect()
}

/// `n` indices drawn uniformly with replacement from `0..n`.
pub fn resample_games<R: Rng>(n_games: usize, rng: &mut R) -> Vec<usize> {
    (0..n_games).map(|_| rng.random_range(0..n_games)).collect()
}

/// Concatenates the drawn games' rows, marking repeat draws of a game with
/// fresh copy ordinals, and restores canonical order.
pub fn resample_table(table: &InteractionTable, draws: &[usize]) -> InteractionTable {
    let units = game_units(table);
    let mut by_unit: Vec<Vec<&Interaction>> = vec![Vec::new(); units.len()];
    for r in table {
        let key = (r.game_id.clone(), r.game_copy);
        let u = units.binary_search(&key).expect("unit of own table");
        by_unit[u].push(r);
    }
    let stride = units.iter().map(|(_, c)| c + 1).max().unwrap_or(1);
    let mut seen = vec![0u32; units.len()];
    let mut rows = Vec::with_capacity(table.len());
    for &u in draws {
        let ordinal = seen[u];
        seen[u] += 1;
        rows.extend(by_unit[u].iter().map(|&r| Interaction { game_copy: r.game_copy + ordinal * stride, ..r.clone() }));
    }
    InteractionTable::new(rows).canonical_sort()
}

fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_table(table: &InteractionTable, mode: ResampleMode, seed: u64, stream: u64) -> InteractionTable {
    let n = game_units(table).len();
    let draws = match mode {
        ResampleMode::Identity => (0..n).collect(),
        ResampleMode::Bootstrap => resample_games(n, &mut replicate_rng(seed, stream)),
    };
    resample_table(table, &draws)
}

fn tracked(cfg_players: &Option<BTreeSet<(Role, Id)>>, role: Role, id: &Id) -> bool {
    cfg_players.as_ref().is_none_or(|s| s.contains(&(role, id.clone())))
}

fn rating_values<T: Real>(
    table: &InteractionTable,
    cfg: &BootstrapConfig<T>,
    mut key: impl FnMut(Task, Role, Id) -> QuantityKey,
) -> Result<Vec<(QuantityKey, f64)>> {
    let mut out = Vec::new();
    for &model in &cfg.models {
        let per_role: Vec<(Role, BTreeMap<Id, T>)> = match model {
            Task::Win => {
                let fit = BinaryFit::fit(table, cfg.lambdas.win, &cfg.solver)?;
                Role::BOTH.iter().map(|&r| (r, fit.ratings(r))).collect()
            }
            Task::Severity => {
                let fit = MultinomialFit::fit(table, cfg.lambdas.severity, &cfg.solver)?;
                Role::BOTH.iter().map(|&r| (r, fit.ratings(r, &cfg.weights))).collect()
            }
        };
        for (role, ratings) in per_role {
            for (id, v) in ratings {
                if tracked(&cfg.players, role, &id) {
                    out.push((key(model, role, id), v.as_f64()));
                }
            }
        }
    }
    Ok(out)
}

fn end_to_end_values<T: Real>(table: &InteractionTable, cfg: &BootstrapConfig<T>) -> Result<Vec<(QuantityKey, f64)>> {
    let mut out = Vec::new();
    if cfg.track_metrics {
        let split = ordered_split(table, cfg.ratio)?;
        let (rows, _, _) = validate_split(&split, cfg.lambdas, cfg.m_win, cfg.m_severity, &cfg.solver)?;
        for r in rows {
            out.push((QuantityKey::Improvement { task: r.task, baseline: r.baseline }, r.improvement.as_f64()));
        }
    }
    if cfg.track_ratings {
        out.extend(rating_values(table, cfg, |model, role, player| QuantityKey::Rating { model, role, player })?);
    }
    Ok(out)
}

/// The statistics each replicate records, evaluated on the table as given.
pub fn point_estimates<T: Real>(table: &InteractionTable, cfg: &BootstrapConfig<T>) -> Result<BTreeMap<QuantityKey, f64>> {
    Ok(end_to_end_values(&table.clone().canonical_sort(), cfg)?.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantitySummary {
    pub id: QuantityKey,
    /// One slot per replicate; `None` where the quantity was undefined or the replicate failed.
    pub values: Vec<Option<f64>>,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// Aligned with the summary's `levels`.
    pub percentiles: Vec<f64>,
}

impl QuantitySummary {
    pub fn from_values(id: QuantityKey, values: Vec<Option<f64>>, levels: &[f64]) -> Result<Self> {
        let mut present: Vec<f64> = values.iter().flatten().copied().collect();
        present.sort_by(|a, b| a.partial_cmp(b).expect("finite replicate value"));
        let mean = stats::mean(&present).ok_or(Error::Empty("replicate values"))?;
        let sd = stats::sd(&present).ok_or(Error::Empty("replicate values"))?;
        let percentiles = levels.iter().map(|&q| stats::percentile_sorted(&present, q)).collect::<Result<_>>()?;
        Ok(QuantitySummary { id, n: present.len(), values, mean, sd, percentiles })
    }

    pub fn percentile(&self, levels: &[f64], q: f64) -> Option<f64> {
        levels.iter().position(|&l| l == q).map(|i| self.percentiles[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedReplicate {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub mode: BootstrapMode,
    pub replicates: usize,
    pub seed: u64,
    pub resample: ResampleMode,
    pub lambda_win: f64,
    pub lambda_severity: f64,
    pub levels: Vec<f64>,
    /// Replicate slots attempted (replicates times checkpoints for weekly paths).
    pub attempted: usize,
    pub failed: Vec<FailedReplicate>,
    pub quantities: Vec<QuantitySummary>,
}

impl BootstrapSummary {
    pub fn get(&self, id: &QuantityKey) -> Option<&QuantitySummary> {
        self.quantities.iter().find(|q| &q.id == id)
    }
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    Ok(())
}

type ReplicateOutcome = (usize, Result<Vec<(QuantityKey, f64)>>);

fn collect_quantities(
    outcomes: Vec<ReplicateOutcome>,
    replicates: usize,
    failed: &mut Vec<FailedReplicate>,
    into: &mut BTreeMap<QuantityKey, Vec<Option<f64>>>,
) {
    for (rep, res) in outcomes {
        match res {
            Ok(values) => {
                for (k, v) in values {
                    into.entry(k).or_insert_with(|| vec![None; replicates])[rep] = Some(v);
                }
            }
            Err(e) => {
                log::warn!("bootstrap replicate {rep} failed: {e}");
                failed.push(FailedReplicate { replicate: rep, error: e.to_string() });
            }
        }
    }
}

fn summarize_all(
    quantities: BTreeMap<QuantityKey, Vec<Option<f64>>>,
    levels: &[f64],
) -> Result<Vec<QuantitySummary>> {
    quantities.into_iter().map(|(k, v)| QuantitySummary::from_values(k, v, levels)).collect()
}

/// Resamples whole games `B` times; each replicate re-splits for the metric
/// improvements and refits the full resampled table for ratings.
pub fn end_to_end_bootstrap<T: Real>(table: &InteractionTable, cfg: &BootstrapConfig<T>) -> Result<BootstrapSummary> {
    cfg.validate()?;
    if table.is_empty() {
        return Err(Error::Empty("interaction table"));
    }
    let table = table.clone().canonical_sort();
    let outcomes: Vec<ReplicateOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let sample = draw_table(&table, cfg.resample, cfg.seed, rep as u64);
            (rep, end_to_end_values(&sample, cfg))
        })
        .collect();
    let mut failed = Vec::new();
    let mut q = BTreeMap::new();
    collect_quantities(outcomes, cfg.replicates, &mut failed, &mut q);
    check_failures(failed.len(), cfg.replicates)?;
    Ok(BootstrapSummary {
        mode: BootstrapMode::EndToEnd,
        replicates: cfg.replicates,
        seed: cfg.seed,
        resample: cfg.resample,
        lambda_win: cfg.lambdas.win.as_f64(),
        lambda_severity: cfg.lambdas.severity.as_f64(),
        levels: cfg.levels.clone(),
        attempted: cfg.replicates,
        failed,
        quantities: summarize_all(q, &cfg.levels)?,
    })
}

/// Cumulative checkpoints `1..=W`: each restricts to weeks up to `w`, then
/// resamples that game set `B` times.
pub fn weekly_path_bootstrap<T: Real>(table: &InteractionTable, cfg: &BootstrapConfig<T>) -> Result<BootstrapSummary> {
    cfg.validate()?;
    let last = table.iter().map(|r| r.week).max().ok_or(Error::Empty("interaction table"))?;
    let table = table.clone().canonical_sort();
    let mut failed = Vec::new();
    let mut q = BTreeMap::new();
    let mut attempted = 0;
    for week in 1..=last {
        let upto = table.filter(|r| r.week <= week);
        if upto.is_empty() {
            log::warn!("checkpoint week {week} has no games; skipped");
            continue;
        }
        attempted += cfg.replicates;
        let outcomes: Vec<ReplicateOutcome> = (0..cfg.replicates)
            .into_par_iter()
            .map(|rep| {
                let stream = (u64::from(week) << 32) | rep as u64;
                let sample = draw_table(&upto, cfg.resample, cfg.seed, stream);
                let vals = rating_values(&sample, cfg, |model, role, player| QuantityKey::PathRating {
                    model,
                    role,
                    player,
                    week,
                });
                (rep, vals)
            })
            .collect();
        let before = failed.len();
        collect_quantities(outcomes, cfg.replicates, &mut failed, &mut q);
        for f in &mut failed[before..] {
            f.error = format!("week {week}: {}", f.error);
        }
    }
    check_failures(failed.len(), attempted)?;
    Ok(BootstrapSummary {
        mode: BootstrapMode::WeeklyPath,
        replicates: cfg.replicates,
        seed: cfg.seed,
        resample: cfg.resample,
        lambda_win: cfg.lambdas.win.as_f64(),
        lambda_severity: cfg.lambdas.severity.as_f64(),
        levels: cfg.levels.clone(),
        attempted,
        failed,
        quantities: summarize_all(q, &cfg.levels)?,
    })
}

pub const REPLICATE_HEADER: &[&str] = &["replicate", "quantity_id", "value"];

pub fn write_replicates(path: impl AsRef<Path>, summary: &BootstrapSummary) -> Result<()> {
    let rows = summary.quantities.iter().flat_map(|q| {
        q.values.iter().enumerate().filter_map(move |(rep, v)| v.map(|v| (rep, q.id.to_string(), v)))
    });
    write_csv(path, REPLICATE_HEADER, rows)
}

pub fn write_summary(path: impl AsRef<Path>, summary: &BootstrapSummary) -> Result<()> {
    write_json(path, summary)
}
