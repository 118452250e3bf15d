//! Leaderboards and weekly-path tables built from fits and bootstrap summaries.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{BootstrapSummary, QuantityKey, PATH_Z};
use crate::bt::{BinaryFit, MultinomialFit};
use crate::error::Result;
use crate::evaluate::Task;
use crate::external::{model_ratings, role_counts};
use crate::interaction::{Id, InteractionTable, Role, SeverityWeights};
use crate::io::write_csv;

pub const DEFAULT_MIN_INTERACTIONS: usize = 200;
pub const DEFAULT_TOP: usize = 10;
pub const BAND_LEVELS: (f64, f64) = (0.25, 0.75);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub model: Task,
    pub role: Role,
    pub player_id: Id,
    pub rating: f64,
    pub n: usize,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeaderboardOptions {
    pub min_n: usize,
    /// `None` keeps every qualifying player.
    pub top: Option<usize>,
}

impl Default for LeaderboardOptions {
    fn default() -> Self {
        LeaderboardOptions { min_n: DEFAULT_MIN_INTERACTIONS, top: Some(DEFAULT_TOP) }
    }
}

/// Rows for one (model, role): players with at least `min_n` interactions,
/// rating descending, ties by id.
pub fn rank_players(
    model: Task,
    role: Role,
    ratings: &BTreeMap<Id, f64>,
    counts: &BTreeMap<Id, usize>,
    opts: LeaderboardOptions,
    bands: Option<&BTreeMap<Id, (f64, f64)>>,
) -> Vec<LeaderboardRow> {
    let mut rows: Vec<LeaderboardRow> = ratings
        .iter()
        .filter_map(|(id, &rating)| {
            let n = counts.get(id).copied().unwrap_or(0);
            (n >= opts.min_n).then(|| {
                let band = bands.and_then(|b| b.get(id)).copied();
                LeaderboardRow {
                    model,
                    role,
                    player_id: id.clone(),
                    rating,
                    n,
                    lo: band.map(|b| b.0),
                    hi: band.map(|b| b.1),
                }
            })
        })
        .collect();
    rows.sort_by(|a, b| b.rating.total_cmp(&a.rating).then_with(|| a.player_id.cmp(&b.player_id)));
    if let Some(k) = opts.top {
        rows.truncate(k);
    }
    rows
}

/// Interquartile rating bands per player from an end-to-end bootstrap summary.
pub fn rating_bands(summary: &BootstrapSummary, model: Task, role: Role) -> BTreeMap<Id, (f64, f64)> {
    let (lo, hi) = BAND_LEVELS;
    summary
        .quantities
        .iter()
        .filter_map(|q| match &q.id {
            QuantityKey::Rating { model: m, role: r, player } if *m == model && *r == role => {
                let present: Vec<f64> = q.values.iter().flatten().copied().collect();
                let a = crate::stats::percentile(&present, lo).ok()?;
                let b = crate::stats::percentile(&present, hi).ok()?;
                Some((player.clone(), (a, b)))
            }
            _ => None,
        })
        .collect()
}

/// Both models and both roles, in that order.
pub fn leaderboard(
    win: &BinaryFit<f64>,
    severity: &MultinomialFit<f64>,
    table: &InteractionTable,
    w: &SeverityWeights<f64>,
    opts: LeaderboardOptions,
    bands: Option<&BootstrapSummary>,
) -> Vec<LeaderboardRow> {
    let mut out = Vec::new();
    for model in Task::BOTH {
        for role in Role::BOTH {
            let ratings = model_ratings(win, severity, model, role, w);
            let counts = role_counts(table, role);
            let b = bands.map(|s| rating_bands(s, model, role));
            out.extend(rank_players(model, role, &ratings, &counts, opts, b.as_ref()));
        }
    }
    out
}

pub const LEADERBOARD_HEADER: &[&str] = &["model", "role", "player_id", "rating", "n", "lo", "hi"];

pub fn write_leaderboard(path: impl AsRef<Path>, rows: &[LeaderboardRow]) -> Result<()> {
    write_csv(path, LEADERBOARD_HEADER, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub model: Task,
    pub role: Role,
    pub player_id: Id,
    pub week: u32,
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Per-checkpoint mean with a `mean +/- 1.96 sd` band.
pub fn path_rows(summary: &BootstrapSummary) -> Vec<PathRow> {
    let mut rows: Vec<PathRow> = summary
        .quantities
        .iter()
        .filter_map(|q| match &q.id {
            QuantityKey::PathRating { model, role, player, week } => Some(PathRow {
                model: *model,
                role: *role,
                player_id: player.clone(),
                week: *week,
                mean: q.mean,
                sd: q.sd,
                lo: q.mean - PATH_Z * q.sd,
                hi: q.mean + PATH_Z * q.sd,
            }),
            _ => None,
        })
        .collect();
    rows.sort_by(|a, b| (a.model, a.role, &a.player_id, a.week).cmp(&(b.model, b.role, &b.player_id, b.week)));
    rows
}

pub const PATH_HEADER: &[&str] = &["model", "role", "player_id", "week", "mean", "sd", "lo", "hi"];

pub fn write_path(path: impl AsRef<Path>, rows: &[PathRow]) -> Result<()> {
    write_csv(path, PATH_HEADER, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[(&str, f64)]) -> BTreeMap<Id, f64> {
        v.iter().map(|&(k, r)| (Id::from(k), r)).collect()
    }

    #[test]
    fn ordering_and_threshold() {
        let ratings = ids(&[("b", 0.5), ("a", 0.5), ("c", 0.9), ("d", -1.0)]);
        let counts: BTreeMap<Id, usize> = [("a", 300), ("b", 300), ("c", 100), ("d", 250)].iter().map(|&(k, n)| (Id::from(k), n)).collect();
        let opts = LeaderboardOptions { min_n: 200, top: None };
        let rows = rank_players(Task::Win, Role::Rusher, &ratings, &counts, opts, None);
        let order: Vec<&str> = rows.iter().map(|r| r.player_id.as_str()).collect();
        assert_eq!(order, ["a", "b", "d"]);
        let none = rank_players(Task::Win, Role::Rusher, &ratings, &counts, LeaderboardOptions { min_n: 1000, top: None }, None);
        assert!(none.is_empty());
        let top1 = rank_players(Task::Win, Role::Rusher, &ratings, &counts, LeaderboardOptions { min_n: 0, top: Some(1) }, None);
        assert_eq!(top1[0].player_id.as_str(), "c");
    }
}
