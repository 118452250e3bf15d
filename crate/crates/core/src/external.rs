//! Rank validation of player ratings against accolade labels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bt::{BinaryFit, MultinomialFit};
use crate::error::{Error, Result};
use crate::evaluate::Task;
use crate::interaction::{Id, InteractionTable, Role, SeverityWeights};
use crate::io::{read_csv, write_csv, write_json};
use crate::scalar::Real;

/// Above this many players the AUC switches from pair enumeration to a
/// sort-based count; both produce the same integer tally.
pub const BRUTE_FORCE_MAX: usize = 10_000;
pub const TIE_BREAK: &str = "score desc, player_id asc";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeamLevel {
    First,
    Second,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AccoladeRecord {
    player_id: Id,
    team_level: String,
}

pub const ACCOLADE_HEADER: &[&str] = &["player_id", "team_level"];

/// Per-player accolade; players not listed carry none.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccoladeLabels {
    pub labels: BTreeMap<Id, TeamLevel>,
}

impl AccoladeLabels {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let recs: Vec<AccoladeRecord> = read_csv(path, ACCOLADE_HEADER)?;
        let mut labels = BTreeMap::new();
        for (i, r) in recs.into_iter().enumerate() {
            let level = match r.team_level.as_str() {
                "first" => TeamLevel::First,
                "second" => TeamLevel::Second,
                "none" => continue,
                other => {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        message: format!("row {}: team_level must be first or second, got `{other}`", i + 1),
                    })
                }
            };
            // a player listed twice keeps the higher honor
            let e = labels.entry(r.player_id).or_insert(level);
            *e = (*e).min(level);
        }
        Ok(AccoladeLabels { labels })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows = self.labels.iter().map(|(id, l)| {
            (id.as_str(), match l {
                TeamLevel::First => "first",
                TeamLevel::Second => "second",
            })
        });
        write_csv(path, ACCOLADE_HEADER, rows)
    }

    pub fn is_positive(&self, id: &Id, slice: AccoladeSlice) -> bool {
        match (self.labels.get(id), slice) {
            (Some(TeamLevel::First), _) => true,
            (Some(TeamLevel::Second), AccoladeSlice::FirstOrSecond) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccoladeSlice {
    First,
    FirstOrSecond,
}

impl AccoladeSlice {
    pub const BOTH: [AccoladeSlice; 2] = [AccoladeSlice::First, AccoladeSlice::FirstOrSecond];

    pub fn as_str(self) -> &'static str {
        match self {
            AccoladeSlice::First => "first",
            AccoladeSlice::FirstOrSecond => "first_second",
        }
    }
}

impl fmt::Display for AccoladeSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_scores<T: Real>(scores: &[T], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { what: "scores vs labels", left: scores.len(), right: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("ranking score"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Ok((pos, labels.len() - pos))
}

/// Twice the Mann–Whitney pair tally: 2 per strictly ordered pair, 1 per tie.
fn doubled_pair_count_brute<T: Real>(scores: &[T], labels: &[bool]) -> u64 {
    let mut total = 0u64;
    for (i, &sp) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sn) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            total += if sp > sn {
                2
            } else if sp == sn {
                1
            } else {
                0
            };
        }
    }
    total
}

fn doubled_pair_count_sorted<T: Real>(scores: &[T], labels: &[bool]) -> u64 {
    let mut neg: Vec<T> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    neg.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut total = 0u64;
    for (&s, _) in scores.iter().zip(labels).filter(|(_, &l)| l) {
        let below = neg.partition_point(|&v| v < s) as u64;
        let not_above = neg.partition_point(|&v| v <= s) as u64;
        total += 2 * below + (not_above - below);
    }
    total
}

/// Mann–Whitney AUC with ties counted one half.
pub fn rank_auc<T: Real>(scores: &[T], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_scores(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels(if pos == 0 { "no positive labels" } else { "no negative labels" }));
    }
    let doubled = if scores.len() <= BRUTE_FORCE_MAX {
        doubled_pair_count_brute(scores, labels)
    } else {
        doubled_pair_count_sorted(scores, labels)
    };
    Ok(doubled as f64 / (2 * pos as u64 * neg as u64) as f64)
}

/// Sort-based AUC, exposed so callers can cross-check the two tallies.
pub fn rank_auc_sorted<T: Real>(scores: &[T], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_scores(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels(if pos == 0 { "no positive labels" } else { "no negative labels" }));
    }
    Ok(doubled_pair_count_sorted(scores, labels) as f64 / (2 * pos as u64 * neg as u64) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enrichment {
    pub k: usize,
    pub hits: usize,
    pub n: usize,
    pub positives: usize,
    pub value: f64,
}

/// Precision among the top `k` (ties broken by id) divided by the base rate.
pub fn enrichment_at_k<T: Real>(scores: &[T], labels: &[bool], ids: &[Id], k: usize) -> Result<Enrichment> {
    let (pos, _) = check_scores(scores, labels)?;
    if ids.len() != scores.len() {
        return Err(Error::LengthMismatch { what: "ids vs scores", left: ids.len(), right: scores.len() });
    }
    let n = scores.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("K must lie in 1..={n}, got {k}")));
    }
    if pos == 0 {
        return Err(Error::DegenerateLabels("no positive labels"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite").then_with(|| ids[a].cmp(&ids[b])));
    let hits = order[..k].iter().filter(|&&i| labels[i]).count();
    let value = (hits as f64 / k as f64) / (pos as f64 / n as f64);
    Ok(Enrichment { k, hits, n, positives: pos, value })
}

/// Task-matched raw scores where larger is better for the player's role.
pub fn raw_baseline_scores(table: &InteractionTable, task: Task, role: Role, w: &SeverityWeights<f64>) -> BTreeMap<Id, f64> {
    let mut acc: BTreeMap<&Id, (usize, f64)> = BTreeMap::new();
    for r in table {
        let v = match task {
            Task::Win => f64::from(u8::from(r.win_target)),
            Task::Severity => w.weight(r.severity),
        };
        let v = match role {
            Role::Rusher => v,
            Role::Blocker => 1.0 - v,
        };
        let e = acc.entry(role.player(r)).or_default();
        e.0 += 1;
        e.1 += v;
    }
    acc.into_iter().map(|(id, (n, s))| (id.clone(), s / n as f64)).collect()
}

/// Interaction counts per player in one role.
pub fn role_counts(table: &InteractionTable, role: Role) -> BTreeMap<Id, usize> {
    let mut out: BTreeMap<Id, usize> = BTreeMap::new();
    for r in table {
        *out.entry(role.player(r).clone()).or_default() += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEvalRow {
    pub task: Task,
    pub role: Role,
    pub slice: AccoladeSlice,
    #[serde(rename = "K")]
    pub k: usize,
    pub n_players: usize,
    pub auc: f64,
    pub base_auc: f64,
    pub delta_auc: f64,
    pub enrich: f64,
    pub base_enrich: f64,
    pub delta_enrich: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalReport {
    pub tie_break: String,
    pub min_interactions: usize,
    /// Labeled players with no rating in the role they were looked up for.
    pub unmatched: Vec<Id>,
    pub rows: Vec<RankEvalRow>,
}

/// Model ratings for one task and role.
pub fn model_ratings(
    win: &BinaryFit<f64>,
    severity: &MultinomialFit<f64>,
    task: Task,
    role: Role,
    w: &SeverityWeights<f64>,
) -> BTreeMap<Id, f64> {
    match task {
        Task::Win => win.ratings(role),
        Task::Severity => severity.ratings(role, w),
    }
}

fn eval_slice(
    ratings: &BTreeMap<Id, f64>,
    base: &BTreeMap<Id, f64>,
    members: &[Id],
    labels: &AccoladeLabels,
    task: Task,
    role: Role,
    slice: AccoladeSlice,
) -> Result<RankEvalRow> {
    let ids: Vec<Id> = members.iter().filter(|id| ratings.contains_key(*id)).cloned().collect();
    let y: Vec<bool> = ids.iter().map(|id| labels.is_positive(id, slice)).collect();
    let s: Vec<f64> = ids.iter().map(|id| ratings[id]).collect();
    let b: Vec<f64> = ids.iter().map(|id| base[id]).collect();
    let k = y.iter().filter(|&&v| v).count();
    let auc = rank_auc(&s, &y)?;
    let base_auc = rank_auc(&b, &y)?;
    let enrich = enrichment_at_k(&s, &y, &ids, k)?.value;
    let base_enrich = enrichment_at_k(&b, &y, &ids, k)?.value;
    Ok(RankEvalRow {
        task,
        role,
        slice,
        k,
        n_players: ids.len(),
        auc,
        base_auc,
        delta_auc: auc - base_auc,
        enrich,
        base_enrich,
        delta_enrich: enrich - base_enrich,
    })
}

/// Eight rows: task x role x accolade slice. A player belongs to a role's
/// slice when they have at least `min_interactions` (and at least one)
/// interactions in that role.
pub fn run_external_eval(
    win: &BinaryFit<f64>,
    severity: &MultinomialFit<f64>,
    table: &InteractionTable,
    labels: &AccoladeLabels,
    w: &SeverityWeights<f64>,
    min_interactions: usize,
) -> Result<ExternalReport> {
    let mut members: BTreeMap<Role, Vec<Id>> = BTreeMap::new();
    for role in Role::BOTH {
        let ids = role_counts(table, role)
            .into_iter()
            .filter(|&(_, n)| n >= min_interactions.max(1))
            .map(|(id, _)| id)
            .collect();
        members.insert(role, ids);
    }
    let rated: BTreeSet<&Id> = members.values().flatten().collect();
    let unmatched: Vec<Id> = labels.labels.keys().filter(|id| !rated.contains(id)).cloned().collect();
    for id in &unmatched {
        log::warn!("accolade player {id} has no rating in any evaluated slice; excluded");
    }
    let cells: Vec<(Task, Role, AccoladeSlice)> = Task::BOTH
        .into_iter()
        .flat_map(|t| Role::BOTH.into_iter().flat_map(move |r| AccoladeSlice::BOTH.into_iter().map(move |s| (t, r, s))))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(task, role, slice)| {
            let ratings = model_ratings(win, severity, task, role, w);
            let base = raw_baseline_scores(table, task, role, w);
            eval_slice(&ratings, &base, &members[&role], labels, task, role, slice)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExternalReport { tie_break: TIE_BREAK.into(), min_interactions, unmatched, rows })
}

pub const EXTERNAL_HEADER: &[&str] =
    &["task", "role", "K", "auc", "base_auc", "delta_auc", "enrich", "base_enrich", "delta_enrich"];

/// One CSV per accolade slice, plus the full report as JSON.
pub fn write_external(dir: impl AsRef<Path>, report: &ExternalReport) -> Result<()> {
    let dir = dir.as_ref();
    for slice in AccoladeSlice::BOTH {
        let rows = report.rows.iter().filter(|r| r.slice == slice).map(|r| {
            [
                r.task.as_str().to_string(),
                r.role.as_str().to_string(),
                r.k.to_string(),
                format!("{:.3}", r.auc),
                format!("{:.3}", r.base_auc),
                format!("{:.3}", r.delta_auc),
                format!("{:.2}", r.enrich),
                format!("{:.2}", r.base_enrich),
                format!("{:.2}", r.delta_enrich),
            ]
        });
        write_csv(dir.join(format!("external_{slice}.csv")), EXTERNAL_HEADER, rows)?;
    }
    write_json(dir.join("external.json"), report)
}
