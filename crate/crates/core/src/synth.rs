//! Synthetic interaction tables drawn from known Bradley–Terry parameters.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{Id, Interaction, InteractionTable, OutcomeClass, Role, SeverityWeights};
use crate::scalar::{logistic, softmax_into};

/// Generator settings. Class-indexed arrays run over `win, hit, sack`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_rushers: usize,
    pub n_blockers: usize,
    pub n_games: usize,
    pub plays_per_game: usize,
    pub interactions_per_play: usize,
    pub weeks: u32,
    pub sigma_r: f64,
    pub sigma_b: f64,
    pub alpha: f64,
    pub delta: f64,
    pub double_team_rate: f64,
    pub class_alpha: [f64; 3],
    pub class_delta: [f64; 3],
    /// Class effect of a player = loading times that player's binary effect.
    pub class_loading: [f64; 3],
    /// Derive `win_target` from the drawn class instead of its own model.
    pub coupled: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_rushers: 620,
            n_blockers: 348,
            n_games: 266,
            plays_per_game: 115,
            interactions_per_play: 5,
            weeks: 18,
            sigma_r: 0.5,
            sigma_b: 0.5,
            alpha: -1.0,
            delta: -0.4,
            double_team_rate: 0.427,
            class_alpha: [-1.06, -4.2, -4.75],
            class_delta: [-0.4, -0.4, -0.4],
            class_loading: [1.0, 1.2, 1.5],
            coupled: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Roughly `n` interactions with the default player pools.
    pub fn with_interactions(n: usize, seed: u64) -> Self {
        let base = SynthConfig { seed, ..Default::default() };
        let per_game = base.plays_per_game * base.interactions_per_play;
        SynthConfig { n_games: n.div_ceil(per_game).max(1), ..base }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_rushers", self.n_rushers),
            ("n_blockers", self.n_blockers),
            ("n_games", self.n_games),
            ("plays_per_game", self.plays_per_game),
            ("interactions_per_play", self.interactions_per_play),
            ("weeks", self.weeks as usize),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        if !(self.sigma_r >= 0.0 && self.sigma_b >= 0.0 && self.sigma_r.is_finite() && self.sigma_b.is_finite()) {
            return Err(Error::InvalidArgument("effect scales must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.double_team_rate) {
            return Err(Error::InvalidArgument(format!("double_team_rate {} outside [0, 1]", self.double_team_rate)));
        }
        let finite = [self.alpha, self.delta].iter().chain(&self.class_alpha).chain(&self.class_delta).chain(&self.class_loading).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("generator parameters must be finite".into()));
        }
        Ok(())
    }
}

/// The parameters a table was drawn from, in the fitted models' gauge
/// (player effects centered within each role).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub alpha: f64,
    pub delta: f64,
    pub rusher_effects: BTreeMap<Id, f64>,
    pub blocker_effects: BTreeMap<Id, f64>,
    pub class_alpha: [f64; 3],
    pub class_delta: [f64; 3],
    pub class_loading: [f64; 3],
}

impl SynthTruth {
    pub fn effects(&self, role: Role) -> &BTreeMap<Id, f64> {
        match role {
            Role::Rusher => &self.rusher_effects,
            Role::Blocker => &self.blocker_effects,
        }
    }

    /// True severity-weighted score, on the same scale as the fitted
    /// multinomial ratings.
    pub fn severity_ratings(&self, role: Role, w: &SeverityWeights<f64>) -> BTreeMap<Id, f64> {
        let k: f64 = [OutcomeClass::Win, OutcomeClass::Hit, OutcomeClass::Sack]
            .iter()
            .zip(&self.class_loading)
            .map(|(&c, &l)| w.weight(c) * l)
            .sum();
        self.effects(role).iter().map(|(id, &v)| (id.clone(), k * v)).collect()
    }

    /// Class probabilities for a matchup, loss first.
    pub fn class_probs(&self, rusher: &Id, blocker: &Id, double_team: bool) -> [f64; 4] {
        let diff = self.rusher_effects[rusher] - self.blocker_effects[blocker];
        let d = if double_team { 1.0 } else { 0.0 };
        let mut logits = [0.0; 4];
        for c in 0..3 {
            logits[c + 1] = self.class_alpha[c] + self.class_loading[c] * diff + self.class_delta[c] * d;
        }
        let mut out = [0.0; 4];
        softmax_into(&logits, &mut out);
        out
    }

    pub fn win_prob(&self, rusher: &Id, blocker: &Id, double_team: bool) -> f64 {
        let d = if double_team { self.delta } else { 0.0 };
        logistic(self.alpha + self.rusher_effects[rusher] - self.blocker_effects[blocker] + d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub table: InteractionTable,
    pub truth: SynthTruth,
}

fn draw_effects(rng: &mut ChaCha8Rng, prefix: &str, n: usize, sigma: f64) -> BTreeMap<Id, f64> {
    let width = n.to_string().len();
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let raw: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    raw.into_iter().enumerate().map(|(i, v)| (Id::new(format!("{prefix}{:0width$}", i + 1)), v - mean)).collect()
}

fn draw_class(rng: &mut ChaCha8Rng, probs: &[f64; 4]) -> OutcomeClass {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return OutcomeClass::from_index(i).expect("four classes");
        }
    }
    OutcomeClass::Sack
}

/// Draws a canonical-ordered table. Matchups pair uniformly random rushers
/// and blockers; games are spread evenly over the weeks.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let truth = SynthTruth {
        alpha: cfg.alpha,
        delta: cfg.delta,
        rusher_effects: draw_effects(&mut rng, "R", cfg.n_rushers, cfg.sigma_r),
        blocker_effects: draw_effects(&mut rng, "B", cfg.n_blockers, cfg.sigma_b),
        class_alpha: cfg.class_alpha,
        class_delta: cfg.class_delta,
        class_loading: cfg.class_loading,
    };
    let rushers: Vec<&Id> = truth.rusher_effects.keys().collect();
    let blockers: Vec<&Id> = truth.blocker_effects.keys().collect();
    let gw = cfg.n_games.to_string().len();
    let mut rows = Vec::with_capacity(cfg.n_games * cfg.plays_per_game * cfg.interactions_per_play);
    for g in 0..cfg.n_games {
        let game_id = Id::new(format!("G{:0gw$}", g + 1));
        let week = (g * cfg.weeks as usize / cfg.n_games) as u32 + 1;
        let mut idx = 0u32;
        for p in 0..cfg.plays_per_game {
            let play_id = Id::new((p + 1).to_string());
            for _ in 0..cfg.interactions_per_play {
                let rusher_id = rushers[rng.random_range(0..rushers.len())].clone();
                let blocker_id = blockers[rng.random_range(0..blockers.len())].clone();
                let double_team = rng.random_bool(cfg.double_team_rate);
                let severity = draw_class(&mut rng, &truth.class_probs(&rusher_id, &blocker_id, double_team));
                let win_target = if cfg.coupled {
                    severity != OutcomeClass::Loss
                } else {
                    rng.random_bool(truth.win_prob(&rusher_id, &blocker_id, double_team))
                };
                rows.push(Interaction {
                    game_id: game_id.clone(),
                    play_id: play_id.clone(),
                    event_game_index: idx,
                    week,
                    rusher_id,
                    blocker_id,
                    double_team,
                    win_target,
                    severity,
                    game_copy: 0,
                });
                idx += 1;
            }
        }
    }
    Ok(SynthOutput { table: InteractionTable::new(rows).canonical_sort(), truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig { n_rushers: 20, n_blockers: 15, n_games: 10, plays_per_game: 20, interactions_per_play: 3, seed, ..Default::default() }
    }

    #[test]
    fn deterministic_and_canonical() {
        let a = synth_generate(&small(3)).unwrap();
        let b = synth_generate(&small(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.table.is_canonical());
        assert_eq!(a.table.len(), 600);
        assert_ne!(synth_generate(&small(4)).unwrap().table, a.table);
        let s: f64 = a.truth.rusher_effects.values().sum();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn weeks_cover_schedule() {
        let out = synth_generate(&SynthConfig { n_games: 36, ..small(1) }).unwrap();
        let weeks: std::collections::BTreeSet<u32> = out.table.iter().map(|r| r.week).collect();
        assert_eq!(weeks, (1..=18).collect());
    }

    #[test]
    fn zero_scale_win_rate_matches_intercept() {
        let cfg = SynthConfig { sigma_r: 0.0, sigma_b: 0.0, double_team_rate: 0.0, n_games: 100, plays_per_game: 100, ..small(9) };
        let out = synth_generate(&cfg).unwrap();
        let n = out.table.len() as f64;
        let rate = out.table.iter().filter(|r| r.win_target).count() as f64 / n;
        let p = logistic(cfg.alpha);
        assert!((rate - p).abs() < 3.0 * (p * (1.0 - p) / n).sqrt());
    }

    #[test]
    fn double_teams_suppress_wins() {
        let cfg = SynthConfig { n_games: 100, plays_per_game: 100, interactions_per_play: 5, double_team_rate: 0.5, ..small(5) };
        let out = synth_generate(&cfg).unwrap();
        assert!(out.table.len() >= 50_000);
        let rate = |d: bool| {
            let rows: Vec<_> = out.table.iter().filter(|r| r.double_team == d).collect();
            rows.iter().filter(|r| r.win_target).count() as f64 / rows.len() as f64
        };
        assert!(rate(true) < rate(false));
    }

    #[test]
    fn coupled_mode_ties_targets() {
        let out = synth_generate(&SynthConfig { coupled: true, ..small(2) }).unwrap();
        assert!(out.table.iter().all(|r| r.win_target == (r.severity != OutcomeClass::Loss)));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(synth_generate(&SynthConfig { n_games: 0, ..small(0) }).is_err());
        assert!(synth_generate(&SynthConfig { sigma_r: -1.0, ..small(0) }).is_err());
    }
}
