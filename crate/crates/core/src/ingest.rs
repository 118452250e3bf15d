//! Tracking-frame ingestion: dropback filtering, quarterback distances, the
//! 2.5 second win rule and double-team detection.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{bool01, label_outcome, Id, Interaction, InteractionTable};
use crate::io::read_csv;

pub const TRACKING_HEADER: &[&str] = &["game_id", "play_id", "frame_index", "player_id", "x", "y", "is_qb"];
pub const EVENTS_HEADER: &[&str] = &["game_id", "play_id", "snap_frame", "has_forward_pass", "has_sack", "qb_hit"];
pub const ENGAGEMENTS_HEADER: &[&str] = &["game_id", "play_id", "rusher_id", "blocker_id", "start_frame", "end_frame"];
pub const SCHEDULE_HEADER: &[&str] = &["game_id", "week"];

/// Frames per second of the tracking feed.
pub const FRAME_RATE_HZ: u32 = 10;

/// One player's position at one 10 Hz frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub game_id: Id,
    pub play_id: Id,
    pub frame_index: u32,
    pub player_id: Id,
    pub x: f64,
    pub y: f64,
    #[serde(with = "bool01")]
    pub is_qb: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayEvents {
    pub game_id: Id,
    pub play_id: Id,
    pub snap_frame: u32,
    #[serde(with = "bool01")]
    pub has_forward_pass: bool,
    #[serde(with = "bool01")]
    pub has_sack: bool,
    #[serde(with = "bool01")]
    pub qb_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engagement {
    pub game_id: Id,
    pub play_id: Id,
    pub rusher_id: Id,
    pub blocker_id: Id,
    pub start_frame: u32,
    pub end_frame: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub game_id: Id,
    pub week: u32,
}

/// Parameters of the distance-based rusher win rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinRule {
    /// Frames after the snap still eligible, inclusive of `snap + horizon_frames`.
    pub horizon_frames: u32,
    /// The rusher must be closer than the blocker by more than this many yards.
    pub tie_tolerance: f64,
}

impl Default for WinRule {
    fn default() -> Self {
        WinRule { horizon_frames: 25, tie_tolerance: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestConfig {
    pub win_rule: WinRule,
    /// Shared frames needed for two engagements to count as overlapping.
    pub min_overlap_frames: u32,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { win_rule: WinRule::default(), min_overlap_frames: 1 }
    }
}

pub fn is_dropback(events: &PlayEvents) -> bool {
    events.has_forward_pass || events.has_sack
}

/// Euclidean distance from `player_id` to the quarterback, given all frames at one instant.
pub fn qb_distance(instant: &[Frame], player_id: &Id) -> Result<f64> {
    let first = instant.first().ok_or(Error::Empty("frame set"))?;
    let mut qbs = instant.iter().filter(|f| f.is_qb);
    let qb = qbs.next().ok_or_else(|| Error::MissingQb {
        game_id: first.game_id.to_string(),
        play_id: first.play_id.to_string(),
        frame: first.frame_index,
    })?;
    if qbs.next().is_some() {
        return Err(Error::DuplicateQb {
            game_id: first.game_id.to_string(),
            play_id: first.play_id.to_string(),
            frame: first.frame_index,
        });
    }
    let p = instant.iter().find(|f| &f.player_id == player_id && !f.is_qb).ok_or_else(|| {
        Error::MissingPlayer {
            game_id: first.game_id.to_string(),
            play_id: first.play_id.to_string(),
            player_id: player_id.to_string(),
            frame: first.frame_index,
        }
    })?;
    Ok(distance((p.x, p.y), (qb.x, qb.y)))
}

fn distance(p: (f64, f64), qb: (f64, f64)) -> f64 {
    (p.0 - qb.0).hypot(p.1 - qb.1)
}

/// Distances to the quarterback for consecutive frames starting at `start_frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSeries {
    pub start_frame: u32,
    pub values: Vec<f64>,
}

impl DistanceSeries {
    pub fn new(start_frame: u32, values: Vec<f64>) -> Self {
        DistanceSeries { start_frame, values }
    }

    pub fn get(&self, frame: u32) -> Option<f64> {
        frame.checked_sub(self.start_frame).and_then(|o| self.values.get(o as usize).copied())
    }
}

/// Whether the rusher gets strictly closer to the quarterback than the blocker
/// at some frame of `window ∩ [snap, snap + horizon]`.
pub fn rusher_win_25(
    rusher: &DistanceSeries,
    blocker: &DistanceSeries,
    snap_frame: u32,
    window: (u32, u32),
    rule: &WinRule,
) -> Result<bool> {
    let (lo, hi) = eligible_frames(snap_frame, window, rule)?;
    for t in lo..=hi {
        let dr = rusher.get(t).ok_or(Error::SeriesGap(t))?;
        let db = blocker.get(t).ok_or(Error::SeriesGap(t))?;
        if dr < db - rule.tie_tolerance {
            return Ok(true);
        }
    }
    Ok(false)
}

fn eligible_frames(snap: u32, (start, end): (u32, u32), rule: &WinRule) -> Result<(u32, u32)> {
    let horizon_end = snap.saturating_add(rule.horizon_frames);
    let lo = start.max(snap);
    let hi = end.min(horizon_end);
    if lo > hi {
        return Err(Error::EmptyWindow { start, end, snap, horizon_end });
    }
    Ok((lo, hi))
}

/// True when two engagements on the same rusher with different blockers
/// share at least `min_overlap_frames` frames.
pub fn detect_double_team(engagements: &[&Engagement], min_overlap_frames: u32) -> bool {
    let min_overlap = min_overlap_frames.max(1);
    engagements.iter().enumerate().any(|(i, a)| {
        engagements[i + 1..].iter().any(|b| {
            a.blocker_id != b.blocker_id && {
                let lo = a.start_frame.max(b.start_frame);
                let hi = a.end_frame.min(b.end_frame);
                hi >= lo && hi - lo + 1 >= min_overlap
            }
        })
    })
}

struct PlayTracks<'a> {
    qb: BTreeMap<u32, Vec<(f64, f64)>>,
    players: HashMap<&'a Id, BTreeMap<u32, (f64, f64)>>,
}

impl<'a> PlayTracks<'a> {
    fn new(frames: &[&'a Frame]) -> Self {
        let mut qb: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
        let mut players: HashMap<&Id, BTreeMap<u32, (f64, f64)>> = HashMap::new();
        for f in frames {
            if f.is_qb {
                qb.entry(f.frame_index).or_default().push((f.x, f.y));
            } else {
                players.entry(&f.player_id).or_default().insert(f.frame_index, (f.x, f.y));
            }
        }
        PlayTracks { qb, players }
    }

    fn series(&self, ev: &PlayEvents, player: &Id, lo: u32, hi: u32) -> Result<DistanceSeries> {
        let track = self.players.get(player).ok_or_else(|| Error::MissingPlayer {
            game_id: ev.game_id.to_string(),
            play_id: ev.play_id.to_string(),
            player_id: player.to_string(),
            frame: lo,
        })?;
        let mut values = Vec::with_capacity((hi - lo + 1) as usize);
        for t in lo..=hi {
            let qb = match self.qb.get(&t).map(Vec::as_slice) {
                Some([q]) => *q,
                Some([]) | None => {
                    return Err(Error::MissingQb {
                        game_id: ev.game_id.to_string(),
                        play_id: ev.play_id.to_string(),
                        frame: t,
                    })
                }
                Some(_) => {
                    return Err(Error::DuplicateQb {
                        game_id: ev.game_id.to_string(),
                        play_id: ev.play_id.to_string(),
                        frame: t,
                    })
                }
            };
            let p = track.get(&t).ok_or_else(|| Error::MissingPlayer {
                game_id: ev.game_id.to_string(),
                play_id: ev.play_id.to_string(),
                player_id: player.to_string(),
                frame: t,
            })?;
            values.push(distance(*p, qb));
        }
        Ok(DistanceSeries::new(lo, values))
    }
}

fn dangling(e: &Engagement, reason: impl Into<String>) -> Error {
    Error::DanglingEngagement {
        game_id: e.game_id.to_string(),
        play_id: e.play_id.to_string(),
        rusher_id: e.rusher_id.to_string(),
        blocker_id: e.blocker_id.to_string(),
        reason: reason.into(),
    }
}

/// Builds one interaction per engagement on a dropback play.
///
/// Sack and hit flags are play-level and apply to every engaged rusher on
/// the play. An engagement that never overlaps the post-snap horizon cannot
/// produce a win and is kept with `win_target = false`.
pub fn build_interactions(
    frames: &[Frame],
    events: &[PlayEvents],
    engagements: &[Engagement],
    schedule: &[ScheduleEntry],
    cfg: &IngestConfig,
) -> Result<InteractionTable> {
    let weeks: HashMap<&Id, u32> = schedule.iter().map(|s| (&s.game_id, s.week)).collect();
    let mut plays: HashMap<(&Id, &Id), &PlayEvents> = HashMap::new();
    for ev in events {
        if plays.insert((&ev.game_id, &ev.play_id), ev).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate events row for game {} play {}",
                ev.game_id, ev.play_id
            )));
        }
    }

    let mut by_game: BTreeMap<&Id, BTreeMap<&Id, Vec<&Engagement>>> = BTreeMap::new();
    for e in engagements {
        let ev = plays.get(&(&e.game_id, &e.play_id)).ok_or_else(|| dangling(e, "play has no events row"))?;
        if e.start_frame > e.end_frame {
            return Err(dangling(e, "start_frame after end_frame"));
        }
        if is_dropback(ev) {
            by_game.entry(&e.game_id).or_default().entry(&e.play_id).or_default().push(e);
        }
    }

    let mut frames_by_play: HashMap<(&Id, &Id), Vec<&Frame>> = HashMap::new();
    for f in frames {
        frames_by_play.entry((&f.game_id, &f.play_id)).or_default().push(f);
    }

    for game in by_game.keys() {
        if !weeks.contains_key(game) {
            return Err(Error::UnknownWeek { game_id: game.to_string() });
        }
    }

    let games: Vec<_> = by_game.into_iter().collect();
    let per_game: Vec<Result<Vec<Interaction>>> = games
        .par_iter()
        .map(|(game, game_plays)| {
            let week = weeks[game];
            let mut out = Vec::new();
            let mut next_index = 0u32;
            for (play, engs) in game_plays {
                let ev = plays[&(*game, *play)];
                let empty = Vec::new();
                let play_frames = frames_by_play.get(&(*game, *play)).unwrap_or(&empty);
                if !play_frames.iter().any(|f| f.is_qb) {
                    return Err(Error::MissingQb {
                        game_id: game.to_string(),
                        play_id: play.to_string(),
                        frame: ev.snap_frame,
                    });
                }
                let tracks = PlayTracks::new(play_frames);
                let mut ordered = engs.clone();
                ordered.sort_by(|a, b| {
                    (a.start_frame, &a.rusher_id, &a.blocker_id).cmp(&(b.start_frame, &b.rusher_id, &b.blocker_id))
                });
                for e in &ordered {
                    for who in [&e.rusher_id, &e.blocker_id] {
                        if !tracks.players.contains_key(who) {
                            return Err(dangling(e, format!("player {who} has no tracking frames")));
                        }
                    }
                    let win = match eligible_frames(ev.snap_frame, (e.start_frame, e.end_frame), &cfg.win_rule) {
                        Ok((lo, hi)) => {
                            let r = tracks.series(ev, &e.rusher_id, lo, hi)?;
                            let b = tracks.series(ev, &e.blocker_id, lo, hi)?;
                            rusher_win_25(&r, &b, ev.snap_frame, (e.start_frame, e.end_frame), &cfg.win_rule)?
                        }
                        Err(Error::EmptyWindow { .. }) => false,
                        Err(other) => return Err(other),
                    };
                    let same_rusher: Vec<&Engagement> =
                        engs.iter().copied().filter(|o| o.rusher_id == e.rusher_id).collect();
                    out.push(Interaction {
                        game_id: (*game).clone(),
                        play_id: (*play).clone(),
                        event_game_index: next_index,
                        week,
                        rusher_id: e.rusher_id.clone(),
                        blocker_id: e.blocker_id.clone(),
                        double_team: detect_double_team(&same_rusher, cfg.min_overlap_frames),
                        win_target: win,
                        severity: label_outcome(ev.has_sack, ev.qb_hit, win),
                        game_copy: 0,
                    });
                    next_index += 1;
                }
            }
            Ok(out)
        })
        .collect();

    let mut rows = Vec::new();
    for g in per_game {
        rows.extend(g?);
    }
    Ok(InteractionTable::new(rows).canonical_sort())
}

/// The four ingestion inputs as loaded from CSV.
#[derive(Debug, Clone, Default)]
pub struct TrackingInputs {
    pub frames: Vec<Frame>,
    pub events: Vec<PlayEvents>,
    pub engagements: Vec<Engagement>,
    pub schedule: Vec<ScheduleEntry>,
}

impl TrackingInputs {
    pub fn load(
        tracking: impl AsRef<Path>,
        events: impl AsRef<Path>,
        engagements: impl AsRef<Path>,
        schedule: impl AsRef<Path>,
    ) -> Result<Self> {
        Ok(TrackingInputs {
            frames: read_csv(tracking, TRACKING_HEADER)?,
            events: read_csv(events, EVENTS_HEADER)?,
            engagements: read_csv(engagements, ENGAGEMENTS_HEADER)?,
            schedule: read_csv(schedule, SCHEDULE_HEADER)?,
        })
    }

    pub fn build(&self, cfg: &IngestConfig) -> Result<InteractionTable> {
        build_interactions(&self.frames, &self.events, &self.engagements, &self.schedule, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::OutcomeClass;
    use proptest::prelude::*;

    fn frame(play: &str, t: u32, who: &str, x: f64, y: f64, qb: bool) -> Frame {
        Frame { game_id: "g1".into(), play_id: play.into(), frame_index: t, player_id: who.into(), x, y, is_qb: qb }
    }

    fn events(play: &str, pass: bool, sack: bool, hit: bool) -> PlayEvents {
        PlayEvents {
            game_id: "g1".into(),
            play_id: play.into(),
            snap_frame: 0,
            has_forward_pass: pass,
            has_sack: sack,
            qb_hit: hit,
        }
    }

    fn eng(play: &str, r: &str, b: &str, s: u32, e: u32) -> Engagement {
        Engagement {
            game_id: "g1".into(),
            play_id: play.into(),
            rusher_id: r.into(),
            blocker_id: b.into(),
            start_frame: s,
            end_frame: e,
        }
    }

    fn schedule() -> Vec<ScheduleEntry> {
        vec![ScheduleEntry { game_id: "g1".into(), week: 3 }]
    }

    #[test]
    fn dropback_filter() {
        assert!(is_dropback(&events("1", true, false, false)));
        assert!(!is_dropback(&events("1", false, false, false)));
        assert!(is_dropback(&events("1", false, true, false)));
    }

    #[test]
    fn distance_examples() {
        let qb = frame("1", 0, "qb", 10.0, 20.0, true);
        let inst = vec![qb.clone(), frame("1", 0, "a", 10.0, 20.0, false), frame("1", 0, "b", 13.0, 24.0, false),
            frame("1", 0, "c", 11.0, 21.0, false)];
        assert_eq!(qb_distance(&inst, &"a".into()).unwrap(), 0.0);
        assert_eq!(qb_distance(&inst, &"b".into()).unwrap(), 5.0);
        assert!((qb_distance(&inst, &"c".into()).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(qb_distance(&inst, &"zz".into()), Err(Error::MissingPlayer { .. })));
        assert!(matches!(qb_distance(&inst[1..], &"a".into()), Err(Error::MissingQb { .. })));
    }

    proptest! {
        #[test]
        fn distance_is_sign_symmetric(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let d = |dx: f64, dy: f64| {
                qb_distance(&[frame("1", 0, "qb", 0.0, 0.0, true), frame("1", 0, "p", dx, dy, false)], &"p".into()).unwrap()
            };
            let base = d(a, b);
            prop_assert_eq!(base, d(-a, b));
            prop_assert_eq!(base, d(a, -b));
            prop_assert!((base * base - (a * a + b * b)).abs() <= 1e-9 * (1.0 + a * a + b * b));
        }

        #[test]
        fn wider_horizon_never_revokes_a_win(r in prop::collection::vec(0.0f64..5.0, 40), b in prop::collection::vec(0.0f64..5.0, 40), start in 0u32..30) {
            let rs = DistanceSeries::new(0, r);
            let bs = DistanceSeries::new(0, b);
            let short = rusher_win_25(&rs, &bs, 0, (start, 39), &WinRule::default());
            let long = rusher_win_25(&rs, &bs, 0, (start, 39), &WinRule { horizon_frames: 30, tie_tolerance: 0.0 });
            if let Ok(true) = short {
                prop_assert_eq!(long.unwrap(), true);
            }
        }
    }

    #[test]
    fn win_rule_examples() {
        let rule = WinRule::default();
        let closer = DistanceSeries::new(0, vec![1.0; 40]);
        let farther = DistanceSeries::new(0, vec![2.0; 40]);
        assert!(rusher_win_25(&closer, &farther, 0, (0, 39), &rule).unwrap());

        // rusher only closer at frame 26 after the snap
        let mut late = vec![3.0; 40];
        late[26] = 1.0;
        let late = DistanceSeries::new(0, late);
        assert!(!rusher_win_25(&late, &farther, 0, (0, 39), &rule).unwrap());
        // ... but frame 25 is inclusive
        let mut edge = vec![3.0; 40];
        edge[25] = 1.0;
        assert!(rusher_win_25(&DistanceSeries::new(0, edge), &farther, 0, (0, 39), &rule).unwrap());

        // ties are not wins
        assert!(!rusher_win_25(&farther, &farther, 0, (0, 39), &rule).unwrap());

        assert!(matches!(
            rusher_win_25(&closer, &farther, 10, (0, 5), &rule),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(matches!(
            rusher_win_25(&DistanceSeries::new(5, vec![1.0]), &farther, 0, (0, 10), &rule),
            Err(Error::SeriesGap(0))
        ));
    }

    #[test]
    fn double_team_examples() {
        let a = eng("1", "r", "b1", 5, 20);
        assert!(!detect_double_team(&[&a], 1));
        let b = eng("1", "r", "b2", 10, 30);
        assert!(detect_double_team(&[&a, &b], 1));
        let a2 = eng("1", "r", "b1", 5, 9);
        assert!(!detect_double_team(&[&a2, &b], 1));
        // same blocker twice is not help
        let a3 = eng("1", "r", "b1", 10, 30);
        assert!(!detect_double_team(&[&a, &a3], 1));
        // endpoints touching share one frame
        let c = eng("1", "r", "b2", 20, 30);
        assert!(detect_double_team(&[&a, &c], 1));
        assert!(!detect_double_team(&[&a, &c], 2));
    }

    /// Rusher starts 5 yards out and closes one yard per frame; blocker holds at 2
    /// yards until frame 10 then also retreats. The rusher passes inside at frame 12.
    fn crossing_play() -> Vec<Frame> {
        let mut f = Vec::new();
        for t in 0..=30u32 {
            f.push(frame("1", t, "qb", 0.0, 0.0, true));
            let rd = (15.0 - t as f64).max(0.5);
            f.push(frame("1", t, "r1", rd, 0.0, false));
            f.push(frame("1", t, "b1", 3.5, 0.0, false));
            f.push(frame("1", t, "r2", 10.0, 0.0, false));
            f.push(frame("1", t, "b2", 2.0, 0.0, false));
        }
        f
    }

    #[test]
    fn build_from_hand_built_play() {
        let frames = crossing_play();
        let evs = vec![events("1", true, false, false), events("2", false, false, false)];
        let engs = vec![eng("1", "r1", "b1", 0, 30), eng("1", "r2", "b2", 0, 30), eng("2", "r1", "b1", 0, 10)];
        let t = build_interactions(&frames, &evs, &engs, &schedule(), &IngestConfig::default()).unwrap();
        // play 2 is not a dropback
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|r| r.play_id.as_str() == "1" && r.week == 3));
        let r1 = t.iter().find(|r| r.rusher_id.as_str() == "r1").unwrap();
        assert!(r1.win_target);
        assert_eq!(r1.severity, OutcomeClass::Win);
        let r2 = t.iter().find(|r| r.rusher_id.as_str() == "r2").unwrap();
        assert!(!r2.win_target);
        assert_eq!(r2.severity, OutcomeClass::Loss);
        let idx: Vec<u32> = t.iter().map(|r| r.event_game_index).collect();
        assert_eq!(idx, [0, 1]);
    }

    #[test]
    fn crossing_frame_is_twelve() {
        let frames = crossing_play();
        // window closing at frame 11 excludes the crossing, frame 12 includes it
        let build = |end| {
            build_interactions(
                &frames,
                &[events("1", true, false, false)],
                &[eng("1", "r1", "b1", 0, end)],
                &schedule(),
                &IngestConfig::default(),
            )
            .unwrap()
            .rows()[0]
                .win_target
        };
        assert!(!build(11));
        assert!(build(12));
    }

    #[test]
    fn sack_and_hit_are_play_level() {
        let frames = crossing_play();
        let engs = vec![eng("1", "r1", "b1", 0, 30), eng("1", "r2", "b2", 0, 30)];
        let t = build_interactions(&frames, &[events("1", false, true, true)], &engs, &schedule(), &IngestConfig::default())
            .unwrap();
        assert!(t.iter().all(|r| r.severity == OutcomeClass::Sack));
        let t = build_interactions(&frames, &[events("1", true, false, true)], &engs, &schedule(), &IngestConfig::default())
            .unwrap();
        assert!(t.iter().all(|r| r.severity == OutcomeClass::Hit));
        // win_target stays independent of severity
        assert!(t.iter().any(|r| !r.win_target));
    }

    #[test]
    fn double_team_consistent_per_rusher() {
        let frames = crossing_play();
        let engs = vec![eng("1", "r1", "b1", 0, 20), eng("1", "r1", "b2", 15, 30), eng("1", "r2", "b2", 0, 5)];
        let t = build_interactions(&frames, &[events("1", true, false, false)], &engs, &schedule(), &IngestConfig::default())
            .unwrap();
        assert_eq!(t.len(), 3);
        for r in t.iter() {
            assert_eq!(r.double_team, r.rusher_id.as_str() == "r1");
        }
    }

    #[test]
    fn ingest_errors_name_the_offender() {
        let frames = crossing_play();
        let ev = [events("1", true, false, false)];
        let err = build_interactions(&frames, &ev, &[eng("1", "r1", "b1", 0, 30)], &[], &IngestConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::UnknownWeek { ref game_id } if game_id == "g1"));

        let err = build_interactions(&frames, &ev, &[eng("9", "r1", "b1", 0, 30)], &schedule(), &IngestConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::DanglingEngagement { ref play_id, .. } if play_id == "9"));

        let err = build_interactions(&frames, &ev, &[eng("1", "ghost", "b1", 0, 30)], &schedule(), &IngestConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::DanglingEngagement { ref rusher_id, .. } if rusher_id == "ghost"));

        let no_qb: Vec<Frame> = frames.iter().filter(|f| !f.is_qb).cloned().collect();
        let err = build_interactions(&no_qb, &ev, &[eng("1", "r1", "b1", 0, 30)], &schedule(), &IngestConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::MissingQb { .. }));
    }

    #[test]
    fn late_engagement_is_not_a_win() {
        let frames = crossing_play();
        let t = build_interactions(
            &frames,
            &[events("1", true, false, false)],
            &[eng("1", "r1", "b1", 26, 30)],
            &schedule(),
            &IngestConfig::default(),
        )
        .unwrap();
        assert!(!t.rows()[0].win_target);
    }
}
