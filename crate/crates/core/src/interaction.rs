//! Domain model: interactions, outcome classes, severity weights and
//! dataset-level summaries.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Opaque identifier for games, plays and players.
///
/// Ordering is "natural": runs of ASCII digits compare numerically, so play
/// `56` sorts before play `1234`. Ties fall back to byte order, which keeps
/// the order total.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Id(String);

impl Id {
    pub fn new(s: impl Into<String>) -> Self {
        Id(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Id {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Id {
    fn from(s: &str) -> Self {
        Id(s.to_owned())
    }
}

impl From<String> for Id {
    fn from(s: String) -> Self {
        Id(s)
    }
}

fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => {
                if x.is_ascii_digit() && y.is_ascii_digit() {
                    let la = a.iter().take_while(|c| c.is_ascii_digit()).count();
                    let lb = b.iter().take_while(|c| c.is_ascii_digit()).count();
                    let (da, db) = (&a[..la], &b[..lb]);
                    let ta = trim_zeros(da);
                    let tb = trim_zeros(db);
                    let ord = ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    a = &a[la..];
                    b = &b[lb..];
                } else if x.is_ascii_digit() {
                    return Ordering::Less;
                } else if y.is_ascii_digit() {
                    return Ordering::Greater;
                } else {
                    let la = a.iter().take_while(|c| !c.is_ascii_digit()).count();
                    let lb = b.iter().take_while(|c| !c.is_ascii_digit()).count();
                    let ord = a[..la].cmp(&b[..lb]);
                    if ord != Ordering::Equal {
                        return ord;
                    }
                    a = &a[la..];
                    b = &b[lb..];
                }
            }
        }
    }
}

fn trim_zeros(d: &[u8]) -> &[u8] {
    let nz = d.iter().take_while(|&&c| c == b'0').count();
    &d[nz..]
}

impl Ord for Id {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Id {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Outcome of one interaction from the rusher's perspective, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeClass {
    Loss,
    Win,
    Hit,
    Sack,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 4] =
        [OutcomeClass::Loss, OutcomeClass::Win, OutcomeClass::Hit, OutcomeClass::Sack];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeClass::Loss => "loss",
            OutcomeClass::Win => "win",
            OutcomeClass::Hit => "hit",
            OutcomeClass::Sack => "sack",
        }
    }
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OutcomeClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loss" => Ok(OutcomeClass::Loss),
            "win" => Ok(OutcomeClass::Win),
            "hit" => Ok(OutcomeClass::Hit),
            "sack" => Ok(OutcomeClass::Sack),
            other => Err(Error::InvalidArgument(format!("unknown outcome class `{other}`"))),
        }
    }
}

/// Which side of the matchup a player is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Rusher,
    Blocker,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Rusher, Role::Blocker];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Rusher => "rusher",
            Role::Blocker => "blocker",
        }
    }

    pub fn player(self, x: &Interaction) -> &Id {
        match self {
            Role::Rusher => &x.rusher_id,
            Role::Blocker => &x.blocker_id,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per outcome class, indexed by [`OutcomeClass`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMap<V>(pub [V; 4]);

impl<V> ClassMap<V> {
    pub fn from_fn(mut f: impl FnMut(OutcomeClass) -> V) -> Self {
        ClassMap(OutcomeClass::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (OutcomeClass, &V)> {
        OutcomeClass::ALL.into_iter().zip(self.0.iter())
    }

    pub fn values(&self) -> &[V; 4] {
        &self.0
    }
}

impl<V> Index<OutcomeClass> for ClassMap<V> {
    type Output = V;
    fn index(&self, c: OutcomeClass) -> &V {
        &self.0[c.index()]
    }
}

impl<V> IndexMut<OutcomeClass> for ClassMap<V> {
    fn index_mut(&mut self, c: OutcomeClass) -> &mut V {
        &mut self.0[c.index()]
    }
}

impl<V: Serialize> Serialize for ClassMap<V> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(4))?;
        for (c, v) in self.iter() {
            m.serialize_entry(c.as_str(), v)?;
        }
        m.end()
    }
}

impl<'de, V: Deserialize<'de> + Default> Deserialize<'de> for ClassMap<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = std::collections::BTreeMap::<OutcomeClass, V>::deserialize(d)?;
        let mut out = ClassMap::<V>::default();
        for (c, v) in raw {
            out[c] = v;
        }
        Ok(out)
    }
}

/// Class probabilities in severity order.
pub type ClassProbs<T> = ClassMap<T>;

/// Returns the most severe class whose event flag is set, `loss` otherwise.
pub fn label_outcome(has_sack: bool, has_hit: bool, has_win: bool) -> OutcomeClass {
    if has_sack {
        OutcomeClass::Sack
    } else if has_hit {
        OutcomeClass::Hit
    } else if has_win {
        OutcomeClass::Win
    } else {
        OutcomeClass::Loss
    }
}

/// Scalar value of each outcome class on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SeverityWeights<T: Real> {
    weights: ClassMap<T>,
}

impl<T: Real> SeverityWeights<T> {
    /// Validates `loss = 0`, `sack = 1` and monotone weights in between.
    pub fn new(win: T, hit: T) -> Result<Self> {
        let weights = ClassMap([T::zero(), win, hit, T::one()]);
        let w = weights.values();
        if !w.iter().all(|v| v.is_finite()) || w.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidWeights(format!(
                "weights must be nondecreasing from 0 to 1, got win={win}, hit={hit}"
            )));
        }
        Ok(SeverityWeights { weights })
    }

    pub fn weight(&self, c: OutcomeClass) -> T {
        self.weights[c]
    }

    pub fn as_map(&self) -> &ClassMap<T> {
        &self.weights
    }
}

impl<T: Real> Default for SeverityWeights<T> {
    fn default() -> Self {
        default_severity_weights()
    }
}

/// The one-decimal rounding of the EPA-anchored weights: 0, 0.10, 0.20, 1.00.
pub fn default_severity_weights<T: Real>() -> SeverityWeights<T> {
    SeverityWeights::new(T::lit(0.10), T::lit(0.20)).expect("defaults are monotone")
}

/// Rescales an outcome's EPA onto the unit interval, anchored so that
/// no-pressure maps to 0 and a sack maps to 1.
pub fn derive_weight_from_epa<T: Real>(epa_no_pressure: T, epa_outcome: T, epa_sack: T) -> Result<T> {
    let denom = epa_no_pressure - epa_sack;
    if denom == T::zero() {
        return Err(Error::DegenerateEpa(epa_no_pressure.as_f64()));
    }
    Ok((epa_no_pressure - epa_outcome) / denom)
}

pub(crate) mod bool01 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        match s.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(serde::de::Error::custom(format!("expected 0 or 1, got `{other}`"))),
        }
    }

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }
}

/// One blocker-rusher engagement: the atomic modeling row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub game_id: Id,
    pub play_id: Id,
    pub event_game_index: u32,
    pub week: u32,
    pub rusher_id: Id,
    pub blocker_id: Id,
    #[serde(with = "bool01")]
    pub double_team: bool,
    #[serde(with = "bool01")]
    pub win_target: bool,
    pub severity: OutcomeClass,
    /// Copy ordinal of this row's game inside a bootstrap replicate. Zero
    /// outside resampling; part of the game key and the canonical sort key.
    #[serde(skip)]
    pub game_copy: u32,
}

impl Interaction {
    /// Identity of the game block this row belongs to.
    pub fn game_key(&self) -> (&Id, u32) {
        (&self.game_id, self.game_copy)
    }

    pub fn play_key(&self) -> (&Id, u32, &Id) {
        (&self.game_id, self.game_copy, &self.play_id)
    }

    fn sort_key(&self) -> (&Id, u32, &Id, u32) {
        (&self.game_id, self.game_copy, &self.play_id, self.event_game_index)
    }
}

/// Ordered collection of interactions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionTable {
    rows: Vec<Interaction>,
}

impl InteractionTable {
    pub fn new(rows: Vec<Interaction>) -> Self {
        InteractionTable { rows }
    }

    pub fn rows(&self) -> &[Interaction] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Interaction> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interaction> {
        self.rows.iter()
    }

    pub fn is_canonical(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key())
    }

    /// Stable sort on `(game_id, play_id, event_game_index)`.
    pub fn canonical_sort(mut self) -> Self {
        self.rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self
    }

    pub fn rushers(&self) -> BTreeSet<&Id> {
        self.rows.iter().map(|r| &r.rusher_id).collect()
    }

    pub fn blockers(&self) -> BTreeSet<&Id> {
        self.rows.iter().map(|r| &r.blocker_id).collect()
    }

    pub fn games(&self) -> BTreeSet<(&Id, u32)> {
        self.rows.iter().map(Interaction::game_key).collect()
    }

    pub fn plays(&self) -> BTreeSet<(&Id, u32, &Id)> {
        self.rows.iter().map(Interaction::play_key).collect()
    }

    /// Rows whose predicate holds, order preserved.
    pub fn filter(&self, mut keep: impl FnMut(&Interaction) -> bool) -> Self {
        InteractionTable { rows: self.rows.iter().filter(|r| keep(r)).cloned().collect() }
    }
}

impl FromIterator<Interaction> for InteractionTable {
    fn from_iter<I: IntoIterator<Item = Interaction>>(iter: I) -> Self {
        InteractionTable { rows: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a InteractionTable {
    type Item = &'a Interaction;
    type IntoIter = std::slice::Iter<'a, Interaction>;
    fn into_iter(self) -> Self::IntoIter {
        self.rows.iter()
    }
}

/// Free-function form of [`InteractionTable::canonical_sort`].
pub fn canonical_sort(table: InteractionTable) -> InteractionTable {
    table.canonical_sort()
}

/// Empirical class proportions.
pub fn class_frequencies<T: Real>(table: &InteractionTable) -> Result<ClassProbs<T>> {
    if table.is_empty() {
        return Err(Error::Empty("interaction table"));
    }
    let mut counts = [0usize; 4];
    for r in table {
        counts[r.severity.index()] += 1;
    }
    let n = T::from_count(table.len());
    Ok(ClassMap(counts.map(|c| T::from_count(c) / n)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSummary {
    pub interactions: usize,
    pub plays: usize,
    pub games: usize,
    pub rushers: usize,
    pub blockers: usize,
    /// `None` when the table is empty.
    pub double_team_rate: Option<f64>,
}

pub fn summarize(table: &InteractionTable) -> TableSummary {
    let dt = table.iter().filter(|r| r.double_team).count();
    TableSummary {
        interactions: table.len(),
        plays: table.plays().len(),
        games: table.games().len(),
        rushers: table.rushers().len(),
        blockers: table.blockers().len(),
        double_team_rate: (!table.is_empty()).then(|| dt as f64 / table.len() as f64),
    }
}

#[cfg(test)]
pub(crate) fn row(game: &str, play: &str, idx: u32, rusher: &str, blocker: &str) -> Interaction {
    Interaction {
        game_id: game.into(),
        play_id: play.into(),
        event_game_index: idx,
        week: 1,
        rusher_id: rusher.into(),
        blocker_id: blocker.into(),
        double_team: false,
        win_target: false,
        severity: OutcomeClass::Loss,
        game_copy: 0,
    }
}
