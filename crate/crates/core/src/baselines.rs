//! Non-latent comparison predictors: global rates and smoothed matchup rates.
//!
//! None of these read the double-team flag.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{ClassMap, ClassProbs, Id, InteractionTable, OutcomeClass, Role};
use crate::scalar::{logistic, logit, Real};

pub const DEFAULT_M_WIN: f64 = 25.0;
pub const DEFAULT_M_SEVERITY: f64 = 50.0;
pub const SENSITIVITY_GRID: [f64; 4] = [10.0, 25.0, 50.0, 100.0];

/// `(n * raw + m * global) / (n + m)`, with `raw_total = n * raw`.
pub fn smooth<T: Real>(n: usize, raw_total: T, m: T, global: T) -> T {
    (raw_total + m * global) / (T::from_count(n) + m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SmoothedRate<T: Real> {
    pub n: usize,
    pub raw: T,
    pub smoothed: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WinBaseline<T: Real> {
    pub p_global: T,
    pub m: T,
    pub rushers: BTreeMap<Id, SmoothedRate<T>>,
    pub blockers: BTreeMap<Id, SmoothedRate<T>>,
}

fn check_m<T: Real>(m: T) -> Result<()> {
    if !(m >= T::zero()) || !m.is_finite() {
        return Err(Error::InvalidArgument(format!("prior strength must be finite and >= 0, got {m}")));
    }
    Ok(())
}

pub fn fit_win_baseline<T: Real>(train: &InteractionTable, m: T) -> Result<WinBaseline<T>> {
    check_m(m)?;
    if train.is_empty() {
        return Err(Error::Empty("training table"));
    }
    let wins = train.iter().filter(|r| r.win_target).count();
    let p_global = T::from_count(wins) / T::from_count(train.len());
    let mut tallies: [BTreeMap<&Id, (usize, usize)>; 2] = Default::default();
    for r in train {
        for (slot, role) in Role::BOTH.into_iter().enumerate() {
            let e = tallies[slot].entry(role.player(r)).or_default();
            e.0 += 1;
            e.1 += usize::from(r.win_target);
        }
    }
    let [rt, bt] = tallies.map(|t| {
        t.into_iter()
            .map(|(id, (n, w))| {
                let total = T::from_count(w);
                let rate = SmoothedRate { n, raw: total / T::from_count(n), smoothed: smooth(n, total, m, p_global) };
                (id.clone(), rate)
            })
            .collect()
    });
    Ok(WinBaseline { p_global, m, rushers: rt, blockers: bt })
}

impl<T: Real> WinBaseline<T> {
    pub fn component(&self, role: Role, id: &Id) -> T {
        let map = match role {
            Role::Rusher => &self.rushers,
            Role::Blocker => &self.blockers,
        };
        map.get(id).map_or(self.p_global, |s| s.smoothed)
    }
}

/// Inverse logit of the mean of the two components' logits.
///
/// Equal components are returned unchanged, which keeps degenerate global
/// rates of 0 or 1 exact; opposite certainties (0 and 1) average to 0.5.
pub fn predict_win_matchup<T: Real>(bl: &WinBaseline<T>, rusher: &Id, blocker: &Id) -> T {
    let a = bl.component(Role::Rusher, rusher);
    let b = bl.component(Role::Blocker, blocker);
    if a == b {
        return a;
    }
    let mean = (logit(a) + logit(b)) * T::lit(0.5);
    if mean.is_nan() {
        return T::lit(0.5);
    }
    logistic(mean)
}

pub fn predict_win_global<T: Real>(bl: &WinBaseline<T>) -> T {
    bl.p_global
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SmoothedProfile<T: Real> {
    pub n: usize,
    pub profile: ClassProbs<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SeverityBaseline<T: Real> {
    pub global: ClassProbs<T>,
    pub m: T,
    pub rushers: BTreeMap<Id, SmoothedProfile<T>>,
    pub blockers: BTreeMap<Id, SmoothedProfile<T>>,
}

pub fn fit_severity_baseline<T: Real>(train: &InteractionTable, m: T) -> Result<SeverityBaseline<T>> {
    check_m(m)?;
    let global = crate::interaction::class_frequencies::<T>(train)?;
    let mut tallies: [BTreeMap<&Id, [usize; 4]>; 2] = Default::default();
    for r in train {
        for (slot, role) in Role::BOTH.into_iter().enumerate() {
            tallies[slot].entry(role.player(r)).or_default()[r.severity.index()] += 1;
        }
    }
    let [rt, bt] = tallies.map(|t| {
        t.into_iter()
            .map(|(id, counts)| {
                let n: usize = counts.iter().sum();
                let profile = ClassMap::from_fn(|c| smooth(n, T::from_count(counts[c.index()]), m, global[c]));
                (id.clone(), SmoothedProfile { n, profile })
            })
            .collect()
    });
    Ok(SeverityBaseline { global, m, rushers: rt, blockers: bt })
}

impl<T: Real> SeverityBaseline<T> {
    pub fn profile(&self, role: Role, id: &Id) -> &ClassProbs<T> {
        let map = match role {
            Role::Rusher => &self.rushers,
            Role::Blocker => &self.blockers,
        };
        map.get(id).map_or(&self.global, |p| &p.profile)
    }
}

fn log_ratios<T: Real>(profile: &ClassProbs<T>, who: &Id) -> Result<ClassMap<T>> {
    let loss = profile[OutcomeClass::Loss];
    if !(loss > T::zero()) {
        return Err(Error::ZeroLossComponent { player: who.to_string() });
    }
    Ok(ClassMap::from_fn(|c| if c == OutcomeClass::Loss { T::zero() } else { (profile[c] / loss).ln() }))
}

/// Averages the two sides' log-odds against `loss` and maps back through a softmax.
pub fn predict_severity_matchup<T: Real>(
    bl: &SeverityBaseline<T>,
    rusher: &Id,
    blocker: &Id,
) -> Result<ClassProbs<T>> {
    let er = log_ratios(bl.profile(Role::Rusher, rusher), rusher)?;
    let eb = log_ratios(bl.profile(Role::Blocker, blocker), blocker)?;
    let logits: Vec<T> = OutcomeClass::ALL.iter().map(|&c| (er[c] + eb[c]) * T::lit(0.5)).collect();
    let mut out = [T::zero(); 4];
    crate::scalar::softmax_into(&logits, &mut out);
    Ok(ClassMap(out))
}

pub fn predict_severity_global<T: Real>(bl: &SeverityBaseline<T>) -> ClassProbs<T> {
    bl.global
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::row;
    use proptest::prelude::*;

    fn table(cells: &[(&str, &str, bool, OutcomeClass)]) -> InteractionTable {
        cells.iter()
            .enumerate()
            .map(|(i, &(r, b, w, c))| {
                let mut x = row("g", "p", i as u32, r, b);
                x.win_target = w;
                x.severity = c;
                x
            })
            .collect()
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(smooth(25, 12.5, 25.0, 0.25), 0.375);
        assert_eq!(smooth(0, 0.0, 25.0, 0.25), 0.25);
        assert_eq!(smooth(4, 1.0, 0.0, 0.9), 0.25);
    }

    #[test]
    fn global_win_examples() {
        use OutcomeClass::Loss;
        let t = table(&[("a", "x", true, Loss), ("a", "x", true, Loss), ("b", "x", true, Loss), ("b", "y", false, Loss)]);
        let bl = fit_win_baseline(&t, 25.0).unwrap();
        assert_eq!(predict_win_global(&bl), 0.75);
        let losses = table(&[("a", "x", false, Loss)]);
        let bl = fit_win_baseline(&losses, 25.0).unwrap();
        assert_eq!(predict_win_global(&bl), 0.0);
        assert_eq!(predict_win_matchup(&bl, &"a".into(), &"x".into()), 0.0);
        assert!(fit_win_baseline::<f64>(&InteractionTable::default(), 25.0).is_err());
    }

    #[test]
    fn matchup_logit_average() {
        let mut bl = WinBaseline::<f64> { p_global: 0.3, m: 25.0, rushers: BTreeMap::new(), blockers: BTreeMap::new() };
        assert_eq!(predict_win_matchup(&bl, &"a".into(), &"b".into()), 0.3);
        bl.rushers.insert("a".into(), SmoothedRate { n: 1, raw: 1.0, smoothed: 0.8 });
        bl.blockers.insert("b".into(), SmoothedRate { n: 1, raw: 0.0, smoothed: 0.2 });
        assert!((predict_win_matchup(&bl, &"a".into(), &"b".into()) - 0.5).abs() < 1e-12);
        bl.rushers.insert("c".into(), SmoothedRate { n: 1, raw: 1.0, smoothed: 0.5 });
        bl.blockers.insert("d".into(), SmoothedRate { n: 1, raw: 0.0, smoothed: 0.5 });
        assert_eq!(predict_win_matchup(&bl, &"c".into(), &"d".into()), 0.5);
    }

    #[test]
    fn severity_profiles() {
        use OutcomeClass::*;
        let mut rows = Vec::new();
        for i in 0..50 {
            rows.push(("a", "x", false, if i < 25 { Loss } else { Sack }));
        }
        for _ in 0..50 {
            rows.push(("b", "y", false, Loss));
        }
        let t = table(&rows);
        let bl = fit_severity_baseline::<f64>(&t, 50.0).unwrap();
        // n = m gives the midpoint between player and global
        let a = bl.profile(Role::Rusher, &"a".into());
        let expect_sack = (0.5 + 0.25) / 2.0;
        assert!((a[Sack] - expect_sack).abs() < 1e-15);
        assert_eq!(bl.profile(Role::Rusher, &"zz".into()), &bl.global);

        let raw = fit_severity_baseline(&table(&[("s", "x", false, Sack), ("t", "x", false, Loss)]), 0.0).unwrap();
        assert_eq!(raw.profile(Role::Rusher, &"s".into()).0, [0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            predict_severity_matchup(&raw, &"s".into(), &"x".into()),
            Err(Error::ZeroLossComponent { .. })
        ));
    }

    #[test]
    fn severity_matchup_reproduces_global() {
        use OutcomeClass::*;
        let t = table(&[("a", "x", false, Loss), ("a", "x", false, Win), ("b", "y", false, Loss), ("b", "x", false, Hit)]);
        let bl = fit_severity_baseline::<f64>(&t, 50.0).unwrap();
        let p = predict_severity_matchup(&bl, &"new".into(), &"other".into()).unwrap();
        for c in OutcomeClass::ALL {
            assert!((p[c] - bl.global[c]).abs() < 1e-12);
        }
        // no sacks anywhere: sack logit is -inf and its probability exactly 0
        assert_eq!(p[Sack], 0.0);
    }

    #[test]
    fn two_class_severity_closed_form() {
        // profiles (0.5, 0.5) and (0.25, 0.75) on {loss, win}: inverse logit of mean logit
        let eps = 1e-3;
        let norm = |l: f64, w: f64| {
            let s = l + w + 2.0 * eps;
            ClassMap([l / s, w / s, eps / s, eps / s])
        };
        let mut bl = SeverityBaseline::<f64> {
            global: norm(0.5, 0.5),
            m: 1.0,
            rushers: BTreeMap::new(),
            blockers: BTreeMap::new(),
        };
        bl.rushers.insert("r".into(), SmoothedProfile { n: 1, profile: norm(0.5, 0.5) });
        bl.blockers.insert("b".into(), SmoothedProfile { n: 1, profile: norm(0.25, 0.75) });
        let p = predict_severity_matchup(&bl, &"r".into(), &"b".into()).unwrap();
        // logits vs loss: rusher (0, 0, ln(eps/.5), ln(eps/.5)); blocker (0, ln 3, ln(eps/.25), ln(eps/.25))
        let l = [0.0, 0.5 * 3f64.ln(), 0.5 * ((eps / 0.5f64).ln() + (eps / 0.25f64).ln())];
        let z = l[0].exp() + l[1].exp() + 2.0 * l[2].exp();
        assert!((p[OutcomeClass::Win] - l[1].exp() / z).abs() < 1e-14);
        assert!((p[OutcomeClass::Loss] - 1.0 / z).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn smoothing_interpolates(n in 1usize..500, hits in 0usize..500, m in 0.0f64..1000.0, m2 in 0.0f64..1000.0, g in 0.0f64..1.0) {
            let hits = hits.min(n);
            let raw = hits as f64 / n as f64;
            let s = smooth(n, hits as f64, m, g);
            let (lo, hi) = (raw.min(g), raw.max(g));
            prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
            let (ma, mb) = (m.min(m2), m.max(m2));
            let sa = smooth(n, hits as f64, ma, g);
            let sb = smooth(n, hits as f64, mb, g);
            prop_assert!((sb - g).abs() <= (sa - g).abs() + 1e-12);
        }

        #[test]
        fn severity_matchup_is_normalized(classes in prop::collection::vec((0usize..3, 0usize..3, 0usize..4), 1..60), m in 0.5f64..100.0) {
            let ids = ["a", "b", "c"];
            let mut rows: Vec<_> = classes.iter().map(|&(r, b, c)| (ids[r], ids[b], false, OutcomeClass::from_index(c).unwrap())).collect();
            rows.push(("a", "a", false, OutcomeClass::Loss));
            let t = table(&rows);
            let bl = fit_severity_baseline(&t, m).unwrap();
            for r in ids {
                for b in ids {
                    let p = predict_severity_matchup(&bl, &r.into(), &b.into()).unwrap();
                    prop_assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn two_class_severity_equals_win_matchup(cells in prop::collection::vec((0usize..3, 0usize..3, any::<bool>()), 1..60), m in 0.5f64..100.0) {
            let ids = ["a", "b", "c"];
            let mut rows: Vec<_> = cells.iter().map(|&(r, b, w)| (ids[r], ids[b], w, if w { OutcomeClass::Win } else { OutcomeClass::Loss })).collect();
            rows.push(("a", "b", false, OutcomeClass::Loss));
            let t = table(&rows);
            let wb = fit_win_baseline(&t, m).unwrap();
            let sb = fit_severity_baseline(&t, m).unwrap();
            for r in ["a", "b", "c", "unseen"] {
                for b in ["a", "b", "c", "unseen"] {
                    let pw = predict_win_matchup(&wb, &r.into(), &b.into());
                    let ps = predict_severity_matchup(&sb, &r.into(), &b.into()).unwrap();
                    prop_assert!((pw - ps[OutcomeClass::Win]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn huge_prior_converges_to_global(cells in prop::collection::vec((0usize..3, 0usize..3, 0usize..4), 2..60)) {
            let ids = ["a", "b", "c"];
            let mut rows: Vec<_> = cells.iter().map(|&(r, b, c)| (ids[r], ids[b], c == 1, OutcomeClass::from_index(c).unwrap())).collect();
            rows.push(("a", "b", true, OutcomeClass::Loss));
            rows.push(("a", "b", false, OutcomeClass::Win));
            let t = table(&rows);
            let wb = fit_win_baseline::<f64>(&t, 1e9).unwrap();
            let sb = fit_severity_baseline::<f64>(&t, 1e9).unwrap();
            for r in ids {
                for b in ids {
                    prop_assert!((predict_win_matchup(&wb, &r.into(), &b.into()) - wb.p_global).abs() < 1e-6);
                    let ps = predict_severity_matchup(&sb, &r.into(), &b.into()).unwrap();
                    for c in OutcomeClass::ALL {
                        prop_assert!((ps[c] - sb.global[c]).abs() < 1e-6);
                    }
                }
            }
        }
    }
}
