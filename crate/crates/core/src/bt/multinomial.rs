use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::{build_index, DesignMatrix, PlayerIndex, DOUBLE_TEAM_COL, INTERCEPT_COL};
use crate::error::{Error, Result};
use crate::interaction::{ClassMap, ClassProbs, Id, Interaction, InteractionTable, OutcomeClass, SeverityWeights};
use crate::scalar::Real;

use super::objective::MultinomialObjective;
use super::solver::{minimize, SolverOptions};

/// Multinomial parameter vector over the classes present in training.
///
/// `present[0]` is the reference class (the least severe observed class,
/// `loss` whenever it occurs). `theta` holds one design-width block per
/// remaining present class.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMultinomialFit<T> {
    pub present: Vec<OutcomeClass>,
    pub n_cols: usize,
    pub theta: Vec<T>,
    pub lambda: T,
    pub neg_loglik: T,
    pub objective: T,
    pub grad_norm: T,
    pub iterations: usize,
}

impl<T: Real> RawMultinomialFit<T> {
    pub fn block(&self, slot: usize) -> &[T] {
        &self.theta[slot * self.n_cols..(slot + 1) * self.n_cols]
    }

    pub fn predict_row(&self, x: &DesignMatrix<T>, i: usize) -> ClassProbs<T> {
        let logits: Vec<T> =
            std::iter::once(T::zero()).chain((0..self.present.len() - 1).map(|s| x.dot(i, self.block(s)))).collect();
        softmax_over(&self.present, &logits)
    }
}

fn softmax_over<T: Real>(present: &[OutcomeClass], logits: &[T]) -> ClassProbs<T> {
    let mut probs = vec![T::zero(); logits.len()];
    crate::scalar::softmax_into(logits, &mut probs);
    let mut out = ClassMap([T::zero(); 4]);
    for (c, p) in present.iter().zip(probs) {
        out[*c] = p;
    }
    out
}

/// Per-class coefficients relative to the reference class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ClassEffects<T: Real> {
    pub alpha: T,
    pub delta: T,
    pub rusher_effects: BTreeMap<Id, T>,
    pub blocker_effects: BTreeMap<Id, T>,
}

/// Fitted multinomial Bradley–Terry model:
/// `eta_c = alpha_c + r_{i,c} - b_{j,c} + delta_c * D`, `eta_ref = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MultinomialFit<T: Real> {
    pub reference: OutcomeClass,
    pub classes: BTreeMap<OutcomeClass, ClassEffects<T>>,
    /// Classes never observed in training; they get probability zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_classes: Vec<OutcomeClass>,
    pub lambda: T,
    pub neg_loglik: T,
    pub objective: T,
    pub grad_norm: T,
    pub iterations: usize,
}

/// Minimizes the penalized multinomial negative log-likelihood over the
/// classes observed in `classes`. Unobserved classes are dropped from the
/// softmax; with a single observed class the fit is trivial.
pub fn fit_multinomial_ridge<T: Real>(
    x: &DesignMatrix<T>,
    classes: &[OutcomeClass],
    lambda: T,
    opts: &SolverOptions<T>,
    warm: Option<&RawMultinomialFit<T>>,
) -> Result<RawMultinomialFit<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if x.n_rows() == 0 {
        return Err(Error::Empty("design rows"));
    }
    if x.n_rows() != classes.len() {
        return Err(Error::LengthMismatch { what: "rows vs classes", left: x.n_rows(), right: classes.len() });
    }
    let mut counts = [0usize; 4];
    for c in classes {
        counts[c.index()] += 1;
    }
    let present: Vec<OutcomeClass> = OutcomeClass::ALL.into_iter().filter(|c| counts[c.index()] > 0).collect();
    let dropped: Vec<OutcomeClass> = OutcomeClass::ALL.into_iter().filter(|c| counts[c.index()] == 0).collect();
    if !dropped.is_empty() {
        log::info!("classes absent from training and dropped from the softmax: {dropped:?}");
    }
    let k = present.len() - 1;
    let p = x.n_cols();
    if k == 0 {
        return Ok(RawMultinomialFit {
            present,
            n_cols: p,
            theta: Vec::new(),
            lambda,
            neg_loglik: T::zero(),
            objective: T::zero(),
            grad_norm: T::zero(),
            iterations: 0,
        });
    }
    let mut slot = [0usize; 4];
    for (s, c) in present.iter().enumerate() {
        slot[c.index()] = s;
    }
    let targets: Vec<usize> = classes.iter().map(|c| slot[c.index()]).collect();

    let theta0 = match warm {
        Some(w) if w.present == present && w.n_cols == p => w.theta.clone(),
        _ => {
            let mut t = vec![T::zero(); k * p];
            let n_ref = T::from_count(counts[present[0].index()]);
            for (s, c) in present.iter().enumerate().skip(1) {
                t[(s - 1) * p + INTERCEPT_COL] = (T::from_count(counts[c.index()]) / n_ref).ln();
            }
            t
        }
    };
    let obj = MultinomialObjective::new(x, &targets, k, lambda);
    let sol = minimize(&obj, theta0, opts)?;
    Ok(RawMultinomialFit {
        present,
        n_cols: p,
        neg_loglik: obj.neg_loglik(&sol.theta),
        theta: sol.theta,
        lambda,
        objective: sol.objective,
        grad_norm: sol.grad_norm,
        iterations: sol.iterations,
    })
}

impl<T: Real> MultinomialFit<T> {
    pub fn from_raw(idx: &PlayerIndex, raw: &RawMultinomialFit<T>) -> Self {
        let classes = raw
            .present
            .iter()
            .skip(1)
            .enumerate()
            .map(|(s, &c)| {
                let b = raw.block(s);
                let effects = ClassEffects {
                    alpha: b[INTERCEPT_COL],
                    delta: b[DOUBLE_TEAM_COL],
                    rusher_effects: idx.rusher_columns().map(|(id, col)| (id.clone(), b[col])).collect(),
                    blocker_effects: idx.blocker_columns().map(|(id, col)| (id.clone(), b[col])).collect(),
                };
                (c, effects)
            })
            .collect();
        MultinomialFit {
            reference: raw.present[0],
            classes,
            dropped_classes: OutcomeClass::ALL.into_iter().filter(|c| !raw.present.contains(c)).collect(),
            lambda: raw.lambda,
            neg_loglik: raw.neg_loglik,
            objective: raw.objective,
            grad_norm: raw.grad_norm,
            iterations: raw.iterations,
        }
    }

    pub fn fit(table: &InteractionTable, lambda: T, opts: &SolverOptions<T>) -> Result<Self> {
        let idx = build_index(table)?;
        let x = DesignMatrix::encode(table, &idx);
        let classes: Vec<OutcomeClass> = table.iter().map(|r| r.severity).collect();
        let raw = fit_multinomial_ridge(&x, &classes, lambda, opts, None)?;
        Ok(Self::from_raw(&idx, &raw))
    }

    pub fn present_classes(&self) -> Vec<OutcomeClass> {
        std::iter::once(self.reference).chain(self.classes.keys().copied()).collect()
    }

    pub fn predict(&self, x: &Interaction) -> ClassProbs<T> {
        let logits: Vec<T> = std::iter::once(T::zero())
            .chain(self.classes.values().map(|e| {
                let r = e.rusher_effects.get(&x.rusher_id).copied().unwrap_or_else(T::zero);
                let b = e.blocker_effects.get(&x.blocker_id).copied().unwrap_or_else(T::zero);
                e.alpha + r - b + if x.double_team { e.delta } else { T::zero() }
            }))
            .collect();
        softmax_over(&self.present_classes(), &logits)
    }
}

/// Softmax over the fitted classes with the reference logit fixed at zero.
pub fn predict_class_probs<T: Real>(fit: &MultinomialFit<T>, x: &Interaction) -> ClassProbs<T> {
    fit.predict(x)
}

/// `sum_c p_c * w(c)`.
pub fn expected_severity<T: Real>(probs: &ClassProbs<T>, w: &SeverityWeights<T>) -> T {
    probs.iter().map(|(c, &p)| p * w.weight(c)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{default_severity_weights, row};

    fn zero_effects(alpha: f64) -> ClassEffects<f64> {
        ClassEffects { alpha, delta: 0.0, rusher_effects: BTreeMap::new(), blocker_effects: BTreeMap::new() }
    }

    fn fit_of(alphas: [f64; 3]) -> MultinomialFit<f64> {
        MultinomialFit {
            reference: OutcomeClass::Loss,
            classes: [OutcomeClass::Win, OutcomeClass::Hit, OutcomeClass::Sack]
                .into_iter()
                .zip(alphas)
                .map(|(c, a)| (c, zero_effects(a)))
                .collect(),
            dropped_classes: vec![],
            lambda: 0.0,
            neg_loglik: 0.0,
            objective: 0.0,
            grad_norm: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn softmax_examples() {
        let x = row("g", "p", 0, "r", "b");
        let p = predict_class_probs(&fit_of([0.0; 3]), &x);
        assert!(p.values().iter().all(|&v| (v - 0.25).abs() < 1e-15));

        let p = predict_class_probs(&fit_of([3f64.ln(), 0.0, 0.0]), &x);
        assert!((p[OutcomeClass::Win] - 0.5).abs() < 1e-15);
        for c in [OutcomeClass::Loss, OutcomeClass::Hit, OutcomeClass::Sack] {
            assert!((p[c] - 1.0 / 6.0).abs() < 1e-15);
        }

        let p = predict_class_probs(&fit_of([0.0, 0.0, 1000.0]), &x);
        assert!((p[OutcomeClass::Sack] - 1.0).abs() < 1e-15);
        assert!(p.values().iter().all(|v| v.is_finite()));
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_severity_examples() {
        let w = default_severity_weights::<f64>();
        assert_eq!(expected_severity(&ClassMap([1.0, 0.0, 0.0, 0.0]), &w), 0.0);
        assert_eq!(expected_severity(&ClassMap([0.0, 0.0, 0.0, 1.0]), &w), 1.0);
        let s = expected_severity(&ClassMap([0.730, 0.253, 0.0109, 0.0063]), &w);
        assert!((s - 0.03378).abs() < 1e-12, "{s}");
    }

    #[test]
    fn single_row_is_trivial_and_normalized() {
        let mut r = row("g", "p", 0, "r", "b");
        r.severity = OutcomeClass::Hit;
        let t = InteractionTable::new(vec![r.clone()]);
        let fit = MultinomialFit::fit(&t, 1.0, &SolverOptions::default()).unwrap();
        let p = fit.predict(&r);
        assert_eq!(p[OutcomeClass::Hit], 1.0);
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(fit.dropped_classes.len(), 3);
    }

    #[test]
    fn absent_classes_are_dropped_not_fabricated() {
        let rows: Vec<_> = (0..8)
            .map(|i| {
                let mut r = row("g", "p", i, if i % 2 == 0 { "r1" } else { "r2" }, "b");
                r.severity = if i % 3 == 0 { OutcomeClass::Win } else { OutcomeClass::Loss };
                r
            })
            .collect();
        let t = InteractionTable::new(rows);
        let fit = MultinomialFit::fit(&t, 0.5, &SolverOptions::default()).unwrap();
        assert_eq!(fit.dropped_classes, vec![OutcomeClass::Hit, OutcomeClass::Sack]);
        let p = fit.predict(&t.rows()[0]);
        assert_eq!(p[OutcomeClass::Sack], 0.0);
        assert!(fit.grad_norm <= 1e-8);
    }
}
