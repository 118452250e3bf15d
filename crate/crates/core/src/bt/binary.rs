use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::{build_index, DesignMatrix, PlayerIndex, DOUBLE_TEAM_COL, INTERCEPT_COL};
use crate::error::{Error, Result};
use crate::interaction::{Id, Interaction, InteractionTable};
use crate::scalar::{logistic, logit, Real};

use super::objective::BinaryObjective;
use super::solver::{minimize, SolverOptions};

/// Parameter vector and diagnostics of a binary fit, in design-column order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBinaryFit<T> {
    pub theta: Vec<T>,
    pub lambda: T,
    pub neg_loglik: T,
    pub objective: T,
    pub grad_norm: T,
    pub iterations: usize,
}

/// Fitted binary Bradley–Terry model: `logit P(win) = alpha + r_i - b_j + delta * D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BinaryFit<T: Real> {
    pub alpha: T,
    pub delta: T,
    pub rusher_effects: BTreeMap<Id, T>,
    pub blocker_effects: BTreeMap<Id, T>,
    pub lambda: T,
    pub neg_loglik: T,
    pub objective: T,
    pub grad_norm: T,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    Ok(())
}

/// Minimizes `-loglik + lambda * |theta_pen|^2` for the binary model.
///
/// Without a warm start the search begins at zero effects with the intercept
/// at the empirical log-odds.
pub fn fit_binary_ridge<T: Real>(
    x: &DesignMatrix<T>,
    y: &[bool],
    lambda: T,
    opts: &SolverOptions<T>,
    warm: Option<&[T]>,
) -> Result<RawBinaryFit<T>> {
    check_lambda(lambda)?;
    if x.n_rows() == 0 {
        return Err(Error::Empty("design rows"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch { what: "rows vs targets", left: x.n_rows(), right: y.len() });
    }
    let wins = y.iter().filter(|&&v| v).count();
    if wins == 0 || wins == y.len() {
        return Err(Error::DegenerateTarget(if wins == 0 { "all losses" } else { "all wins" }));
    }
    let theta0 = match warm {
        Some(w) if w.len() == x.n_cols() => w.to_vec(),
        _ => {
            let mut t = vec![T::zero(); x.n_cols()];
            t[INTERCEPT_COL] = logit(T::from_count(wins) / T::from_count(y.len()));
            t
        }
    };
    let obj = BinaryObjective::new(x, y, lambda);
    let sol = minimize(&obj, theta0, opts)?;
    Ok(RawBinaryFit {
        neg_loglik: obj.neg_loglik(&sol.theta),
        theta: sol.theta,
        lambda,
        objective: sol.objective,
        grad_norm: sol.grad_norm,
        iterations: sol.iterations,
    })
}

impl<T: Real> RawBinaryFit<T> {
    pub fn predict_row(&self, x: &DesignMatrix<T>, i: usize) -> T {
        logistic(x.dot(i, &self.theta))
    }
}

impl<T: Real> BinaryFit<T> {
    pub fn from_raw(idx: &PlayerIndex, raw: &RawBinaryFit<T>) -> Self {
        BinaryFit {
            alpha: raw.theta[INTERCEPT_COL],
            delta: raw.theta[DOUBLE_TEAM_COL],
            rusher_effects: idx.rusher_columns().map(|(id, c)| (id.clone(), raw.theta[c])).collect(),
            blocker_effects: idx.blocker_columns().map(|(id, c)| (id.clone(), raw.theta[c])).collect(),
            lambda: raw.lambda,
            neg_loglik: raw.neg_loglik,
            objective: raw.objective,
            grad_norm: raw.grad_norm,
            iterations: raw.iterations,
            warnings: Vec::new(),
        }
    }

    /// Indexes `table`, fits at `lambda`, and attaches player ids.
    pub fn fit(table: &InteractionTable, lambda: T, opts: &SolverOptions<T>) -> Result<Self> {
        let idx = build_index(table)?;
        let x = DesignMatrix::encode(table, &idx);
        let y: Vec<bool> = table.iter().map(|r| r.win_target).collect();
        let raw = fit_binary_ridge(&x, &y, lambda, opts, None)?;
        let mut fit = Self::from_raw(&idx, &raw);
        if lambda == T::zero() {
            fit.warnings = separation_warnings(table);
            for w in &fit.warnings {
                log::warn!("{w}");
            }
        }
        Ok(fit)
    }

    pub fn linear_predictor(&self, x: &Interaction) -> T {
        let r = self.rusher_effects.get(&x.rusher_id).copied().unwrap_or_else(T::zero);
        let b = self.blocker_effects.get(&x.blocker_id).copied().unwrap_or_else(T::zero);
        let d = if x.double_team { self.delta } else { T::zero() };
        self.alpha + r - b + d
    }

    pub fn predict(&self, x: &Interaction) -> T {
        logistic(self.linear_predictor(x))
    }
}

/// Players whose every training outcome is identical; at `lambda = 0` their
/// effects are unbounded.
fn separation_warnings(table: &InteractionTable) -> Vec<String> {
    let mut r: BTreeMap<&Id, (usize, usize)> = BTreeMap::new();
    let mut b: BTreeMap<&Id, (usize, usize)> = BTreeMap::new();
    for x in table {
        let e = r.entry(&x.rusher_id).or_default();
        e.0 += 1;
        e.1 += usize::from(x.win_target);
        let e = b.entry(&x.blocker_id).or_default();
        e.0 += 1;
        e.1 += usize::from(x.win_target);
    }
    let mut out = Vec::new();
    for (role, m) in [("rusher", r), ("blocker", b)] {
        for (id, (n, w)) in m {
            if w == 0 || w == n {
                out.push(format!("separation at lambda=0: {role} {id} has {w}/{n} wins"));
            }
        }
    }
    out
}

/// Inverse logit of `alpha + r - b + delta * D`, with unseen players at zero.
pub fn predict_win_prob<T: Real>(fit: &BinaryFit<T>, x: &Interaction) -> T {
    fit.predict(x)
}
