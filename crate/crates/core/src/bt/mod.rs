//! Ridge-penalized Bradley–Terry fitting.

mod binary;
mod cv;
mod multinomial;
pub mod objective;
pub mod solver;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use binary::{fit_binary_ridge, predict_win_prob, BinaryFit, RawBinaryFit};
pub use cv::{
    cv_invocations, cv_select_lambda_binary, cv_select_lambda_multinomial, default_lambda_grid, log_spaced_grid,
    CvResult, Folds, DEFAULT_FOLDS,
};
pub use multinomial::{
    expected_severity, fit_multinomial_ridge, predict_class_probs, ClassEffects, MultinomialFit, RawMultinomialFit,
};
pub use solver::SolverOptions;

use crate::interaction::{Id, Role, SeverityWeights};
use crate::scalar::Real;

/// Either fitted model, tagged for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", bound = "T: Real")]
pub enum FitResult<T: Real> {
    Binary(BinaryFit<T>),
    Multinomial(MultinomialFit<T>),
}

impl<T: Real> BinaryFit<T> {
    /// Player ratings for one role; positive is better in both roles.
    pub fn ratings(&self, role: Role) -> BTreeMap<Id, T> {
        match role {
            Role::Rusher => self.rusher_effects.clone(),
            Role::Blocker => self.blocker_effects.clone(),
        }
    }
}

impl<T: Real> MultinomialFit<T> {
    /// Severity-weighted coefficient sums: `sum_{c != ref} w(c) * effect_c`.
    pub fn ratings(&self, role: Role, w: &SeverityWeights<T>) -> BTreeMap<Id, T> {
        let mut out: BTreeMap<Id, T> = BTreeMap::new();
        for (&c, e) in &self.classes {
            let effects = match role {
                Role::Rusher => &e.rusher_effects,
                Role::Blocker => &e.blocker_effects,
            };
            for (id, &v) in effects {
                *out.entry(id.clone()).or_insert_with(T::zero) += w.weight(c) * v;
            }
        }
        out
    }
}
