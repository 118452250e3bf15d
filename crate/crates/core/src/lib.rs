//! Paired-comparison ratings for pass-rush interactions.
//!
//! The core is generic over the scalar type; the aliases at the crate root fix it to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bootstrap;
pub mod bt;
pub mod design;
pub mod error;
pub mod evaluate;
pub mod external;
pub mod ingest;
pub mod interaction;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use interaction::{ClassMap, Id, Interaction, InteractionTable, OutcomeClass, Role};
pub use scalar::Real;

pub type BinaryFit = bt::BinaryFit<f64>;
pub type MultinomialFit = bt::MultinomialFit<f64>;
pub type FitResult = bt::FitResult<f64>;
pub type ClassProbs = interaction::ClassProbs<f64>;
pub type SeverityWeights = interaction::SeverityWeights<f64>;
pub type SolverOptions = bt::SolverOptions<f64>;
pub type WinBaseline = baselines::WinBaseline<f64>;
pub type SeverityBaseline = baselines::SeverityBaseline<f64>;
pub type ValidationConfig = evaluate::ValidationConfig<f64>;
pub type ValidationRow = evaluate::ValidationRow<f64>;

pub type BinaryFit32 = bt::BinaryFit<f32>;
pub type MultinomialFit32 = bt::MultinomialFit<f32>;
