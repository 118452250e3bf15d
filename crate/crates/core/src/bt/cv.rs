//! Cross-validated selection of the ridge penalty.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::evaluate::{binary_log_loss, multiclass_log_loss};
use crate::interaction::{InteractionTable, OutcomeClass};
use crate::scalar::Real;

use super::binary::{fit_binary_ridge, RawBinaryFit};
use super::multinomial::{fit_multinomial_ridge, RawMultinomialFit};
use super::solver::SolverOptions;

static CV_RUNS: AtomicUsize = AtomicUsize::new(0);

/// Number of cross-validation runs started in this process.
pub fn cv_invocations() -> usize {
    CV_RUNS.load(Ordering::SeqCst)
}

pub const DEFAULT_FOLDS: usize = 5;

/// `n` values log-spaced over `[lo, hi]`, ascending.
pub fn log_spaced_grid<T: Real>(lo: f64, hi: f64, n: usize) -> Vec<T> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![T::lit(lo)];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| T::lit((a + (b - a) * i as f64 / (n - 1) as f64).exp())).collect()
}

/// 25 points over `[1e-6, 1e2]`.
pub fn default_lambda_grid<T: Real>() -> Vec<T> {
    log_spaced_grid(1e-6, 1e2, 25)
}

/// Fold label per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl Folds {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
        }
        let mut sizes = vec![0usize; k];
        for &f in &assignment {
            if f >= k {
                return Err(Error::InvalidArgument(format!("fold label {f} >= {k}")));
            }
            sizes[f] += 1;
        }
        if sizes.contains(&0) {
            return Err(Error::Empty("cross-validation fold"));
        }
        Ok(Folds { assignment, k })
    }

    /// Contiguous blocks of the table's game order, so no game straddles two folds.
    pub fn by_game(table: &InteractionTable, k: usize) -> Result<Self> {
        let mut games = Vec::new();
        for r in table {
            let key = r.game_key();
            if !games.contains(&key) {
                games.push(key);
            }
        }
        let mut ordered = games.clone();
        ordered.sort();
        let g = ordered.len();
        if g < k {
            return Err(Error::InvalidArgument(format!("{g} games cannot fill {k} folds")));
        }
        let fold_of = |pos: usize| pos * k / g;
        let assignment = table
            .iter()
            .map(|r| fold_of(ordered.binary_search(&r.game_key()).expect("game present")))
            .collect();
        Self::new(assignment, k)
    }

    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CvResult<T: Real> {
    pub grid: Vec<T>,
    /// Mean over folds of each fold's mean held-out log loss, aligned with `grid`.
    pub mean_loss: Vec<T>,
    /// `fold_loss[f][g]`
    pub fold_loss: Vec<Vec<T>>,
    pub lambda_min: T,
}

fn cross_validate<T, F>(grid: &[T], folds: &Folds, n_rows: usize, per_fold: F) -> Result<CvResult<T>>
where
    T: Real,
    F: Fn(&[usize], &[usize], &[T]) -> Result<Vec<T>> + Sync,
{
    CV_RUNS.fetch_add(1, Ordering::SeqCst);
    if grid.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    if folds.assignment.len() != n_rows {
        return Err(Error::LengthMismatch { what: "fold labels vs rows", left: folds.assignment.len(), right: n_rows });
    }
    // Warm-started path from the largest penalty down.
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].partial_cmp(&grid[a]).expect("finite grid"));
    let path: Vec<T> = order.iter().map(|&i| grid[i]).collect();

    let per_fold_losses: Vec<Vec<T>> = (0..folds.k)
        .into_par_iter()
        .map(|f| {
            let (train, test) = folds.split(f);
            let on_path = per_fold(&train, &test, &path)?;
            let mut aligned = vec![T::zero(); grid.len()];
            for (pos, &gi) in order.iter().enumerate() {
                aligned[gi] = on_path[pos];
            }
            Ok(aligned)
        })
        .collect::<Result<_>>()?;

    let kf = T::from_count(folds.k);
    let mean_loss: Vec<T> =
        (0..grid.len()).map(|g| per_fold_losses.iter().map(|l| l[g]).sum::<T>() / kf).collect();
    // ties go to the larger penalty
    let mut best = 0;
    for g in 1..grid.len() {
        let better = mean_loss[g] < mean_loss[best] || (mean_loss[g] == mean_loss[best] && grid[g] > grid[best]);
        if better {
            best = g;
        }
    }
    Ok(CvResult { grid: grid.to_vec(), mean_loss, fold_loss: per_fold_losses, lambda_min: grid[best] })
}

pub fn cv_select_lambda_binary<T: Real>(
    x: &DesignMatrix<T>,
    y: &[bool],
    grid: &[T],
    folds: &Folds,
    opts: &SolverOptions<T>,
) -> Result<CvResult<T>> {
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch { what: "rows vs targets", left: x.n_rows(), right: y.len() });
    }
    cross_validate(grid, folds, x.n_rows(), |train, test, path| {
        let xtr = x.select_rows(train);
        let ytr: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let xte = x.select_rows(test);
        let yte: Vec<bool> = test.iter().map(|&i| y[i]).collect();
        let mut warm: Option<RawBinaryFit<T>> = None;
        let mut out = Vec::with_capacity(path.len());
        for &lambda in path {
            let fit = fit_binary_ridge(&xtr, &ytr, lambda, opts, warm.as_ref().map(|w| w.theta.as_slice()))?;
            let probs: Vec<T> = (0..xte.n_rows()).map(|i| fit.predict_row(&xte, i)).collect();
            out.push(binary_log_loss(&probs, &yte)?);
            warm = Some(fit);
        }
        Ok(out)
    })
}

pub fn cv_select_lambda_multinomial<T: Real>(
    x: &DesignMatrix<T>,
    classes: &[OutcomeClass],
    grid: &[T],
    folds: &Folds,
    opts: &SolverOptions<T>,
) -> Result<CvResult<T>> {
    if classes.len() != x.n_rows() {
        return Err(Error::LengthMismatch { what: "rows vs classes", left: x.n_rows(), right: classes.len() });
    }
    cross_validate(grid, folds, x.n_rows(), |train, test, path| {
        let xtr = x.select_rows(train);
        let ctr: Vec<OutcomeClass> = train.iter().map(|&i| classes[i]).collect();
        let xte = x.select_rows(test);
        let cte: Vec<OutcomeClass> = test.iter().map(|&i| classes[i]).collect();
        let mut warm: Option<RawMultinomialFit<T>> = None;
        let mut out = Vec::with_capacity(path.len());
        for &lambda in path {
            let fit = fit_multinomial_ridge(&xtr, &ctr, lambda, opts, warm.as_ref())?;
            let probs: Vec<_> = (0..xte.n_rows()).map(|i| fit.predict_row(&xte, i)).collect();
            out.push(multiclass_log_loss(&probs, &cte)?);
            warm = Some(fit);
        }
        Ok(out)
    })
}
