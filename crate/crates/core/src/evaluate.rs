//! Ordered holdout split, log-loss metrics, and model-vs-baseline validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    fit_severity_baseline, fit_win_baseline, predict_severity_global, predict_severity_matchup, predict_win_global,
    predict_win_matchup, DEFAULT_M_SEVERITY, DEFAULT_M_WIN, SENSITIVITY_GRID,
};
use crate::bt::{
    cv_select_lambda_binary, cv_select_lambda_multinomial, default_lambda_grid, BinaryFit, CvResult, Folds,
    MultinomialFit, SolverOptions, DEFAULT_FOLDS,
};
use crate::design::{build_index, DesignMatrix};
use crate::error::{Error, Result};
use crate::interaction::{ClassProbs, InteractionTable, OutcomeClass};
use crate::io::{write_csv, write_json};
use crate::scalar::Real;

pub const PROB_CLIP: f64 = 1e-15;
pub const NORMALIZATION_TOL: f64 = 1e-9;
pub const DEFAULT_SPLIT_RATIO: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: InteractionTable,
    pub test: InteractionTable,
    pub ratio: f64,
}

/// Number of training rows for `n` rows at `ratio`: `floor(ratio * n)`.
///
/// The tiny offset absorbs products such as `0.29 * 100 = 28.999...`.
pub fn train_size(n: usize, ratio: f64) -> usize {
    ((ratio * n as f64 + 1e-9).floor() as usize).min(n)
}

/// First `floor(ratio * n)` rows train, the rest test.
pub fn ordered_split(table: &InteractionTable, ratio: f64) -> Result<SplitResult> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!("split ratio must lie in [0, 1], got {ratio}")));
    }
    if table.is_empty() {
        return Err(Error::Empty("interaction table"));
    }
    if !table.is_canonical() {
        return Err(Error::Unsorted);
    }
    let k = train_size(table.len(), ratio);
    if k == 0 || k == table.len() {
        log::warn!("ordered split of {} rows leaves {} train / {} test", table.len(), k, table.len() - k);
    }
    let (a, b) = table.rows().split_at(k);
    Ok(SplitResult { train: InteractionTable::new(a.to_vec()), test: InteractionTable::new(b.to_vec()), ratio })
}

fn clip<T: Real>(p: T) -> T {
    let lo = T::lit(PROB_CLIP);
    let hi = T::one() - lo;
    p.max(lo).min(hi)
}

/// Mean Bernoulli negative log-likelihood in nats.
pub fn binary_log_loss<T: Real>(probs: &[T], outcomes: &[bool]) -> Result<T> {
    if probs.len() != outcomes.len() {
        return Err(Error::LengthMismatch { what: "probabilities vs outcomes", left: probs.len(), right: outcomes.len() });
    }
    if probs.is_empty() {
        return Err(Error::Empty("log-loss input"));
    }
    let total: T = probs
        .iter()
        .zip(outcomes)
        .map(|(&p, &y)| {
            let p = clip(p);
            -(if y { p.ln() } else { (T::one() - p).ln() })
        })
        .sum();
    Ok(total / T::from_count(probs.len()))
}

/// Mean of `-ln p(observed class)` in nats.
pub fn multiclass_log_loss<T: Real>(probs: &[ClassProbs<T>], classes: &[OutcomeClass]) -> Result<T> {
    if probs.len() != classes.len() {
        return Err(Error::LengthMismatch { what: "probability vectors vs classes", left: probs.len(), right: classes.len() });
    }
    if probs.is_empty() {
        return Err(Error::Empty("log-loss input"));
    }
    let tol = T::lit(NORMALIZATION_TOL).max(T::epsilon() * T::lit(16.0));
    let mut total = T::zero();
    for (p, &c) in probs.iter().zip(classes) {
        let s: T = p.values().iter().copied().sum();
        if !((s - T::one()).abs() <= tol) || p.values().iter().any(|&v| v < T::zero()) {
            return Err(Error::NotNormalized(s.as_f64()));
        }
        total -= clip(p[c]).ln();
    }
    Ok(total / T::from_count(probs.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Win,
    Severity,
}

impl Task {
    pub const BOTH: [Task; 2] = [Task::Win, Task::Severity];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Win => "win",
            Task::Severity => "severity",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "win" => Ok(Task::Win),
            "severity" => Ok(Task::Severity),
            _ => Err(Error::InvalidArgument(format!("unknown task '{s}' (expected win or severity)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Global,
    Matchup,
}

impl BaselineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Global => "global",
            BaselineKind::Matchup => "matchup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ValidationRow<T: Real> {
    pub task: Task,
    pub baseline: BaselineKind,
    pub model_logloss: T,
    pub baseline_logloss: T,
    pub improvement: T,
}

impl<T: Real> ValidationRow<T> {
    pub fn new(task: Task, baseline: BaselineKind, model_logloss: T, baseline_logloss: T) -> Self {
        ValidationRow { task, baseline, model_logloss, baseline_logloss, improvement: baseline_logloss - model_logloss }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Lambdas<T: Real> {
    pub win: T,
    pub severity: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaChoice<T: Real> {
    /// Cross-validate over this grid on the training portion.
    Cv(Vec<T>),
    Fixed(Lambdas<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig<T: Real> {
    pub ratio: f64,
    pub lambda: LambdaChoice<T>,
    pub folds: usize,
    pub m_win: T,
    pub m_severity: T,
    pub solver: SolverOptions<T>,
}

impl<T: Real> Default for ValidationConfig<T> {
    fn default() -> Self {
        ValidationConfig {
            ratio: DEFAULT_SPLIT_RATIO,
            lambda: LambdaChoice::Cv(default_lambda_grid()),
            folds: DEFAULT_FOLDS,
            m_win: T::lit(DEFAULT_M_WIN),
            m_severity: T::lit(DEFAULT_M_SEVERITY),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LambdaSelection<T: Real> {
    pub lambdas: Lambdas<T>,
    pub win_cv: CvResult<T>,
    pub severity_cv: CvResult<T>,
}

/// Cross-validates both models on `table`, folds grouped by game.
pub fn select_lambdas<T: Real>(
    table: &InteractionTable,
    grid: &[T],
    folds: usize,
    opts: &SolverOptions<T>,
) -> Result<LambdaSelection<T>> {
    let idx = build_index(table)?;
    let x = DesignMatrix::<T>::encode(table, &idx);
    let f = Folds::by_game(table, folds)?;
    let y: Vec<bool> = table.iter().map(|r| r.win_target).collect();
    let c: Vec<OutcomeClass> = table.iter().map(|r| r.severity).collect();
    let (w, s) = rayon::join(
        || cv_select_lambda_binary(&x, &y, grid, &f, opts),
        || cv_select_lambda_multinomial(&x, &c, grid, &f, opts),
    );
    let (win_cv, severity_cv) = (w?, s?);
    Ok(LambdaSelection { lambdas: Lambdas { win: win_cv.lambda_min, severity: severity_cv.lambda_min }, win_cv, severity_cv })
}

pub fn fit_models<T: Real>(
    table: &InteractionTable,
    lambdas: Lambdas<T>,
    opts: &SolverOptions<T>,
) -> Result<(BinaryFit<T>, MultinomialFit<T>)> {
    let (w, s) =
        rayon::join(|| BinaryFit::fit(table, lambdas.win, opts), || MultinomialFit::fit(table, lambdas.severity, opts));
    Ok((w?, s?))
}

/// Held-out losses of the two fitted models.
pub fn model_losses<T: Real>(
    win: &BinaryFit<T>,
    severity: &MultinomialFit<T>,
    test: &InteractionTable,
) -> Result<(T, T)> {
    let y: Vec<bool> = test.iter().map(|r| r.win_target).collect();
    let c: Vec<OutcomeClass> = test.iter().map(|r| r.severity).collect();
    let pw: Vec<T> = test.iter().map(|r| win.predict(r)).collect();
    let ps: Vec<ClassProbs<T>> = test.iter().map(|r| severity.predict(r)).collect();
    Ok((binary_log_loss(&pw, &y)?, multiclass_log_loss(&ps, &c)?))
}

/// Held-out losses of the four baselines, ordered win/global, win/matchup,
/// severity/global, severity/matchup.
pub fn baseline_losses<T: Real>(train: &InteractionTable, test: &InteractionTable, m_win: T, m_severity: T) -> Result<[T; 4]> {
    let y: Vec<bool> = test.iter().map(|r| r.win_target).collect();
    let c: Vec<OutcomeClass> = test.iter().map(|r| r.severity).collect();
    let wb = fit_win_baseline(train, m_win)?;
    let sb = fit_severity_baseline(train, m_severity)?;
    let gw = vec![predict_win_global(&wb); test.len()];
    let mw: Vec<T> = test.iter().map(|r| predict_win_matchup(&wb, &r.rusher_id, &r.blocker_id)).collect();
    let gs = vec![predict_severity_global(&sb); test.len()];
    let ms: Vec<ClassProbs<T>> =
        test.iter().map(|r| predict_severity_matchup(&sb, &r.rusher_id, &r.blocker_id)).collect::<Result<_>>()?;
    Ok([
        binary_log_loss(&gw, &y)?,
        binary_log_loss(&mw, &y)?,
        multiclass_log_loss(&gs, &c)?,
        multiclass_log_loss(&ms, &c)?,
    ])
}

/// Assembles the four comparison rows in table order.
pub fn comparison_rows<T: Real>(model: (T, T), base: [T; 4]) -> Vec<ValidationRow<T>> {
    vec![
        ValidationRow::new(Task::Win, BaselineKind::Global, model.0, base[0]),
        ValidationRow::new(Task::Win, BaselineKind::Matchup, model.0, base[1]),
        ValidationRow::new(Task::Severity, BaselineKind::Global, model.1, base[2]),
        ValidationRow::new(Task::Severity, BaselineKind::Matchup, model.1, base[3]),
    ]
}

/// Fits models and baselines on `split.train` at fixed penalties and scores
/// them on `split.test`.
pub fn validate_split<T: Real>(
    split: &SplitResult,
    lambdas: Lambdas<T>,
    m_win: T,
    m_severity: T,
    opts: &SolverOptions<T>,
) -> Result<(Vec<ValidationRow<T>>, BinaryFit<T>, MultinomialFit<T>)> {
    let (win, sev) = fit_models(&split.train, lambdas, opts)?;
    let model = model_losses(&win, &sev, &split.test)?;
    let base = baseline_losses(&split.train, &split.test, m_win, m_severity)?;
    Ok((comparison_rows(model, base), win, sev))
}

#[derive(Debug, Clone)]
pub struct ValidationReport<T: Real> {
    pub n_train: usize,
    pub n_test: usize,
    pub lambdas: Lambdas<T>,
    pub selection: Option<LambdaSelection<T>>,
    pub rows: Vec<ValidationRow<T>>,
    pub win_fit: BinaryFit<T>,
    pub severity_fit: MultinomialFit<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ValidationSummary<T: Real> {
    pub n_train: usize,
    pub n_test: usize,
    pub lambdas: Lambdas<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<LambdaSelection<T>>,
    pub rows: Vec<ValidationRow<T>>,
}

impl<T: Real> ValidationReport<T> {
    pub fn summary(&self) -> ValidationSummary<T> {
        ValidationSummary {
            n_train: self.n_train,
            n_test: self.n_test,
            lambdas: self.lambdas,
            selection: self.selection.clone(),
            rows: self.rows.clone(),
        }
    }
}

fn resolve_lambdas<T: Real>(
    train: &InteractionTable,
    cfg: &ValidationConfig<T>,
) -> Result<(Lambdas<T>, Option<LambdaSelection<T>>)> {
    match &cfg.lambda {
        LambdaChoice::Fixed(l) => Ok((*l, None)),
        LambdaChoice::Cv(grid) => {
            let sel = select_lambdas(train, grid, cfg.folds, &cfg.solver)?;
            Ok((sel.lambdas, Some(sel)))
        }
    }
}

/// Ordered holdout validation; every fitted quantity sees the training rows only.
pub fn run_validation<T: Real>(table: &InteractionTable, cfg: &ValidationConfig<T>) -> Result<ValidationReport<T>> {
    let split = ordered_split(table, cfg.ratio)?;
    let (lambdas, selection) = resolve_lambdas(&split.train, cfg)?;
    let (rows, win_fit, severity_fit) = validate_split(&split, lambdas, cfg.m_win, cfg.m_severity, &cfg.solver)?;
    Ok(ValidationReport { n_train: split.train.len(), n_test: split.test.len(), lambdas, selection, rows, win_fit, severity_fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SensitivityRow<T: Real> {
    pub task: Task,
    pub m: T,
    pub model_logloss: T,
    pub baseline_logloss: T,
    pub improvement: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SensitivityReport<T: Real> {
    pub lambdas: Lambdas<T>,
    pub rows: Vec<SensitivityRow<T>>,
}

pub fn default_sensitivity_grid<T: Real>() -> Vec<T> {
    SENSITIVITY_GRID.iter().map(|&m| T::lit(m)).collect()
}

/// Matchup-baseline comparison across prior strengths; the models are fitted once.
pub fn prior_sensitivity<T: Real>(
    table: &InteractionTable,
    cfg: &ValidationConfig<T>,
    grid: &[T],
) -> Result<SensitivityReport<T>> {
    if grid.is_empty() {
        return Err(Error::Empty("prior-strength grid"));
    }
    let split = ordered_split(table, cfg.ratio)?;
    let (lambdas, _) = resolve_lambdas(&split.train, cfg)?;
    let (win, sev) = fit_models(&split.train, lambdas, &cfg.solver)?;
    let (mw, ms) = model_losses(&win, &sev, &split.test)?;
    let per_m: Vec<[T; 4]> =
        grid.iter().map(|&m| baseline_losses(&split.train, &split.test, m, m)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(2 * grid.len());
    for task in Task::BOTH {
        for (&m, losses) in grid.iter().zip(&per_m) {
            let (model, base) = match task {
                Task::Win => (mw, losses[1]),
                Task::Severity => (ms, losses[3]),
            };
            rows.push(SensitivityRow { task, m, model_logloss: model, baseline_logloss: base, improvement: base - model });
        }
    }
    Ok(SensitivityReport { lambdas, rows })
}

pub const VALIDATION_HEADER: &[&str] = &["task", "baseline", "model_logloss", "baseline_logloss", "improvement"];
pub const SENSITIVITY_HEADER: &[&str] = &["task", "m", "model_logloss", "baseline_logloss", "improvement"];

fn dec4<T: Real>(v: T) -> String {
    format!("{:.4}", v.as_f64())
}

/// CSV at four decimals alongside JSON at full precision.
pub fn write_validation<T: Real>(dir: impl AsRef<Path>, summary: &ValidationSummary<T>) -> Result<()> {
    let dir = dir.as_ref();
    let rows = summary.rows.iter().map(|r| {
        [r.task.as_str().to_string(), r.baseline.as_str().to_string(), dec4(r.model_logloss), dec4(r.baseline_logloss), dec4(r.improvement)]
    });
    write_csv(dir.join("validation.csv"), VALIDATION_HEADER, rows)?;
    write_json(dir.join("validation.json"), summary)
}

pub fn write_sensitivity<T: Real>(dir: impl AsRef<Path>, report: &SensitivityReport<T>) -> Result<()> {
    let dir = dir.as_ref();
    let rows = report.rows.iter().map(|r| {
        [r.task.as_str().to_string(), format!("{}", r.m), dec4(r.model_logloss), dec4(r.baseline_logloss), dec4(r.improvement)]
    });
    write_csv(dir.join("sensitivity.csv"), SENSITIVITY_HEADER, rows)?;
    write_json(dir.join("sensitivity.json"), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{row, ClassMap};
    use proptest::prelude::*;

    fn dummy(n: usize) -> InteractionTable {
        (0..n).map(|i| row("g", "1", i as u32, "r", "b")).collect()
    }

    #[test]
    fn split_sizes() {
        let s = ordered_split(&dummy(10), 0.8).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        let s = ordered_split(&dummy(1), 0.8).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (0, 1));
        assert_eq!(train_size(153_138, 0.8), 122_510);
        assert_eq!(train_size(100, 0.29), 29);
        let rev = InteractionTable::new(dummy(3).into_rows().into_iter().rev().collect());
        assert!(matches!(ordered_split(&rev, 0.8), Err(Error::Unsorted)));
    }

    #[test]
    fn log_loss_examples() {
        assert!((binary_log_loss(&[0.5, 0.5], &[true, false]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(binary_log_loss(&[1.0, 0.0], &[true, false]).unwrap() < 1e-14);
        let v = binary_log_loss(&[0.9, 0.2], &[true, false]).unwrap();
        assert!((v + (0.9f64.ln() + 0.8f64.ln()) / 2.0).abs() < 1e-15);
        assert!(matches!(binary_log_loss(&[0.5], &[true, false]), Err(Error::LengthMismatch { .. })));

        let u = ClassMap([0.25; 4]);
        assert!((multiclass_log_loss(&[u], &[OutcomeClass::Hit]).unwrap() - 4f64.ln()).abs() < 1e-15);
        let one = ClassMap([0.0f64, 0.0, 1.0, 0.0]);
        assert!(multiclass_log_loss(&[one], &[OutcomeClass::Hit]).unwrap().abs() < 1e-14);
        let a = ClassMap([0.7f64, 0.1, 0.1, 0.1]);
        let b = ClassMap([0.3, 0.1, 0.5, 0.1]);
        let v = multiclass_log_loss(&[a, b], &[OutcomeClass::Loss, OutcomeClass::Win]).unwrap();
        assert!((v - 1.3297).abs() < 1e-4);
        assert!(matches!(
            multiclass_log_loss(&[ClassMap([0.5, 0.5, 0.5, 0.0])], &[OutcomeClass::Loss]),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn identical_predictions_give_zero_improvement() {
        let r = ValidationRow::new(Task::Win, BaselineKind::Global, 0.5123, 0.5123);
        assert_eq!(r.improvement, 0.0);
    }

    #[test]
    fn global_baseline_entropy_on_train() {
        let t: InteractionTable = (0..37)
            .map(|i| {
                let mut x = row("g", "1", i, "r", "b");
                x.win_target = i % 3 == 0;
                x
            })
            .collect();
        let wb = fit_win_baseline::<f64>(&t, 25.0).unwrap();
        let p = predict_win_global(&wb);
        let y: Vec<bool> = t.iter().map(|r| r.win_target).collect();
        let loss = binary_log_loss(&vec![p; y.len()], &y).unwrap();
        let h = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert!((loss - h).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn split_partitions_in_order(n in 1usize..300, ratio in 0.0f64..=1.0) {
            let t = dummy(n);
            let s = ordered_split(&t, ratio).unwrap();
            prop_assert_eq!(s.train.len(), train_size(n, ratio));
            let joined: Vec<_> = s.train.iter().chain(s.test.iter()).cloned().collect();
            prop_assert_eq!(joined.as_slice(), t.rows());
            prop_assert_eq!(ordered_split(&t, ratio).unwrap(), s);
        }
    }
}
