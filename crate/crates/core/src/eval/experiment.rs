//! Repeated stratified k-fold evaluation of one method on one dataset.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{stratified_kfold, training_indices};
use super::metrics::{confusion_table, metrics, ConfusionTable};
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::seed::{derive_seed, Purpose};
use crate::shift::{assign_random_targets, plain_binary_targets, shift_targets};
use crate::smote::{smote_balance, Formula, SmoteParams};
use crate::svm::{predict_class, train_svc, train_svr, LinearModel, SvmParams};

/// A training recipe: which SVM, and how the training fold is transformed first.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Hinge-loss classifier on the ±1 labels.
    Classifier,
    /// Regressor on the ±1 labels.
    Omega,
    /// Regressor on random unique targets `-n_minus..-1, 1..n_plus`.
    OmegaTilde,
    /// Regressor on random unique targets with the negative side shifted for multiplier `m`.
    Shift(f64),
    /// Classifier on the training fold oversampled to balance with SMOTE.
    Smote,
}

impl Method {
    pub fn is_regression(&self) -> bool {
        matches!(self, Method::Omega | Method::OmegaTilde | Method::Shift(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Classifier => f.write_str("csvm"),
            Method::Omega => f.write_str("omega"),
            Method::OmegaTilde => f.write_str("omega-tilde"),
            Method::Shift(m) if m.fract() == 0.0 => write!(f, "shift:{m:.1}"),
            Method::Shift(m) => write!(f, "shift:{m}"),
            Method::Smote => f.write_str("smote"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csvm" => Ok(Method::Classifier),
            "omega" => Ok(Method::Omega),
            "omega-tilde" => Ok(Method::OmegaTilde),
            "smote" => Ok(Method::Smote),
            _ => {
                let m = s
                    .strip_prefix("shift:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|m| m.is_finite() && *m > 0.0)
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "unknown method {s:?} (expected csvm, omega, omega-tilde, shift:<m> or smote)"
                        ))
                    })?;
                Ok(Method::Shift(m))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub repetitions: usize,
    pub folds: usize,
    pub base_seed: u64,
    pub svm: SvmParams,
    pub smote_k: usize,
    pub smote_formula: Formula,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            repetitions: 10,
            folds: 10,
            base_seed: 0,
            svm: SvmParams::default(),
            smote_k: 10,
            smote_formula: Formula::Interpolate,
        }
    }
}

/// One line of the fold log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub folds: usize,
    pub rep: usize,
    pub fold: usize,
    pub t_minus: u64,
    pub f_plus: u64,
    pub f_minus: u64,
    pub t_plus: u64,
    pub gmean: f64,
    pub f1: f64,
    /// Solver stopped at the epoch limit.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub not_converged: bool,
}

impl FoldResult {
    pub fn confusion(&self) -> ConfusionTable {
        ConfusionTable::new(
            self.t_minus as f64,
            self.f_plus as f64,
            self.f_minus as f64,
            self.t_plus as f64,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (`n - 1`; zero for a single value).
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        if values.is_empty() {
            return MeanStd {
                mean: 0.0,
                std: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    /// Sum of the fold confusions of this repetition.
    pub confusion: ConfusionTable,
    pub gmean: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub dataset: String,
    pub method: Method,
    pub folds: usize,
    pub base_seed: u64,
    pub fold_results: Vec<FoldResult>,
    pub repetitions: Vec<RepetitionSummary>,
    /// Over repetitions, as fractions in `[0, 1]`.
    pub gmean: MeanStd,
    pub f1: MeanStd,
    /// Mean over repetitions of the summed fold confusions.
    pub mean_confusion: ConfusionTable,
}

impl ExperimentResult {
    /// Rebuilds every aggregate from the fold records alone.
    ///
    /// Metrics of a repetition come from its summed confusion table.
    pub fn from_folds(method: Method, fold_results: Vec<FoldResult>) -> Result<ExperimentResult> {
        let first = fold_results
            .first()
            .ok_or_else(|| Error::ResultLog("no fold records".into()))?;
        let (dataset, folds, base_seed) = (first.dataset.clone(), first.folds, first.seed);
        let tag = method.to_string();
        for r in &fold_results {
            if r.dataset != dataset || r.folds != folds || r.seed != base_seed || r.method != tag {
                return Err(Error::ResultLog(format!(
                    "mixed records: {}/{}/k={}/seed={} vs {}/{}/k={}/seed={}",
                    r.dataset, r.method, r.folds, r.seed, dataset, tag, folds, base_seed
                )));
            }
        }
        let reps = fold_results.iter().map(|r| r.rep).max().unwrap_or(0) + 1;
        let mut sums = vec![ConfusionTable::default(); reps];
        let mut seen = vec![0usize; reps];
        for r in &fold_results {
            sums[r.rep] += r.confusion();
            seen[r.rep] += 1;
        }
        if let Some(rep) = seen.iter().position(|&c| c != folds) {
            return Err(Error::ResultLog(format!(
                "repetition {rep} has {} fold records, expected {folds}",
                seen[rep]
            )));
        }
        let repetitions: Vec<RepetitionSummary> = sums
            .into_iter()
            .map(|confusion| {
                let m = metrics(&confusion);
                RepetitionSummary {
                    confusion,
                    gmean: m.gmean,
                    f1: m.f1,
                }
            })
            .collect();
        let gmeans: Vec<f64> = repetitions.iter().map(|r| r.gmean).collect();
        let f1s: Vec<f64> = repetitions.iter().map(|r| r.f1).collect();
        let mean_confusion = repetitions
            .iter()
            .fold(ConfusionTable::default(), |acc, r| acc + r.confusion)
            .scaled(1.0 / reps as f64);
        Ok(ExperimentResult {
            dataset,
            method,
            folds,
            base_seed,
            fold_results,
            gmean: MeanStd::of(&gmeans),
            f1: MeanStd::of(&f1s),
            repetitions,
            mean_confusion,
        })
    }

    pub fn repetition_gmeans(&self) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.gmean).collect()
    }

    pub fn repetition_f1s(&self) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.f1).collect()
    }
}

/// Trains `method` on one training split and returns the fitted model.
///
/// `rep`/`fold` only feed the seed derivation.
pub fn fit_fold(
    x: &FeatureMatrix,
    y: &[Label],
    method: Method,
    config: &ExperimentConfig,
    rep: usize,
    fold: usize,
) -> Result<LinearModel> {
    let seed = |p| derive_seed(config.base_seed, rep, fold, p);
    let svm = config.svm.with_seed(seed(Purpose::SolverShuffle));
    match method {
        Method::Classifier => train_svc(x, y, &svm),
        Method::Omega => train_svr(x, &plain_binary_targets(y), &svm),
        Method::OmegaTilde => {
            let a = assign_random_targets(y, seed(Purpose::Assignment))?;
            train_svr(x, &a.targets, &svm)
        }
        Method::Shift(m) => {
            let a = assign_random_targets(y, seed(Purpose::Assignment))?;
            let a = shift_targets(&a, m)?;
            train_svr(x, &a.targets, &svm)
        }
        Method::Smote => {
            let minority_idx: Vec<usize> =
                (0..y.len()).filter(|&i| y[i] == Label::Minority).collect();
            let n_plus = y.len() - minority_idx.len();
            let minority = x.select(&minority_idx);
            let params = SmoteParams {
                k: config.smote_k,
                seed: seed(Purpose::Smote),
                formula: config.smote_formula,
            };
            let synthetic = smote_balance(&minority, n_plus, &params)?;
            let mut xb = x.clone();
            let mut yb = y.to_vec();
            for r in synthetic.iter_rows().take(synthetic.rows()) {
                xb.push_row(r)?;
                yb.push(Label::Minority);
            }
            train_svc(&xb, &yb, &svm)
        }
    }
}

/// Runs `config.repetitions` rounds of stratified `config.folds`-fold CV.
///
/// Fold splits depend only on `(base_seed, rep)`, so every method run with
/// the same config sees the same splits. Repetitions run in parallel on the
/// current rayon pool; the result does not depend on scheduling.
pub fn run_experiment(
    ds: &Dataset,
    method: Method,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    if config.repetitions == 0 {
        return Err(Error::InvalidParameter(
            "need at least one repetition".into(),
        ));
    }
    config.svm.validate()?;
    if let Method::Shift(m) = method {
        if m < ds.min_multiplier() && crate::shift::delta_m(m, ds.n_minus(), ds.n_plus()) < 0.0 {
            return Err(Error::MultiplierTooSmall {
                m,
                min: ds.min_multiplier(),
            });
        }
    }
    let tag = method.to_string();
    let per_rep: Vec<Vec<FoldResult>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(ds, method, &tag, config, rep))
        .collect::<Result<_>>()?;
    ExperimentResult::from_folds(method, per_rep.into_iter().flatten().collect())
}

fn run_repetition(
    ds: &Dataset,
    method: Method,
    tag: &str,
    config: &ExperimentConfig,
    rep: usize,
) -> Result<Vec<FoldResult>> {
    let folds = stratified_kfold(
        ds.labels(),
        config.folds,
        derive_seed(config.base_seed, rep, 0, Purpose::Folds),
    )?;
    let mut out = Vec::with_capacity(folds.len());
    for (fold, test) in folds.iter().enumerate() {
        let wrap = |e: Error| Error::Fold {
            rep,
            fold,
            source: Box::new(e),
        };
        let train = training_indices(ds.len(), test);
        let x_train = ds.features().select(&train);
        let y_train: Vec<Label> = train.iter().map(|&i| ds.labels()[i]).collect();
        let model = fit_fold(&x_train, &y_train, method, config, rep, fold).map_err(wrap)?;

        let truth: Vec<Label> = test.iter().map(|&i| ds.labels()[i]).collect();
        let predicted = test
            .iter()
            .map(|&i| predict_class(&model, ds.features().row(i)))
            .collect::<Result<Vec<_>>>()
            .map_err(wrap)?;
        let ct = confusion_table(&truth, &predicted)?;
        let m = metrics(&ct);
        out.push(FoldResult {
            method: tag.to_string(),
            dataset: ds.name().to_string(),
            seed: config.base_seed,
            folds: config.folds,
            rep,
            fold,
            t_minus: ct.t_minus as u64,
            f_plus: ct.f_plus as u64,
            f_minus: ct.f_minus as u64,
            t_plus: ct.t_plus as u64,
            gmean: m.gmean,
            f1: m.f1,
            not_converged: !model.diagnostics.converged,
        });
    }
    Ok(out)
}
