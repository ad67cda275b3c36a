//! Linear support vector machines trained in the dual.
//!
//! [`train_svc`] fits a hinge-loss classifier and [`train_svr`] an
//! epsilon-insensitive regressor. Both return a [`LinearModel`] whose raw
//! score is `<w, x> + b`; [`predict_class`] decodes the score by its sign.
//!
//! How the bias is handled picks the solver:
//!
//! * [`BiasTerm::Free`] (default): an unregularised bias, solved by SMO
//!   over pairs of dual variables.
//! * [`BiasTerm::Regularized`]: the bias is the weight of a constant
//!   feature 1 and is penalised with the other weights; solved by
//!   single-variable coordinate descent.
//! * [`BiasTerm::None`]: no bias, coordinate descent.

mod cd;
mod smo;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::matrix::{dot, FeatureMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BiasTerm {
    Free,
    Regularized,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Classifier,
    Regressor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Box constraint on the dual variables.
    pub c: f64,
    /// Tube half-width for regression; `None` derives it from the targets with [`default_epsilon`].
    pub epsilon: Option<f64>,
    pub bias: BiasTerm,
    /// Stopping threshold on the maximal KKT violation.
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Seeds the per-epoch permutation of the coordinate-descent solver.
    pub shuffle_seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epsilon: None,
            bias: BiasTerm::Free,
            tolerance: 1e-3,
            max_epochs: 1000,
            shuffle_seed: 0,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must be non-negative, got {eps}"
                )));
            }
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParameter(
                "max_epochs must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SvmParams {
            shuffle_seed: seed,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Full passes over the data (for SMO: pair updates divided by the sample count, rounded up).
    pub epochs: usize,
    /// Dual variable updates (pairs for SMO, coordinates for coordinate descent).
    pub iterations: u64,
    pub final_violation: f64,
    /// Value of the (maximisation) dual objective at the returned point.
    pub dual_objective: f64,
    pub converged: bool,
    /// Dual objective after every epoch; non-decreasing.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
    /// Dual variables: `alpha` in `[0, C]` for classifiers, `beta` in `[-C, C]` for regressors.
    #[serde(skip)]
    pub dual: Vec<f64>,
    /// Tube half-width actually used by a regressor.
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kind: ModelKind,
    pub bias_term: BiasTerm,
    pub diagnostics: Diagnostics,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn half_sq_norm(&self) -> f64 {
        let b2 = if self.bias_term == BiasTerm::Regularized {
            self.bias * self.bias
        } else {
            0.0
        };
        0.5 * (dot(&self.weights, &self.weights) + b2)
    }

    /// `1/2 |w|^2 + C * sum(max(0, 1 - y f(x)))`, with `b^2` in the norm when the bias is regularised.
    pub fn svc_primal(&self, x: &FeatureMatrix, y: &[Label], c: f64) -> f64 {
        let loss: f64 = x
            .iter_rows()
            .zip(y)
            .map(|(r, l)| (1.0 - l.sign() * self.score(r)).max(0.0))
            .sum();
        self.half_sq_norm() + c * loss
    }

    /// `1/2 |w|^2 + C * sum(max(0, |t - f(x)| - eps))`.
    pub fn svr_primal(&self, x: &FeatureMatrix, t: &[f64], c: f64, epsilon: f64) -> f64 {
        let loss: f64 = x
            .iter_rows()
            .zip(t)
            .map(|(r, t)| ((t - self.score(r)).abs() - epsilon).max(0.0))
            .sum();
        self.half_sq_norm() + c * loss
    }

    #[inline]
    fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// Plain-text key-value dump for debugging.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kind = match self.kind {
            ModelKind::Classifier => "classifier",
            ModelKind::Regressor => "regressor",
        };
        let _ = writeln!(s, "kind = {kind}");
        let _ = writeln!(s, "d = {}", self.dim());
        let w: Vec<String> = self.weights.iter().map(|w| format!("{w:e}")).collect();
        let _ = writeln!(s, "weights = {}", w.join(" "));
        let _ = writeln!(s, "bias = {:e}", self.bias);
        let _ = writeln!(s, "bias_term = {:?}", self.bias_term);
        let d = &self.diagnostics;
        if let Some(eps) = d.epsilon {
            let _ = writeln!(s, "epsilon = {eps:e}");
        }
        let _ = writeln!(s, "epochs = {}", d.epochs);
        let _ = writeln!(s, "iterations = {}", d.iterations);
        let _ = writeln!(s, "final_violation = {:e}", d.final_violation);
        let _ = writeln!(s, "dual_objective = {:e}", d.dual_objective);
        let _ = writeln!(s, "converged = {}", d.converged);
        s
    }
}

fn check_inputs(x: &FeatureMatrix, n: usize) -> Result<()> {
    if x.rows() != n {
        return Err(Error::LengthMismatch {
            left: x.rows(),
            right: n,
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("features"));
    }
    Ok(())
}

pub fn train_svc(x: &FeatureMatrix, y: &[Label], params: &SvmParams) -> Result<LinearModel> {
    params.validate()?;
    check_inputs(x, y.len())?;
    let n_minus = y.iter().filter(|&&l| l == Label::Minority).count();
    if n_minus == 0 || n_minus == y.len() {
        return Err(Error::TooFewSamples(
            "classifier training needs both classes".into(),
        ));
    }
    let signs: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let n = x.rows();

    let (weights, bias, diagnostics) = match params.bias {
        BiasTerm::Free => {
            let vars = smo::Variables {
                sample: (0..n).collect(),
                sign: signs,
                linear: vec![-1.0; n],
            };
            let sol = smo_solve(x, &vars, params);
            let diag = smo_diagnostics(&sol, n, None);
            (sol.weights, sol.bias, diag)
        }
        BiasTerm::Regularized | BiasTerm::None => {
            let sol = cd::solve_svc(x, &signs, &cd_settings(params));
            let diag = cd_diagnostics(
                sol.epochs,
                n,
                sol.violation,
                &sol.trace,
                sol.converged,
                sol.dual,
                None,
            );
            (sol.weights, sol.bias, diag)
        }
    };
    Ok(LinearModel {
        weights,
        bias,
        kind: ModelKind::Classifier,
        bias_term: params.bias,
        diagnostics,
    })
}

pub fn train_svr(x: &FeatureMatrix, t: &[f64], params: &SvmParams) -> Result<LinearModel> {
    params.validate()?;
    check_inputs(x, t.len())?;
    if t.len() < 2 {
        return Err(Error::TooFewSamples(format!(
            "regression needs at least 2 samples, got {}",
            t.len()
        )));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    let epsilon = params.epsilon.unwrap_or_else(|| default_epsilon(t));
    let n = x.rows();

    let (weights, bias, diagnostics) = match params.bias {
        BiasTerm::Free => {
            let vars = smo::Variables {
                sample: (0..n).chain(0..n).collect(),
                sign: std::iter::repeat_n(1.0, n)
                    .chain(std::iter::repeat_n(-1.0, n))
                    .collect(),
                linear: t
                    .iter()
                    .map(|t| epsilon - t)
                    .chain(t.iter().map(|t| epsilon + t))
                    .collect(),
            };
            let sol = smo_solve(x, &vars, params);
            let mut diag = smo_diagnostics(&sol, n, Some(epsilon));
            diag.dual = (0..n).map(|i| sol.alpha[i] - sol.alpha[i + n]).collect();
            (sol.weights, sol.bias, diag)
        }
        BiasTerm::Regularized | BiasTerm::None => {
            let sol = cd::solve_svr(x, t, epsilon, &cd_settings(params));
            let diag = cd_diagnostics(
                sol.epochs,
                n,
                sol.violation,
                &sol.trace,
                sol.converged,
                sol.dual,
                Some(epsilon),
            );
            (sol.weights, sol.bias, diag)
        }
    };
    Ok(LinearModel {
        weights,
        bias,
        kind: ModelKind::Regressor,
        bias_term: params.bias,
        diagnostics,
    })
}

fn smo_solve(x: &FeatureMatrix, vars: &smo::Variables, params: &SvmParams) -> smo::Solution {
    let n = x.rows() as u64;
    smo::solve(
        x,
        vars,
        params.c,
        params.tolerance,
        params.max_epochs as u64 * n,
        n.max(1),
    )
}

fn smo_diagnostics(sol: &smo::Solution, n: usize, epsilon: Option<f64>) -> Diagnostics {
    let trace: Vec<f64> = sol.trace.iter().map(|v| -v).collect();
    Diagnostics {
        epochs: sol.iterations.div_ceil(n.max(1) as u64) as usize,
        iterations: sol.iterations,
        final_violation: sol.violation,
        dual_objective: *trace.last().unwrap_or(&0.0),
        converged: sol.converged,
        objective_trace: trace,
        dual: sol.alpha.clone(),
        epsilon,
    }
}

fn cd_settings(params: &SvmParams) -> cd::Settings {
    cd::Settings {
        c: params.c,
        with_bias: params.bias == BiasTerm::Regularized,
        tolerance: params.tolerance,
        max_epochs: params.max_epochs,
        seed: params.shuffle_seed,
    }
}

fn cd_diagnostics(
    epochs: usize,
    n: usize,
    violation: f64,
    trace: &[f64],
    converged: bool,
    dual: Vec<f64>,
    epsilon: Option<f64>,
) -> Diagnostics {
    let trace: Vec<f64> = trace.iter().map(|v| -v).collect();
    Diagnostics {
        epochs,
        iterations: (epochs * n) as u64,
        final_violation: violation,
        dual_objective: *trace.last().unwrap_or(&0.0),
        converged,
        objective_trace: trace,
        dual,
        epsilon,
    }
}

pub fn predict_raw(model: &LinearModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    Ok(model.score(x))
}

/// Sign decoding of [`predict_raw`]; a score of exactly zero maps to the majority class.
pub fn predict_class(model: &LinearModel, x: &[f64]) -> Result<Label> {
    predict_raw(model, x).map(Label::from_score)
}

/// `IQR(targets) / 13.49`, the interquartile range scaled to a normal
/// standard deviation, divided by ten.
///
/// Quartiles are read at positions `0.25 (n + 1)` and `0.75 (n + 1)` of the
/// sorted targets (1-based, clamped to `[1, n]`) with linear interpolation.
pub fn default_epsilon(targets: &[f64]) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    (q3 - q1) / 13.49
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = (p * (n as f64 + 1.0)).clamp(1.0, n as f64);
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let a = sorted[lo - 1];
    if frac == 0.0 || lo >= n {
        a
    } else {
        a + frac * (sorted[lo] - a)
    }
}
