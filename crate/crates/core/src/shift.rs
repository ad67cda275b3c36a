//! Regression targets for a binary task.
//!
//! Minority samples receive a random permutation of `-n_minus..=-1` and
//! majority samples a random permutation of `1..=n_plus`, one distinct target
//! per sample. [`shift_targets`] then translates only the negative side by
//! `delta_m = m * n_plus - n_minus`, so the negative targets run from
//! `-(n_minus + delta_m)` to `-(1 + delta_m)`. With `m = 1` the target
//! interval becomes `[-n_plus, n_plus]`; with `m = n_minus / n_plus` nothing
//! moves.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetAssignment {
    /// One target per training sample, in sample order.
    pub targets: Vec<f64>,
    pub m: f64,
    pub delta_m: f64,
    pub n_minus: usize,
    pub n_plus: usize,
}

impl TargetAssignment {
    /// Smallest multiplier that keeps `delta_m >= 0`.
    pub fn min_multiplier(&self) -> f64 {
        self.n_minus as f64 / self.n_plus as f64
    }
}

/// The ±1 labels themselves as regression targets.
pub fn plain_binary_targets(labels: &[Label]) -> Vec<f64> {
    labels.iter().map(|l| l.sign()).collect()
}

/// Random bijection onto `{-n_minus, ..., -1, 1, ..., n_plus}` (no shift).
pub fn assign_random_targets(labels: &[Label], seed: u64) -> Result<TargetAssignment> {
    let n_minus = labels.iter().filter(|&&l| l == Label::Minority).count();
    let n_plus = labels.len() - n_minus;
    if n_minus == 0 {
        return Err(Error::EmptyClass { label: -1 });
    }
    if n_plus == 0 {
        return Err(Error::EmptyClass { label: 1 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut neg: Vec<f64> = (1..=n_minus).map(|v| -(v as f64)).collect();
    let mut pos: Vec<f64> = (1..=n_plus).map(|v| v as f64).collect();
    neg.shuffle(&mut rng);
    pos.shuffle(&mut rng);

    let (mut ni, mut pi) = (neg.into_iter(), pos.into_iter());
    let targets = labels
        .iter()
        .map(|l| match l {
            Label::Minority => ni.next(),
            Label::Majority => pi.next(),
        })
        .collect::<Option<Vec<f64>>>()
        .expect("one target per sample");

    Ok(TargetAssignment {
        targets,
        m: n_minus as f64 / n_plus as f64,
        delta_m: 0.0,
        n_minus,
        n_plus,
    })
}

/// `m * n_plus - n_minus`.
pub fn delta_m(m: f64, n_minus: usize, n_plus: usize) -> f64 {
    m * n_plus as f64 - n_minus as f64
}

/// Moves the negative targets of `assignment` so that they correspond to
/// multiplier `m`. Positive targets are untouched. The input may already be
/// shifted; the result only depends on the unshifted assignment and `m`.
pub fn shift_targets(assignment: &TargetAssignment, m: f64) -> Result<TargetAssignment> {
    let min = assignment.min_multiplier();
    let dm = delta_m(m, assignment.n_minus, assignment.n_plus);
    // Exact rational check first so m == n_minus / n_plus is always accepted.
    if !m.is_finite() || (m < min && dm < 0.0) {
        return Err(Error::MultiplierTooSmall { m, min });
    }
    let dm = dm.max(0.0);
    let extra = dm - assignment.delta_m;
    let targets = assignment
        .targets
        .iter()
        .map(|&t| if t < 0.0 { t - extra } else { t })
        .collect();
    Ok(TargetAssignment {
        targets,
        m,
        delta_m: dm,
        n_minus: assignment.n_minus,
        n_plus: assignment.n_plus,
    })
}
