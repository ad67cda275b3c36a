use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

/// Rows are true classes, columns predictions; the minority class comes first.
///
/// ```text
///                 pred minority   pred majority
/// true minority      t_minus         f_plus
/// true majority      f_minus         t_plus
/// ```
///
/// Entries are reals so averaged tables share the type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionTable {
    pub t_minus: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub t_plus: f64,
}

impl ConfusionTable {
    pub fn new(t_minus: f64, f_plus: f64, f_minus: f64, t_plus: f64) -> Self {
        ConfusionTable {
            t_minus,
            f_plus,
            f_minus,
            t_plus,
        }
    }

    pub fn minority_total(&self) -> f64 {
        self.t_minus + self.f_plus
    }

    pub fn majority_total(&self) -> f64 {
        self.f_minus + self.t_plus
    }

    pub fn total(&self) -> f64 {
        self.minority_total() + self.majority_total()
    }

    pub fn scaled(&self, s: f64) -> Self {
        ConfusionTable::new(
            self.t_minus * s,
            self.f_plus * s,
            self.f_minus * s,
            self.t_plus * s,
        )
    }

    /// Rounded half away from zero, for display.
    pub fn rounded(&self) -> [i64; 4] {
        [self.t_minus, self.f_plus, self.f_minus, self.t_plus].map(|v| v.round() as i64)
    }

    pub fn metrics(&self) -> Metrics {
        metrics(self)
    }
}

impl Add for ConfusionTable {
    type Output = ConfusionTable;

    fn add(self, o: Self) -> Self {
        ConfusionTable::new(
            self.t_minus + o.t_minus,
            self.f_plus + o.f_plus,
            self.f_minus + o.f_minus,
            self.t_plus + o.t_plus,
        )
    }
}

impl AddAssign for ConfusionTable {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

pub fn confusion_table(truth: &[Label], predicted: &[Label]) -> Result<ConfusionTable> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    let mut ct = ConfusionTable::default();
    for (t, p) in truth.iter().zip(predicted) {
        match (t, p) {
            (Label::Minority, Label::Minority) => ct.t_minus += 1.0,
            (Label::Minority, Label::Majority) => ct.f_plus += 1.0,
            (Label::Majority, Label::Minority) => ct.f_minus += 1.0,
            (Label::Majority, Label::Majority) => ct.t_plus += 1.0,
        }
    }
    Ok(ct)
}

/// Same as [`confusion_table`] for labels given as ±1 integers.
pub fn confusion_table_from_signs(truth: &[i8], predicted: &[i8]) -> Result<ConfusionTable> {
    let decode = |v: &[i8]| -> Result<Vec<Label>> {
        v.iter()
            .map(|&s| match s {
                -1 => Ok(Label::Minority),
                1 => Ok(Label::Majority),
                other => Err(Error::InvalidParameter(format!(
                    "label must be -1 or +1, got {other}"
                ))),
            })
            .collect()
    };
    confusion_table(&decode(truth)?, &decode(predicted)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub specificity: f64,
    pub precision: f64,
    pub recall: f64,
    pub gmean: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Specificity, precision and recall with the minority as the positive
/// class, then `gmean = sqrt(rec * spe)` and `f1 = 2 pre rec / (pre + rec)`.
/// Zero denominators give zero.
pub fn metrics(ct: &ConfusionTable) -> Metrics {
    let specificity = ratio(ct.t_plus, ct.f_minus + ct.t_plus);
    let precision = ratio(ct.t_minus, ct.t_minus + ct.f_minus);
    let recall = ratio(ct.t_minus, ct.t_minus + ct.f_plus);
    Metrics {
        specificity,
        precision,
        recall,
        gmean: (recall * specificity).sqrt(),
        f1: ratio(2.0 * precision * recall, precision + recall),
    }
}
