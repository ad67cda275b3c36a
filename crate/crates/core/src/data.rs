//! Dataset ingestion.
//!
//! Text files are read row by row, the label column is split off, missing
//! values are handled by dropping either rows or whole feature columns, and
//! the two classes are mapped onto [`Label::Minority`] (−1) and
//! [`Label::Majority`] (+1).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Binary class label. The minority class is always encoded as −1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Minority,
    Majority,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Minority => -1.0,
            Label::Majority => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Minority => -1,
            Label::Majority => 1,
        }
    }

    /// Decodes a real score. Zero goes to the majority class.
    pub fn from_score(score: f64) -> Label {
        if score < 0.0 {
            Label::Minority
        } else {
            Label::Majority
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Minority => Label::Majority,
            Label::Majority => Label::Minority,
        }
    }
}

/// Feature matrix with binary labels; `n_minus <= n_plus` always holds.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    features: FeatureMatrix,
    labels: Vec<Label>,
    n_minus: usize,
    n_plus: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: FeatureMatrix,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: features.rows(),
                right: labels.len(),
            });
        }
        if !features.all_finite() {
            return Err(Error::NonFinite("features"));
        }
        let n_minus = labels.iter().filter(|&&l| l == Label::Minority).count();
        let n_plus = labels.len() - n_minus;
        if n_minus == 0 {
            return Err(Error::EmptyClass { label: -1 });
        }
        if n_plus == 0 {
            return Err(Error::EmptyClass { label: 1 });
        }
        if n_minus > n_plus {
            return Err(Error::InvalidParameter(format!(
                "minority class ({n_minus}) is larger than majority class ({n_plus})"
            )));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            n_minus,
            n_plus,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    /// Smallest valid shift multiplier, `n_minus / n_plus`.
    pub fn min_multiplier(&self) -> f64 {
        self.n_minus as f64 / self.n_plus as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub samples: usize,
    pub features: usize,
    pub n_minus: usize,
    pub n_plus: usize,
    pub minority_percent: u32,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<16} {:>5} {:>5}  {}:{} ({}%)",
            self.name,
            self.samples,
            self.features,
            self.n_minus,
            self.n_plus,
            self.minority_percent
        )
    }
}

pub fn dataset_summary(ds: &Dataset) -> Summary {
    let pct = 100.0 * ds.n_minus() as f64 / ds.len() as f64;
    Summary {
        name: ds.name().to_string(),
        samples: ds.len(),
        features: ds.dim(),
        n_minus: ds.n_minus(),
        n_plus: ds.n_plus(),
        minority_percent: pct.round() as u32,
    }
}

/// Maps raw class values onto ±1 labels.
///
/// The less frequent value becomes the minority class. On equal counts the
/// declared `minority` value wins. The declared value must be present.
pub fn relabel_minority<S: AsRef<str>>(raw: &[S], minority: &str) -> Result<Vec<Label>> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in raw {
        *counts.entry(r.as_ref()).or_default() += 1;
    }
    if counts.len() != 2 {
        return Err(Error::ClassCount {
            found: counts.len(),
        });
    }
    let declared = *counts.get(minority).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "minority value {minority:?} does not occur in the labels"
        ))
    })?;
    let other = raw.len() - declared;
    let minority_is_declared = declared <= other;
    if !minority_is_declared {
        log::warn!(
            "declared minority value {minority:?} has {declared} samples vs {other}; using the smaller class"
        );
    }
    Ok(raw
        .iter()
        .map(|r| {
            let is_declared = r.as_ref() == minority;
            if is_declared == minority_is_declared {
                Label::Minority
            } else {
                Label::Majority
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissingPolicy {
    DropRow,
    DropColumn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    Index(usize),
    Last,
}

/// How raw class values are reduced to two classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassRule {
    /// Exactly two raw values; this one is the minority.
    Minority(String),
    /// This raw value is the majority class; every other value is merged into the minority.
    Majority(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Delimiter {
    Comma,
    Whitespace,
}

/// Counts a registry entry declares; ingestion fails unless they match.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    pub samples: Option<usize>,
    pub features: Option<usize>,
    pub n_minus: Option<usize>,
    pub n_plus: Option<usize>,
    pub dropped_columns: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    pub label_column: LabelColumn,
    pub classes: ClassRule,
    pub missing: MissingPolicy,
    /// Raw (0-based) column indices that are not features, e.g. sample ids.
    pub exclude: Vec<usize>,
    /// Raw columns holding non-numeric nominal codes; values are numbered by first appearance.
    pub nominal: Vec<usize>,
    /// `None` detects the delimiter from the first data line.
    pub delimiter: Option<Delimiter>,
    pub expect: Expectation,
    /// Folds used by the evaluation protocol for this dataset.
    pub folds: Option<usize>,
}

impl DatasetSpec {
    pub fn new(name: impl Into<String>, path: impl Into<PathBuf>, classes: ClassRule) -> Self {
        DatasetSpec {
            name: name.into(),
            path: path.into(),
            label_column: LabelColumn::Last,
            classes,
            missing: MissingPolicy::DropRow,
            exclude: Vec::new(),
            nominal: Vec::new(),
            delimiter: None,
            expect: Expectation::default(),
            folds: None,
        }
    }
}

fn is_missing(tok: &str) -> bool {
    tok.is_empty() || tok == "?"
}

fn detect_delimiter(line: &str) -> Delimiter {
    if line.contains(',') {
        Delimiter::Comma
    } else {
        Delimiter::Whitespace
    }
}

fn split_row(line: &str, delim: Delimiter) -> Vec<&str> {
    match delim {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Whitespace => line.split_whitespace().collect(),
    }
}

pub fn load_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let text = fs::read_to_string(&spec.path).map_err(|e| Error::io(&spec.path, e))?;
    parse_dataset(spec, &text)
}

/// Same as [`load_dataset`] with the file contents already in memory.
pub fn parse_dataset(spec: &DatasetSpec, text: &str) -> Result<Dataset> {
    let path = spec.path.as_path();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut delim = spec.delimiter;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let d = *delim.get_or_insert_with(|| detect_delimiter(line));
        rows.push((lineno + 1, split_row(line, d)));
    }
    if rows.is_empty() {
        return Err(Error::EmptyClass { label: -1 });
    }

    let width = rows[0].1.len();
    for (lineno, toks) in &rows {
        if toks.len() != width {
            return Err(malformed(
                path,
                *lineno,
                format!("expected {width} columns, found {}", toks.len()),
            ));
        }
    }
    let label_col = match spec.label_column {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if i < width => i,
        LabelColumn::Index(i) => {
            return Err(malformed(
                path,
                rows[0].0,
                format!("label column {i} out of range ({width} columns)"),
            ))
        }
    };
    let mut feature_cols: Vec<usize> = (0..width)
        .filter(|&c| c != label_col && !spec.exclude.contains(&c))
        .collect();

    let original_feature_count = feature_cols.len();
    match spec.missing {
        MissingPolicy::DropRow => {
            rows.retain(|(_, toks)| {
                !is_missing(toks[label_col]) && feature_cols.iter().all(|&c| !is_missing(toks[c]))
            });
        }
        MissingPolicy::DropColumn => {
            if let Some((lineno, _)) = rows.iter().find(|(_, toks)| is_missing(toks[label_col])) {
                return Err(malformed(path, *lineno, "missing class label".to_string()));
            }
            let with_missing: BTreeSet<usize> = feature_cols
                .iter()
                .copied()
                .filter(|&c| rows.iter().any(|(_, toks)| is_missing(toks[c])))
                .collect();
            feature_cols.retain(|c| !with_missing.contains(c));
        }
    }
    let dropped_columns = original_feature_count - feature_cols.len();
    if let Some(expected) = spec.expect.dropped_columns {
        if expected != dropped_columns {
            return Err(Error::RegistryMismatch {
                name: spec.name.clone(),
                message: format!(
                    "expected {expected} columns with missing values, found {dropped_columns}"
                ),
            });
        }
    }

    let mut codes: HashMap<usize, HashMap<&str, f64>> = HashMap::new();
    let mut features = FeatureMatrix::with_cols(feature_cols.len());
    let mut raw_labels = Vec::with_capacity(rows.len());
    let mut buf = Vec::with_capacity(feature_cols.len());
    for (lineno, toks) in &rows {
        buf.clear();
        for &c in &feature_cols {
            let tok = toks[c];
            let v = if spec.nominal.contains(&c) {
                let table = codes.entry(c).or_default();
                let next = table.len() as f64;
                *table.entry(tok).or_insert(next)
            } else {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::UnparseableField {
                        path: path.to_path_buf(),
                        line: *lineno,
                        column: c,
                        value: tok.to_string(),
                    })?
            };
            buf.push(v);
        }
        features.push_row(&buf)?;
        raw_labels.push(toks[label_col]);
    }

    let labels = binarize(&raw_labels, &spec.classes)?;
    let ds = Dataset::new(spec.name.clone(), features, labels)?;
    check_expectation(spec, &ds)?;
    Ok(ds)
}

fn binarize(raw: &[&str], rule: &ClassRule) -> Result<Vec<Label>> {
    let distinct: BTreeSet<&str> = raw.iter().copied().collect();
    match rule {
        ClassRule::Minority(m) => {
            if distinct.len() == 1 {
                // A single class is forced to be the minority, leaving no majority.
                return Err(Error::EmptyClass { label: 1 });
            }
            relabel_minority(raw, m)
        }
        ClassRule::Majority(maj) => {
            let merged: Vec<&str> = raw
                .iter()
                .map(|&r| if r == maj { "majority" } else { "minority" })
                .collect();
            let present: BTreeSet<&str> = merged.iter().copied().collect();
            if present.len() == 1 {
                let label = if present.contains("majority") { -1 } else { 1 };
                return Err(Error::EmptyClass { label });
            }
            relabel_minority(&merged, "minority")
        }
    }
}

fn check_expectation(spec: &DatasetSpec, ds: &Dataset) -> Result<()> {
    let e = &spec.expect;
    let checks = [
        ("samples", e.samples, ds.len()),
        ("features", e.features, ds.dim()),
        ("minority samples", e.n_minus, ds.n_minus()),
        ("majority samples", e.n_plus, ds.n_plus()),
    ];
    for (what, expected, got) in checks {
        if let Some(expected) = expected {
            if expected != got {
                return Err(Error::RegistryMismatch {
                    name: spec.name.clone(),
                    message: format!("expected {expected} {what}, found {got}"),
                });
            }
        }
    }
    Ok(())
}

fn malformed(path: &Path, line: usize, message: String) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message,
    }
}
