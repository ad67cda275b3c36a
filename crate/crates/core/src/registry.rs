//! Named dataset specifications in a small INI-like text format:
//!
//! ```text
//! [breast-cancer]
//! title = Breast Cancer
//! file = breast-cancer-wisconsin.data
//! minority = 4
//! exclude = 0
//! samples = 683
//! ```
//!
//! Relative `file` entries are resolved against a data directory at lookup.

use std::fs;
use std::path::Path;

use crate::data::{ClassRule, DatasetSpec, Delimiter, LabelColumn, MissingPolicy};
use crate::error::{Error, Result};

/// Environment variable naming the directory holding dataset files.
pub const DATA_DIR_ENV: &str = "LABELSHIFT_DATA_DIR";

pub const BUILTIN: &str = "\
# UCI datasets used by the evaluation grid.

[arrhythmia]
title = Arrhythmia
file = arrhythmia.data
majority = 1
missing = drop-column
dropped_columns = 5
samples = 452
features = 274
n_minus = 207
n_plus = 245
folds = 20

[breast-cancer]
title = Breast Cancer
file = breast-cancer-wisconsin.data
minority = 4
exclude = 0
missing = drop-row
samples = 683
features = 9
n_minus = 239
n_plus = 444
folds = 20

[heart]
title = Heart Disease
file = heart.dat
minority = 2
delimiter = whitespace
samples = 270
features = 13
n_minus = 120
n_plus = 150
folds = 10

[ionosphere]
title = Ionosphere
file = ionosphere.data
minority = b
samples = 351
features = 34
n_minus = 126
n_plus = 225
folds = 10
";

#[derive(Clone, Debug, PartialEq)]
pub struct RegistryEntry {
    pub title: String,
    pub spec: DatasetSpec,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Registry {
    entries: Vec<RegistryEntry>,
}

impl Registry {
    pub fn builtin() -> Registry {
        Registry::parse(BUILTIN).expect("builtin registry parses")
    }

    pub fn load(path: &Path) -> Result<Registry> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Registry::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Registry> {
        let mut entries = Vec::new();
        let mut current: Option<(String, Vec<(String, String)>)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if let Some((n, kv)) = current.take() {
                    entries.push(build_entry(n, kv)?);
                }
                current = Some((name.trim().to_string(), Vec::new()));
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Registry(format!("line {}: expected key = value", i + 1)))?;
            match current.as_mut() {
                Some((_, kv)) => kv.push((k.trim().to_string(), v.trim().to_string())),
                None => {
                    return Err(Error::Registry(format!(
                        "line {}: key outside a [section]",
                        i + 1
                    )))
                }
            }
        }
        if let Some((n, kv)) = current.take() {
            entries.push(build_entry(n, kv)?);
        }
        Ok(Registry { entries })
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.spec.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| e.spec.name == name)
    }

    /// Looks up `name` and resolves its file against `data_dir`.
    pub fn resolve(&self, name: &str, data_dir: &Path) -> Result<DatasetSpec> {
        let entry = self
            .get(name)
            .ok_or_else(|| Error::UnknownDataset(name.to_string()))?;
        let mut spec = entry.spec.clone();
        if spec.path.is_relative() {
            spec.path = data_dir.join(&spec.path);
        }
        Ok(spec)
    }
}

fn build_entry(name: String, kv: Vec<(String, String)>) -> Result<RegistryEntry> {
    let err = |msg: String| Error::Registry(format!("[{name}] {msg}"));
    let mut title = None;
    let mut file = None;
    let mut classes = None;
    let mut label_column = LabelColumn::Last;
    let mut missing = MissingPolicy::DropRow;
    let mut exclude = Vec::new();
    let mut nominal = Vec::new();
    let mut delimiter = None;
    let mut expect = crate::data::Expectation::default();
    let mut folds = None;

    let num = |k: &str, v: &str| -> Result<usize> {
        v.parse().map_err(|_| {
            Error::Registry(format!(
                "[{name}] {k}: expected a non-negative integer, got {v:?}"
            ))
        })
    };
    let list = |k: &str, v: &str| -> Result<Vec<usize>> {
        v.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| num(k, s.trim()))
            .collect()
    };

    for (k, v) in kv {
        match k.as_str() {
            "title" => title = Some(v),
            "file" => file = Some(v),
            "minority" | "majority" if classes.is_some() => {
                return Err(err("only one of minority/majority may be given".into()))
            }
            "minority" => classes = Some(ClassRule::Minority(v)),
            "majority" => classes = Some(ClassRule::Majority(v)),
            "label_column" => {
                label_column = if v == "last" {
                    LabelColumn::Last
                } else {
                    LabelColumn::Index(num(&k, &v)?)
                }
            }
            "missing" => {
                missing = match v.as_str() {
                    "drop-row" => MissingPolicy::DropRow,
                    "drop-column" => MissingPolicy::DropColumn,
                    other => return Err(err(format!("unknown missing policy {other:?}"))),
                }
            }
            "delimiter" => {
                delimiter = match v.as_str() {
                    "comma" => Some(Delimiter::Comma),
                    "whitespace" => Some(Delimiter::Whitespace),
                    "auto" => None,
                    other => return Err(err(format!("unknown delimiter {other:?}"))),
                }
            }
            "exclude" => exclude = list(&k, &v)?,
            "nominal" => nominal = list(&k, &v)?,
            "samples" => expect.samples = Some(num(&k, &v)?),
            "features" => expect.features = Some(num(&k, &v)?),
            "n_minus" => expect.n_minus = Some(num(&k, &v)?),
            "n_plus" => expect.n_plus = Some(num(&k, &v)?),
            "dropped_columns" => expect.dropped_columns = Some(num(&k, &v)?),
            "folds" => folds = Some(num(&k, &v)?),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }

    let file = file.ok_or_else(|| err("missing `file`".into()))?;
    let classes =
        classes.ok_or_else(|| err("one of `minority` or `majority` is required".into()))?;
    if let LabelColumn::Index(i) = label_column {
        if exclude.contains(&i) {
            return Err(err("the label column cannot also be excluded".into()));
        }
    }
    let mut spec = DatasetSpec::new(name.clone(), file, classes);
    spec.label_column = label_column;
    spec.missing = missing;
    spec.exclude = exclude;
    spec.nominal = nominal;
    spec.delimiter = delimiter;
    spec.expect = expect;
    spec.folds = folds;
    Ok(RegistryEntry {
        title: title.unwrap_or(name),
        spec,
    })
}
