//! Fold logs, aggregate tables and paired comparisons.
//!
//! Everything printed here is recomputed from [`FoldResult`] records, so a
//! fold log read back from disk yields the same tables as the live run.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentResult, FoldResult, MeanStd, Method};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::error::{Error, Result};

/// Significance level used for the asterisk and the comparison verdicts.
pub const ALPHA: f64 = 0.05;

/// Writes one JSON object per fold, in the order given.
pub fn write_fold_log(path: &Path, results: &[ExperimentResult]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in results.iter().flat_map(|r| &r.fold_results) {
        let line = serde_json::to_string(r).map_err(|e| Error::ResultLog(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_fold_log(path: &Path) -> Result<Vec<FoldResult>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FoldResult = serde_json::from_str(&line)
            .map_err(|e| Error::ResultLog(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Groups fold records by (dataset, method) in order of first appearance
/// and aggregates each group.
pub fn results_from_log(records: Vec<FoldResult>) -> Result<Vec<ExperimentResult>> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Vec<FoldResult>> = HashMap::new();
    for r in records {
        let key = (r.dataset.clone(), r.method.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let method: Method = key.1.parse()?;
            let recs = groups.remove(&key).unwrap_or_default();
            ExperimentResult::from_folds(method, recs)
        })
        .collect()
}

/// A rectangular table of already formatted cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl Table {
    /// Column-aligned plain text; the first column is left aligned, the rest right aligned.
    pub fn to_text(&self) -> String {
        let ncols = self.header.len();
        let mut width = vec![0usize; ncols];
        for row in std::iter::once(&self.header).chain(&self.rows) {
            for (w, cell) in width.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let fmt_row = |row: &[String]| {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = width[i])
                    } else {
                        format!("{c:>w$}", w = width[i])
                    }
                })
                .collect();
            cells.join("  ").trim_end().to_string()
        };
        let mut out = String::new();
        out.push_str(&self.title);
        out.push('\n');
        let head = fmt_row(&self.header);
        out.push_str(&head);
        out.push('\n');
        out.push_str(&"-".repeat(head.chars().count()));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
        for note in &self.notes {
            out.push_str(note);
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = row.iter().map(|c| csv_escape(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `mean ± std` in percent with one decimal.
pub fn percent(m: &MeanStd) -> String {
    format!("{:.1} ± {:.1}", 100.0 * m.mean, 100.0 * m.std)
}

fn lookup<'a>(
    results: &'a [ExperimentResult],
    dataset: &str,
    method: Method,
) -> Option<&'a ExperimentResult> {
    results
        .iter()
        .find(|r| r.dataset == dataset && r.method == method)
}

fn require<'a>(
    results: &'a [ExperimentResult],
    dataset: &str,
    method: Method,
) -> Result<&'a ExperimentResult> {
    lookup(results, dataset, method).ok_or_else(|| {
        Error::ResultLog(format!(
            "no results for method {method} on dataset {dataset}"
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Measure {
    Gmean,
    F1,
}

impl Measure {
    fn of(self, r: &ExperimentResult) -> MeanStd {
        match self {
            Measure::Gmean => r.gmean,
            Measure::F1 => r.f1,
        }
    }

    fn per_rep(self, r: &ExperimentResult) -> Vec<f64> {
        match self {
            Measure::Gmean => r.repetition_gmeans(),
            Measure::F1 => r.repetition_f1s(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Measure::Gmean => "G-mean",
            Measure::F1 => "F1",
        }
    }
}

const MEASURES: [Measure; 2] = [Measure::Gmean, Measure::F1];

fn metric_header(results: &[ExperimentResult], datasets: &[&str]) -> Vec<String> {
    let mut header = vec!["method".to_string()];
    for ds in datasets {
        let shape = results
            .iter()
            .find(|r| r.dataset == *ds)
            .map(|r| format!(" ({}x{})", r.repetitions.len(), r.folds))
            .unwrap_or_default();
        for m in MEASURES {
            header.push(format!("{ds}{shape} {}", m.label()));
        }
    }
    header
}

/// Metric table for `methods` × `datasets`. The best mean of each column is
/// wrapped in brackets; `star(dataset, measure, method)` adds a leading `*`.
fn metric_table(
    title: &str,
    results: &[ExperimentResult],
    datasets: &[&str],
    methods: &[Method],
    star: impl Fn(&str, Measure, Method) -> bool,
) -> Result<Table> {
    let mut rows: Vec<Vec<String>> = methods.iter().map(|m| vec![m.to_string()]).collect();
    for ds in datasets {
        for measure in MEASURES {
            let values = methods
                .iter()
                .map(|&m| require(results, ds, m).map(|r| measure.of(r)))
                .collect::<Result<Vec<_>>>()?;
            let best = values
                .iter()
                .map(|v| round1(v.mean))
                .fold(f64::NEG_INFINITY, f64::max);
            for (i, v) in values.iter().enumerate() {
                let mut cell = percent(v);
                if round1(v.mean) == best {
                    cell = format!("[{cell}]");
                }
                if star(ds, measure, methods[i]) {
                    cell = format!("*{cell}");
                }
                rows[i].push(cell);
            }
        }
    }
    Ok(Table {
        title: title.to_string(),
        header: metric_header(results, datasets),
        rows,
        notes: vec![
            "Values in %, mean ± sample std over repetitions; [..] marks the best mean per column."
                .into(),
        ],
    })
}

fn round1(fraction: f64) -> f64 {
    (1000.0 * fraction).round()
}

/// Methods compared in the label-set table.
pub const LABEL_SET_METHODS: [Method; 3] = [Method::Omega, Method::OmegaTilde, Method::Shift(1.0)];

/// Multipliers of the shift sweep.
pub const SWEEP: [f64; 6] = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5];

/// Methods of the confusion table.
pub const CONFUSION_METHODS: [Method; 3] = [Method::Smote, Method::Shift(1.0), Method::Shift(1.1)];

/// Every method needed for the three tables.
pub fn grid_methods() -> Vec<Method> {
    let mut v = vec![Method::Omega, Method::OmegaTilde, Method::Smote];
    v.extend(SWEEP.iter().map(|&m| Method::Shift(m)));
    v
}

/// G-mean and F1 of the plain, the unique and the shifted label sets.
///
/// The notes report the Wilcoxon test of the shifted set against each of
/// the other two, per dataset and measure.
pub fn label_set_table(results: &[ExperimentResult], datasets: &[&str]) -> Result<Table> {
    let mut table = metric_table(
        "Label sets: regression SVM on omega, omega-tilde and shift:1.0",
        results,
        datasets,
        &LABEL_SET_METHODS,
        |_, _, _| false,
    )?;
    let shifted = Method::Shift(1.0);
    for ds in datasets {
        for other in [Method::Omega, Method::OmegaTilde] {
            for measure in MEASURES {
                let a = require(results, ds, shifted)?;
                let b = require(results, ds, other)?;
                let w = wilcoxon_signed_rank(&measure.per_rep(a), &measure.per_rep(b))?;
                table.notes.push(format!(
                    "{ds}: {shifted} vs {other} on {}: p = {:.4} ({})",
                    measure.label(),
                    w.p_value,
                    verdict(&w)
                ));
            }
        }
    }
    Ok(table)
}

/// SMOTE against the shift sweep.
///
/// Per dataset and measure, the best shift is tested against SMOTE and a
/// significant difference puts `*` on whichever of the two is ahead.
pub fn sweep_table(results: &[ExperimentResult], datasets: &[&str]) -> Result<Table> {
    let mut methods = vec![Method::Smote];
    methods.extend(SWEEP.iter().map(|&m| Method::Shift(m)));

    let mut starred: Vec<(String, Measure, Method)> = Vec::new();
    let mut notes = Vec::new();
    for ds in datasets {
        for measure in MEASURES {
            let smote = require(results, ds, Method::Smote)?;
            let best = SWEEP
                .iter()
                .map(|&m| require(results, ds, Method::Shift(m)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(None::<&ExperimentResult>, |acc, r| match acc {
                    Some(b) if measure.of(b).mean >= measure.of(r).mean => Some(b),
                    _ => Some(r),
                })
                .expect("sweep is non-empty");
            let w = wilcoxon_signed_rank(&measure.per_rep(best), &measure.per_rep(smote))?;
            if w.significant(ALPHA) {
                let winner = if measure.of(best).mean >= measure.of(smote).mean {
                    best.method
                } else {
                    Method::Smote
                };
                starred.push((ds.to_string(), measure, winner));
            }
            notes.push(format!(
                "{ds}: best shift {} vs smote on {}: p = {:.4} ({})",
                best.method,
                measure.label(),
                w.p_value,
                verdict(&w)
            ));
        }
    }
    let mut table = metric_table(
        "SMOTE against the shift sweep",
        results,
        datasets,
        &methods,
        |ds, measure, method| {
            starred
                .iter()
                .any(|(d, m, k)| d == ds && *m == measure && *k == method)
        },
    )?;
    table
        .notes
        .push("* marks a significant difference (two-sided Wilcoxon, 5%) between the best shift and SMOTE.".into());
    table.notes.extend(notes);
    Ok(table)
}

/// Averaged confusion tables, rounded half away from zero.
pub fn confusion_summary_table(results: &[ExperimentResult], datasets: &[&str]) -> Result<Table> {
    let mut rows = Vec::new();
    for ds in datasets {
        for method in CONFUSION_METHODS {
            let r = require(results, ds, method)?;
            let mut row = vec![format!("{ds} {method}")];
            row.extend(r.mean_confusion.rounded().iter().map(|v| v.to_string()));
            rows.push(row);
        }
    }
    Ok(Table {
        title: "Averaged confusion tables (sum over folds, mean over repetitions)".into(),
        header: ["dataset / method", "T-", "F+", "F-", "T+"]
            .map(String::from)
            .to_vec(),
        rows,
        notes: vec![],
    })
}

/// One machine-readable row per result with unrounded aggregates.
pub fn aggregate_csv(results: &[ExperimentResult]) -> String {
    let mut out = String::from(
        "dataset,method,repetitions,folds,seed,gmean_mean,gmean_std,f1_mean,f1_std,t_minus,f_plus,f_minus,t_plus\n",
    );
    for r in results {
        let c = &r.mean_confusion;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_escape(&r.dataset),
            r.method,
            r.repetitions.len(),
            r.folds,
            r.base_seed,
            r.gmean.mean,
            r.gmean.std,
            r.f1.mean,
            r.f1.std,
            c.t_minus,
            c.f_plus,
            c.f_minus,
            c.t_plus
        ));
    }
    out
}

/// One line per result: `dataset method  G-mean ..  F1 ..`.
pub fn summary_lines(results: &[ExperimentResult]) -> String {
    let rows = results
        .iter()
        .map(|r| {
            let [tm, fp, fm, tp] = r.mean_confusion.rounded();
            vec![
                r.dataset.clone(),
                r.method.to_string(),
                format!("{}x{}", r.repetitions.len(), r.folds),
                percent(&r.gmean),
                percent(&r.f1),
                format!("{tm} {fp} {fm} {tp}"),
            ]
        })
        .collect();
    Table {
        title: "Results".into(),
        header: [
            "dataset",
            "method",
            "R x k",
            "G-mean %",
            "F1 %",
            "T- F+ F- T+",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        notes: vec![],
    }
    .to_text()
}

fn verdict(w: &WilcoxonResult) -> &'static str {
    if w.significant(ALPHA) {
        "significant at 5%"
    } else {
        "not significant at 5%"
    }
}

/// Paired Wilcoxon tests of two results over their repetition metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset: String,
    pub a: Method,
    pub b: Method,
    pub gmean: (MeanStd, MeanStd, WilcoxonResult),
    pub f1: (MeanStd, MeanStd, WilcoxonResult),
}

/// Requires both results to share dataset, repetition count, fold count and seed.
pub fn compare(a: &ExperimentResult, b: &ExperimentResult) -> Result<Comparison> {
    let check = |what: &str, x: String, y: String| {
        if x == y {
            Ok(())
        } else {
            Err(Error::ResultLog(format!(
                "cannot compare results with different {what}: {x} vs {y}"
            )))
        }
    };
    check("datasets", a.dataset.clone(), b.dataset.clone())?;
    check(
        "repetition counts",
        a.repetitions.len().to_string(),
        b.repetitions.len().to_string(),
    )?;
    check("fold counts", a.folds.to_string(), b.folds.to_string())?;
    check("seeds", a.base_seed.to_string(), b.base_seed.to_string())?;
    Ok(Comparison {
        dataset: a.dataset.clone(),
        a: a.method,
        b: b.method,
        gmean: (
            a.gmean,
            b.gmean,
            wilcoxon_signed_rank(&a.repetition_gmeans(), &b.repetition_gmeans())?,
        ),
        f1: (
            a.f1,
            b.f1,
            wilcoxon_signed_rank(&a.repetition_f1s(), &b.repetition_f1s())?,
        ),
    })
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {} vs {}", self.dataset, self.a, self.b)?;
        for (name, (ma, mb, w)) in [("G-mean", &self.gmean), ("F1", &self.f1)] {
            let (mut sa, mut sb) = (percent(ma), percent(mb));
            // The asterisk goes on the better mean when the difference is significant.
            if w.significant(ALPHA) {
                if ma.mean >= mb.mean {
                    sa = format!("*{sa}");
                } else {
                    sb = format!("*{sb}");
                }
            }
            writeln!(
                f,
                "  {name:<6}  {}: {sa}  {}: {sb}  W = {}  p = {:.4}  {}",
                self.a,
                self.b,
                w.statistic,
                w.p_value,
                verdict(w)
            )?;
        }
        Ok(())
    }
}
