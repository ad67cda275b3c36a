//! Two-sided Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the null distribution is counted exactly.
pub const EXACT_MAX_N: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PValueMethod {
    Exact,
    Normal,
    /// Every difference was zero; `p = 1`.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)`.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method: PValueMethod,
}

impl WilcoxonResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Tests `a - b`. Zero differences are dropped and tied absolute
/// differences share their average rank. The p-value is exact for up to
/// [`EXACT_MAX_N`] remaining pairs and otherwise uses the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let ranked = rank_differences(a, b)?;
    let method = if ranked.doubled_ranks.is_empty() {
        PValueMethod::Degenerate
    } else if ranked.doubled_ranks.len() <= EXACT_MAX_N {
        PValueMethod::Exact
    } else {
        PValueMethod::Normal
    };
    Ok(finish(ranked, method))
}

/// Like [`wilcoxon_signed_rank`] but always uses the normal approximation.
pub fn wilcoxon_signed_rank_normal(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    let ranked = rank_differences(a, b)?;
    let method = if ranked.doubled_ranks.is_empty() {
        PValueMethod::Degenerate
    } else {
        PValueMethod::Normal
    };
    Ok(finish(ranked, method))
}

struct Ranked {
    /// Ranks times two, so average ranks of ties stay integral.
    doubled_ranks: Vec<u64>,
    positive: Vec<bool>,
    tie_sizes: Vec<usize>,
}

fn rank_differences(a: &[f64], b: &[f64]) -> Result<Ranked> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::TooFewSamples(
            "Wilcoxon test needs at least one pair".into(),
        ));
    }
    let mut diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("paired differences"));
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));

    let n = diffs.len();
    let mut doubled_ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && diffs[j].abs() == diffs[i].abs() {
            j += 1;
        }
        // Ranks i+1 ..= j share their mean (i + 1 + j) / 2.
        for r in &mut doubled_ranks[i..j] {
            *r = (i + 1 + j) as u64;
        }
        if j - i > 1 {
            tie_sizes.push(j - i);
        }
        i = j;
    }
    Ok(Ranked {
        doubled_ranks,
        positive: diffs.iter().map(|d| *d > 0.0).collect(),
        tie_sizes,
    })
}

fn finish(r: Ranked, method: PValueMethod) -> WilcoxonResult {
    let n = r.doubled_ranks.len();
    let w_plus2: u64 = r
        .doubled_ranks
        .iter()
        .zip(&r.positive)
        .filter(|(_, &p)| p)
        .map(|(k, _)| k)
        .sum();
    let total2: u64 = r.doubled_ranks.iter().sum();
    let w_minus2 = total2 - w_plus2;
    let stat2 = w_plus2.min(w_minus2);

    let p_value = match method {
        PValueMethod::Degenerate => 1.0,
        PValueMethod::Exact => {
            let counts = null_counts(&r.doubled_ranks);
            let below: f64 = counts[..=stat2 as usize].iter().sum();
            (2.0 * below / 2f64.powi(n as i32)).min(1.0)
        }
        PValueMethod::Normal => {
            let nf = n as f64;
            let mean = nf * (nf + 1.0) / 4.0;
            let ties: f64 = r.tie_sizes.iter().map(|&t| (t * t * t - t) as f64).sum();
            let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
            if var <= 0.0 {
                1.0
            } else {
                let z = ((w_plus2 as f64 / 2.0 - mean).abs() - 0.5).max(0.0) / var.sqrt();
                let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
                (2.0 * (1.0 - std_normal.cdf(z))).min(1.0)
            }
        }
    };
    WilcoxonResult {
        w_plus: w_plus2 as f64 / 2.0,
        w_minus: w_minus2 as f64 / 2.0,
        statistic: stat2 as f64 / 2.0,
        p_value,
        n_effective: n,
        method,
    }
}

/// Number of sign patterns giving each value of the doubled `W+` statistic.
fn null_counts(doubled_ranks: &[u64]) -> Vec<f64> {
    let total: usize = doubled_ranks.iter().sum::<u64>() as usize;
    let mut counts = vec![0.0; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}
