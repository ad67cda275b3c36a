//! Synthetic minority oversampling (SMOTE) up to exact class balance.
//!
//! Each synthetic point starts from a uniformly drawn minority sample `x`,
//! picks one of its `k` nearest minority neighbours `y` (Euclidean, ties
//! broken by lower index) and sets coordinate `i` to `x_i + r_i (y_i - x_i)`
//! with an independent `r_i ~ U[0, 1]`. [`Formula::Extrapolate`] uses
//! `x_i + r_i (x_i - y_i)` instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formula {
    /// `x + r (y - x)`, a point on the segment towards the neighbour.
    Interpolate,
    /// `x + r (x - y)`, a point on the segment pointing away from the neighbour.
    Extrapolate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoteParams {
    pub k: usize,
    pub seed: u64,
    pub formula: Formula,
}

impl Default for SmoteParams {
    fn default() -> Self {
        SmoteParams {
            k: 10,
            seed: 0,
            formula: Formula::Interpolate,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `min(k, n - 1)` nearest minority samples to `minority[index]`, itself excluded.
pub fn knn_minority(minority: &FeatureMatrix, index: usize, k: usize) -> Result<Vec<usize>> {
    let n = minority.rows();
    if n < 2 {
        return Err(Error::TooFewSamples(format!(
            "SMOTE needs at least 2 minority samples, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("SMOTE needs k >= 1".into()));
    }
    let x = minority.row(index);
    let mut cand: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != index)
        .map(|j| (sq_dist(x, minority.row(j)), j))
        .collect();
    // Stable on (distance, index): equal distances keep the lower index first.
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cand.truncate(k.min(n - 1));
    Ok(cand.into_iter().map(|(_, j)| j).collect())
}

/// Generates `majority_count - minority.rows()` synthetic minority samples.
pub fn smote_balance(
    minority: &FeatureMatrix,
    majority_count: usize,
    params: &SmoteParams,
) -> Result<FeatureMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    smote_with(minority, majority_count, params, &mut rng, |rng| {
        rng.random::<f64>()
    })
}

pub(crate) fn smote_with<R: Rng>(
    minority: &FeatureMatrix,
    majority_count: usize,
    params: &SmoteParams,
    rng: &mut R,
    mut ratio: impl FnMut(&mut R) -> f64,
) -> Result<FeatureMatrix> {
    let n = minority.rows();
    if majority_count < n {
        return Err(Error::InvalidParameter(format!(
            "majority count {majority_count} is smaller than minority count {n}"
        )));
    }
    let deficit = majority_count - n;
    let mut out = FeatureMatrix::with_cols(minority.cols());
    if deficit == 0 {
        return Ok(out);
    }
    let neighbours = (0..n)
        .map(|i| knn_minority(minority, i, params.k))
        .collect::<Result<Vec<_>>>()?;

    let mut buf = vec![0.0; minority.cols()];
    for _ in 0..deficit {
        let base = rng.random_range(0..n);
        let nb = &neighbours[base];
        let other = nb[rng.random_range(0..nb.len())];
        let x = minority.row(base);
        let y = minority.row(other);
        for (i, v) in buf.iter_mut().enumerate() {
            let r = ratio(rng);
            *v = match params.formula {
                Formula::Interpolate => x[i] + r * (y[i] - x[i]),
                Formula::Extrapolate => x[i] + r * (x[i] - y[i]),
            };
        }
        out.push_row(&buf)?;
    }
    Ok(out)
}
