use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Label;
use crate::error::{Error, Result};

/// Splits sample indices into `k` disjoint test folds preserving the class ratio.
///
/// Each class is shuffled and dealt round-robin over the folds; the dealing
/// position carries over from one class to the next, so per-fold class counts
/// are within one of `n_class / k` and fold sizes are within one of `n / k`.
/// Indices inside a fold are sorted.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::with_capacity(labels.len() / k + 1); k];
    let mut next = 0usize;
    for class in [Label::Minority, Label::Majority] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::TooFewSamples(format!(
                "class {} has {} samples, fewer than {k} folds",
                class.as_i8(),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Sorted complement of `test` in `0..n`.
pub fn training_indices(n: usize, test: &[usize]) -> Vec<usize> {
    let mut in_test = vec![false; n];
    for &i in test {
        in_test[i] = true;
    }
    (0..n).filter(|&i| !in_test[i]).collect()
}
