//! Oracles and property checks shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::path::PathBuf;

use labelshift::eval::{stratified_kfold, ExperimentConfig};
use labelshift::smote::knn_minority;
use labelshift::{
    assign_random_targets, run_experiment, shift_targets, smote_balance, Dataset, FeatureMatrix,
    Label, Method, SmoteParams,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn data_dir() -> PathBuf {
    std::env::var_os(labelshift::DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

// ---------------------------------------------------------------------------
// Brute-force primal oracle for tiny SVMs.
//
// The primal is piecewise quadratic in z = (w, b). Each sample sits on one
// linear piece of its loss or exactly on a kink. For every assignment of
// samples to pieces and kinks, minimise the piece's quadratic subject to the
// kink equalities by solving the KKT system. The true optimum is the minimiser
// for its own assignment, and every candidate is a feasible point, so the
// smallest true primal over all candidates is the optimum.
// ---------------------------------------------------------------------------

/// One sample's contribution on a piece: `coef * (a . z) + constant`, or the
/// equality `a . z = rhs` when on a kink.
enum Piece {
    Linear { coef: f64 },
    Kink { rhs: f64 },
    Zero,
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimiser of `1/2 |w|^2 + sum_linear coef_i (a_i . z)` subject to kink equalities.
fn piece_minimiser(
    rows: &[Vec<f64>],
    pieces: &[Piece],
    d: usize,
    regularized_bias: bool,
) -> Option<Vec<f64>> {
    let nz = d + 1;
    let kinks: Vec<(usize, f64)> = pieces
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match p {
            Piece::Kink { rhs } => Some((i, *rhs)),
            _ => None,
        })
        .collect();
    let size = nz + kinks.len();
    let mut m = vec![vec![0.0; size]; size];
    let mut rhs = vec![0.0; size];
    for k in 0..d {
        m[k][k] = 1.0;
    }
    if regularized_bias {
        m[d][d] = 1.0;
    }
    for (i, p) in pieces.iter().enumerate() {
        if let Piece::Linear { coef } = p {
            for k in 0..nz {
                rhs[k] -= coef * rows[i][k];
            }
        }
    }
    for (r, (i, v)) in kinks.iter().enumerate() {
        for k in 0..nz {
            m[nz + r][k] = rows[*i][k];
            m[k][nz + r] = rows[*i][k];
        }
        rhs[nz + r] = *v;
    }
    solve_dense(m, rhs).map(|s| s[..nz].to_vec())
}

fn augmented(x: &FeatureMatrix) -> Vec<Vec<f64>> {
    x.iter_rows()
        .map(|r| {
            let mut v = r.to_vec();
            v.push(1.0);
            v
        })
        .collect()
}

fn score(z: &[f64], row: &[f64]) -> f64 {
    z.iter().zip(row).map(|(a, b)| a * b).sum()
}

fn half_norm(z: &[f64], d: usize, regularized_bias: bool) -> f64 {
    let mut s: f64 = z[..d].iter().map(|v| v * v).sum();
    if regularized_bias {
        s += z[d] * z[d];
    }
    0.5 * s
}

fn for_each_assignment(n: usize, states: usize, mut f: impl FnMut(&[usize])) {
    let mut code = vec![0usize; n];
    loop {
        f(&code);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            code[i] += 1;
            if code[i] < states {
                break;
            }
            code[i] = 0;
            i += 1;
        }
    }
}

/// Optimal value of `1/2 |w|^2 + C sum max(0, 1 - y (w.x + b))`.
pub fn svc_oracle(x: &FeatureMatrix, y: &[Label], c: f64, regularized_bias: bool) -> f64 {
    let rows = augmented(x);
    let d = x.cols();
    let primal = |z: &[f64]| {
        half_norm(z, d, regularized_bias)
            + c * rows
                .iter()
                .zip(y)
                .map(|(r, l)| (1.0 - l.sign() * score(z, r)).max(0.0))
                .sum::<f64>()
    };
    let mut best = f64::INFINITY;
    for_each_assignment(rows.len(), 3, |code| {
        let pieces: Vec<Piece> = code
            .iter()
            .zip(y)
            .map(|(&s, l)| match s {
                0 => Piece::Zero,
                1 => Piece::Linear {
                    coef: -c * l.sign(),
                },
                _ => Piece::Kink { rhs: l.sign() },
            })
            .collect();
        if let Some(z) = piece_minimiser(&rows, &pieces, d, regularized_bias) {
            best = best.min(primal(&z));
        }
    });
    best
}

/// Optimal value of `1/2 |w|^2 + C sum max(0, |t - (w.x + b)| - eps)`.
pub fn svr_oracle(x: &FeatureMatrix, t: &[f64], c: f64, eps: f64, regularized_bias: bool) -> f64 {
    let rows = augmented(x);
    let d = x.cols();
    let primal = |z: &[f64]| {
        half_norm(z, d, regularized_bias)
            + c * rows
                .iter()
                .zip(t)
                .map(|(r, t)| ((t - score(z, r)).abs() - eps).max(0.0))
                .sum::<f64>()
    };
    let mut best = f64::INFINITY;
    for_each_assignment(rows.len(), 5, |code| {
        let pieces: Vec<Piece> = code
            .iter()
            .zip(t)
            .map(|(&s, &t)| match s {
                0 => Piece::Zero,
                // t - f - eps > 0
                1 => Piece::Linear { coef: -c },
                // f - t - eps > 0
                2 => Piece::Linear { coef: c },
                3 => Piece::Kink { rhs: t - eps },
                _ => Piece::Kink { rhs: t + eps },
            })
            .collect();
        if let Some(z) = piece_minimiser(&rows, &pieces, d, regularized_bias) {
            best = best.min(primal(&z));
        }
    });
    best
}

// ---------------------------------------------------------------------------
// Wilcoxon enumeration oracle.
// ---------------------------------------------------------------------------

/// Two-sided p-value by enumerating all `2^n` sign patterns of the non-zero differences.
pub fn wilcoxon_enumeration(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return 1.0;
    }
    let ranks: Vec<f64> = d
        .iter()
        .map(|v| {
            let less = d.iter().filter(|u| u.abs() < v.abs()).count() as f64;
            let equal = d.iter().filter(|u| u.abs() == v.abs()).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

// ---------------------------------------------------------------------------
// Property checks.
// ---------------------------------------------------------------------------

pub fn labels(n_minus: usize, n_plus: usize, interleave_seed: u64) -> Vec<Label> {
    // Deterministic interleaving so class order is not always "minority first".
    let mut v: Vec<Label> = Vec::with_capacity(n_minus + n_plus);
    let (mut a, mut b) = (n_minus, n_plus);
    let mut s = interleave_seed | 1;
    while a + b > 0 {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        let take_minority = b == 0 || (a > 0 && (s % (a + b) as u64) < (a as u64));
        if take_minority {
            v.push(Label::Minority);
            a -= 1;
        } else {
            v.push(Label::Majority);
            b -= 1;
        }
    }
    v
}

pub fn shift_case() -> impl Strategy<Value = (usize, usize, u64, f64)> {
    (1usize..40, 1usize..60)
        .prop_map(|(a, b)| (a.min(b), a.max(b)))
        .prop_flat_map(|(nm, np)| {
            let min = nm as f64 / np as f64;
            (Just(nm), Just(np), any::<u64>(), min..min + 2.0)
        })
}

/// Bijectivity, sign and symmetry of shifted target sets.
pub fn check_label_shift(nm: usize, np: usize, seed: u64, m: f64) -> Result<(), TestCaseError> {
    let lab = labels(nm, np, seed);
    let base = assign_random_targets(&lab, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let shifted = shift_targets(&base, m).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let dm = m * np as f64 - nm as f64;

    // Signs follow the labels; positives are untouched.
    for ((l, t0), t) in lab.iter().zip(&base.targets).zip(&shifted.targets) {
        match l {
            Label::Minority => {
                prop_assert!(*t0 < 0.0 && *t < 0.0);
                prop_assert!((t - (t0 - dm)).abs() < 1e-9);
            }
            Label::Majority => {
                prop_assert!(*t0 > 0.0);
                prop_assert_eq!(t0, t);
            }
        }
    }
    // Bijection onto {-nm..-1} u {1..np} before the shift.
    let mut sorted = base.targets.clone();
    sorted.sort_by(f64::total_cmp);
    let expected: Vec<f64> = (1..=nm)
        .rev()
        .map(|v| -(v as f64))
        .chain((1..=np).map(|v| v as f64))
        .collect();
    prop_assert_eq!(sorted, expected);
    // Symmetric range at m = 1.
    let sym = shift_targets(&base, 1.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let lo = sym.targets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sym
        .targets
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    prop_assert_eq!(lo, -(np as f64));
    prop_assert_eq!(hi, np as f64);
    Ok(())
}

pub fn smote_case() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, usize, u64)> {
    (2usize..12, 1usize..4).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
            n..n + 25,
            1usize..12,
            any::<u64>(),
        )
    })
}

/// Exact balance, and every synthetic point inside the box spanned by a
/// minority sample and one of its `k` nearest minority neighbours.
pub fn check_smote(
    rows: &[Vec<f64>],
    majority: usize,
    k: usize,
    seed: u64,
) -> Result<(), TestCaseError> {
    let minority = FeatureMatrix::from_rows(rows).unwrap();
    let params = SmoteParams {
        k,
        seed,
        ..Default::default()
    };
    let synth = smote_balance(&minority, majority, &params)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(synth.rows() + minority.rows(), majority);
    let neighbours: Vec<Vec<usize>> = (0..minority.rows())
        .map(|i| knn_minority(&minority, i, k).unwrap())
        .collect();
    for s in synth.iter_rows() {
        let inside = (0..minority.rows()).any(|a| {
            neighbours[a].iter().any(|&b| {
                s.iter().enumerate().all(|(i, v)| {
                    let (p, q) = (minority.row(a)[i], minority.row(b)[i]);
                    *v >= p.min(q) - 1e-12 && *v <= p.max(q) + 1e-12
                })
            })
        });
        prop_assert!(inside, "synthetic {:?} outside every neighbour box", s);
    }
    Ok(())
}

pub fn stratification_case() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..21).prop_flat_map(|k| (k..k + 60, k..k + 120, Just(k), any::<u64>()))
}

/// Folds partition the samples; per-class and total fold sizes differ by at most one.
pub fn check_stratification(
    nm: usize,
    np: usize,
    k: usize,
    seed: u64,
) -> Result<(), TestCaseError> {
    let lab = labels(nm, np, seed);
    let folds = stratified_kfold(&lab, k, seed).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(folds.len(), k);
    let mut seen = vec![0u8; lab.len()];
    for f in &folds {
        for &i in f {
            seen[i] += 1;
        }
    }
    prop_assert!(seen.iter().all(|&c| c == 1));
    let spread = |v: Vec<usize>| v.iter().max().unwrap() - v.iter().min().unwrap();
    for class in [Label::Minority, Label::Majority] {
        let counts: Vec<usize> = folds
            .iter()
            .map(|f| f.iter().filter(|&&i| lab[i] == class).count())
            .collect();
        prop_assert!(spread(counts) <= 1);
    }
    prop_assert!(spread(folds.iter().map(Vec::len).collect()) <= 1);
    Ok(())
}

pub fn pipeline_case() -> impl Strategy<Value = (Vec<Vec<f64>>, usize, u64, usize)> {
    (6usize..14, 3usize..12).prop_flat_map(|(nm, extra)| {
        // The majority keeps a margin so every training fold stays imbalanced the same way.
        let n = 2 * nm + extra;
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), n),
            Just(nm),
            any::<u64>(),
            0usize..5,
        )
    })
}

/// Two runs with the same base seed give identical fold records.
pub fn check_pipeline_determinism(
    rows: &[Vec<f64>],
    nm: usize,
    seed: u64,
    which: usize,
) -> Result<(), TestCaseError> {
    let lab = labels(nm, rows.len() - nm, seed);
    // Push the classes apart a little so the problems are not pure noise.
    let shifted: Vec<Vec<f64>> = rows
        .iter()
        .zip(&lab)
        .map(|(r, l)| r.iter().map(|v| v - l.sign()).collect())
        .collect();
    let ds = Dataset::new("prop", FeatureMatrix::from_rows(&shifted).unwrap(), lab).unwrap();
    let method = [
        Method::Omega,
        Method::OmegaTilde,
        Method::Shift(1.0),
        Method::Shift(1.3),
        Method::Smote,
    ][which];
    let config = ExperimentConfig {
        repetitions: 2,
        folds: 3,
        base_seed: seed,
        ..Default::default()
    };
    let a = run_experiment(&ds, method, &config).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let b = run_experiment(&ds, method, &config).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&a.fold_results, &b.fold_results);
    prop_assert_eq!(a.gmean, b.gmean);
    Ok(())
}
