//! Dual coordinate descent, one variable at a time, in a random order per
//! epoch. There is no equality constraint, so the bias is either absent or
//! learned as the weight of an extra constant feature of value 1 (and is
//! then regularised like every other weight).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::{dot, FeatureMatrix};

pub(super) struct Solution {
    pub dual: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs: usize,
    pub violation: f64,
    /// Minimisation-form dual objective after each epoch.
    pub trace: Vec<f64>,
    pub converged: bool,
}

pub(super) struct Settings {
    pub c: f64,
    pub with_bias: bool,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

struct State {
    w: Vec<f64>,
    b: f64,
    aug: f64,
}

impl State {
    fn new(d: usize, with_bias: bool) -> Self {
        State {
            w: vec![0.0; d],
            b: 0.0,
            aug: if with_bias { 1.0 } else { 0.0 },
        }
    }

    fn score(&self, xi: &[f64]) -> f64 {
        dot(&self.w, xi) + self.b * self.aug
    }

    fn step(&mut self, xi: &[f64], scale: f64) {
        for (w, x) in self.w.iter_mut().zip(xi) {
            *w += scale * x;
        }
        self.b += scale * self.aug;
    }

    fn half_sq_norm(&self) -> f64 {
        0.5 * (dot(&self.w, &self.w) + self.aug * self.b * self.b)
    }
}

/// Hinge-loss classifier dual: `min 1/2 |w|^2 - sum(alpha)`, `0 <= alpha <= C`.
pub(super) fn solve_svc(x: &FeatureMatrix, y: &[f64], s: &Settings) -> Solution {
    let n = x.rows();
    let mut st = State::new(x.cols(), s.with_bias);
    let qd: Vec<f64> = x.iter_rows().map(|r| dot(r, r) + st.aug).collect();
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut trace = Vec::new();
    let mut violation = f64::INFINITY;
    let mut epochs = 0;

    while epochs < s.max_epochs {
        order.shuffle(&mut rng);
        violation = 0.0;
        for &i in &order {
            let xi = x.row(i);
            let g = y[i] * st.score(xi) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= s.c {
                g.max(0.0)
            } else {
                g
            };
            violation = f64::max(violation, pg.abs());
            if pg == 0.0 {
                continue;
            }
            let old = alpha[i];
            alpha[i] = if qd[i] > 0.0 {
                (old - g / qd[i]).clamp(0.0, s.c)
            } else if g < 0.0 {
                s.c
            } else {
                0.0
            };
            let delta = (alpha[i] - old) * y[i];
            if delta != 0.0 {
                st.step(xi, delta);
            }
        }
        epochs += 1;
        trace.push(st.half_sq_norm() - alpha.iter().sum::<f64>());
        if violation <= s.tolerance {
            break;
        }
    }

    Solution {
        dual: alpha,
        weights: st.w,
        bias: st.b * st.aug,
        epochs,
        violation,
        trace,
        converged: violation <= s.tolerance,
    }
}

/// Epsilon-insensitive regressor dual over `beta = alpha+ - alpha-`:
/// `min 1/2 |w|^2 - t'beta + eps * |beta|_1`, `-C <= beta <= C`.
pub(super) fn solve_svr(x: &FeatureMatrix, t: &[f64], epsilon: f64, s: &Settings) -> Solution {
    let n = x.rows();
    let mut st = State::new(x.cols(), s.with_bias);
    let qd: Vec<f64> = x.iter_rows().map(|r| dot(r, r) + st.aug).collect();
    let mut beta = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut trace = Vec::new();
    let mut violation = f64::INFINITY;
    let mut epochs = 0;
    let c = s.c;

    while epochs < s.max_epochs {
        order.shuffle(&mut rng);
        violation = 0.0;
        for &i in &order {
            let xi = x.row(i);
            let g = st.score(xi) - t[i];
            let gp = g + epsilon;
            let gn = g - epsilon;
            let b = beta[i];
            let v = if b == 0.0 {
                (-gp).max(gn).max(0.0)
            } else if b >= c {
                gp.max(0.0)
            } else if b <= -c {
                (-gn).max(0.0)
            } else if b > 0.0 {
                gp.abs()
            } else {
                gn.abs()
            };
            violation = violation.max(v);
            if v == 0.0 {
                continue;
            }
            let h = qd[i];
            let new = if h > 0.0 {
                let z = if gp < h * b {
                    -gp / h
                } else if gn > h * b {
                    -gn / h
                } else {
                    -b
                };
                (b + z).clamp(-c, c)
            } else if gn > 0.0 {
                -c
            } else if gp < 0.0 {
                c
            } else {
                0.0
            };
            if new != b {
                beta[i] = new;
                st.step(xi, new - b);
            }
        }
        epochs += 1;
        let lin: f64 = beta
            .iter()
            .zip(t)
            .map(|(b, t)| epsilon * b.abs() - t * b)
            .sum();
        trace.push(st.half_sq_norm() + lin);
        if violation <= s.tolerance {
            break;
        }
    }

    Solution {
        dual: beta,
        weights: st.w,
        bias: st.b * st.aug,
        epochs,
        violation,
        trace,
        converged: violation <= s.tolerance,
    }
}
