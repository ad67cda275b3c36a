//! Sequential minimal optimisation for the linear-kernel dual with an
//! unregularised bias (equality constraint `sum(y_v * alpha_v) = 0`).
//!
//! The dual is stated over "variables" that each point at a sample, carry a
//! sign `y_v` and a linear coefficient `p_v`:
//!
//! ```text
//! min_alpha  1/2 alpha' Q alpha + p' alpha,   Q_uv = y_u y_v <x_s(u), x_s(v)>
//! s.t.       0 <= alpha_v <= C,  sum_v y_v alpha_v = 0
//! ```
//!
//! Classification uses one variable per sample with `p = -1`; regression uses
//! two (`y = +1, p = eps - t` and `y = -1, p = eps + t`). Working-set
//! selection is the second-order rule used by LIBSVM, and so is shrinking.
//!
//! The primal weight vector `w = sum_v y_v alpha_v x_s(v)` is kept explicitly.
//! That makes every gradient `y_v <w, x_s(v)> + p_v` recoverable in O(d), so
//! shrunk variables are simply dropped and recomputed when they come back.
//! For up to [`GRAM_MAX_SAMPLES`] samples the Gram matrix is cached.

use crate::matrix::{dot, FeatureMatrix};

const TAU: f64 = 1e-12;

/// Largest sample count whose Gram matrix (`n * n` doubles) is cached.
const GRAM_MAX_SAMPLES: usize = 2500;

pub(super) struct Variables {
    pub sample: Vec<usize>,
    pub sign: Vec<f64>,
    pub linear: Vec<f64>,
}

pub(super) struct Solution {
    pub alpha: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: u64,
    pub violation: f64,
    /// Minimisation-form dual objective after each completed epoch, then the final value.
    pub trace: Vec<f64>,
    pub converged: bool,
}

struct Problem<'a> {
    x: &'a FeatureMatrix,
    vars: &'a Variables,
    c: f64,
    gram: Option<Vec<f64>>,
}

impl Problem<'_> {
    fn kernel(&self, a: usize, b: usize) -> f64 {
        match &self.gram {
            Some(g) => g[a * self.x.rows() + b],
            None => dot(self.x.row(a), self.x.row(b)),
        }
    }

    fn in_up(&self, alpha: f64, y: f64) -> bool {
        if y > 0.0 {
            alpha < self.c
        } else {
            alpha > 0.0
        }
    }

    fn in_low(&self, alpha: f64, y: f64) -> bool {
        if y > 0.0 {
            alpha > 0.0
        } else {
            alpha < self.c
        }
    }

    /// Gradient of variable `t` recomputed from the primal weights.
    fn fresh_gradient(&self, w: &[f64], t: usize) -> f64 {
        self.vars.sign[t] * dot(w, self.x.row(self.vars.sample[t])) + self.vars.linear[t]
    }

    /// `max_{up} -y G` and `max_{low} y G` over the active set.
    fn extremes(&self, active: &[usize], alpha: &[f64], grad: &[f64]) -> (f64, f64) {
        let y = &self.vars.sign;
        let (mut g1, mut g2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &t in active {
            if self.in_up(alpha[t], y[t]) {
                g1 = g1.max(-y[t] * grad[t]);
            }
            if self.in_low(alpha[t], y[t]) {
                g2 = g2.max(y[t] * grad[t]);
            }
        }
        (g1, g2)
    }

    /// A variable at a bound whose gradient pushes it further out cannot move
    /// while the current extremes hold.
    fn can_shrink(&self, alpha: f64, y: f64, g: f64, gmax1: f64, gmax2: f64) -> bool {
        if alpha >= self.c {
            if y > 0.0 {
                -g > gmax1
            } else {
                -g > gmax2
            }
        } else if alpha <= 0.0 {
            if y > 0.0 {
                g > gmax2
            } else {
                g > gmax1
            }
        } else {
            false
        }
    }
}

/// Minimisation-form dual objective `1/2 |w|^2 + p' alpha`.
fn objective(w: &[f64], alpha: &[f64], linear: &[f64]) -> f64 {
    0.5 * dot(w, w) + dot(alpha, linear)
}

pub(super) fn solve(
    x: &FeatureMatrix,
    vars: &Variables,
    c: f64,
    tolerance: f64,
    max_iterations: u64,
    epoch_len: u64,
) -> Solution {
    let n = x.rows();
    let d = x.cols();
    let l = vars.sample.len();
    let gram = (n <= GRAM_MAX_SAMPLES).then(|| {
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let v = dot(x.row(a), x.row(b));
                g[a * n + b] = v;
                g[b * n + a] = v;
            }
        }
        g
    });
    let pb = Problem { x, vars, c, gram };
    let qd: Vec<f64> = vars.sample.iter().map(|&s| pb.kernel(s, s)).collect();

    let y = &vars.sign;
    let mut alpha = vec![0.0; l];
    let mut grad = vars.linear.clone();
    let mut w = vec![0.0; d];
    let mut kernel_buf = vec![0.0; n];

    let mut active: Vec<usize> = (0..l).collect();
    let shrink_period = l.min(1000);
    let mut countdown = shrink_period;
    let mut unshrunk = false;

    let mut trace = Vec::new();
    let mut iterations = 0u64;
    let mut violation;
    let mut converged = false;

    let restore = |active: &mut Vec<usize>, grad: &mut [f64], w: &[f64]| {
        if active.len() < l {
            let mut is_active = vec![false; l];
            for &t in active.iter() {
                is_active[t] = true;
            }
            for t in (0..l).filter(|&t| !is_active[t]) {
                grad[t] = pb.fresh_gradient(w, t);
            }
            *active = (0..l).collect();
        }
    };

    loop {
        countdown -= 1;
        if countdown == 0 {
            countdown = shrink_period;
            let (g1, g2) = pb.extremes(&active, &alpha, &grad);
            if !unshrunk && g1 + g2 <= 10.0 * tolerance {
                unshrunk = true;
                restore(&mut active, &mut grad, &w);
            }
            active.retain(|&t| !pb.can_shrink(alpha[t], y[t], grad[t], g1, g2));
        }

        let mut selected = select_pair(&pb, &active, &alpha, &grad, &qd, &mut kernel_buf);
        if (selected.pair.is_none() || selected.violation < tolerance) && active.len() < l {
            // Optimal on the active set only: bring everything back and look again.
            restore(&mut active, &mut grad, &w);
            selected = select_pair(&pb, &active, &alpha, &grad, &qd, &mut kernel_buf);
            countdown = 1;
        }
        violation = selected.violation;
        if selected.pair.is_none() || violation < tolerance {
            converged = true;
            break;
        }
        if iterations >= max_iterations {
            break;
        }
        let (i, j) = selected.pair.unwrap();
        let (si, sj) = (vars.sample[i], vars.sample[j]);

        let q_ij = y[i] * y[j] * pb.kernel(si, sj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ai, aj) = pair_update(
            alpha[i],
            alpha[j],
            grad[i],
            grad[j],
            qd[i],
            qd[j],
            q_ij,
            y[i] != y[j],
            c,
        );
        alpha[i] = ai;
        alpha[j] = aj;

        let di = (ai - old_i) * y[i];
        let dj = (aj - old_j) * y[j];
        let (xi, xj) = (x.row(si), x.row(sj));
        for k in 0..d {
            w[k] += di * xi[k] + dj * xj[k];
        }
        for &t in &active {
            let s = vars.sample[t];
            grad[t] += y[t] * (di * pb.kernel(si, s) + dj * pb.kernel(sj, s));
        }

        iterations += 1;
        if iterations % epoch_len == 0 {
            trace.push(objective(&w, &alpha, &vars.linear));
        }
    }
    restore(&mut active, &mut grad, &w);
    trace.push(objective(&w, &alpha, &vars.linear));

    let bias = -rho(&alpha, &grad, y, c);
    Solution {
        alpha,
        weights: w,
        bias,
        iterations,
        violation: violation.max(0.0),
        trace,
        converged,
    }
}

struct Selection {
    pair: Option<(usize, usize)>,
    /// `max_up(-y G) + max_low(y G)` over the active set.
    violation: f64,
}

/// LIBSVM's second-order working-set selection restricted to `active`.
fn select_pair(
    pb: &Problem<'_>,
    active: &[usize],
    alpha: &[f64],
    grad: &[f64],
    qd: &[f64],
    kernel_buf: &mut [f64],
) -> Selection {
    let y = &pb.vars.sign;
    let mut gmax = f64::NEG_INFINITY;
    let mut i_sel = None;
    for &t in active {
        if pb.in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
            gmax = -y[t] * grad[t];
            i_sel = Some(t);
        }
    }
    let Some(i) = i_sel else {
        return Selection {
            pair: None,
            violation: 0.0,
        };
    };

    let si = pb.vars.sample[i];
    let kernel_row: &[f64] = match &pb.gram {
        Some(g) => {
            let n = pb.x.rows();
            &g[si * n..(si + 1) * n]
        }
        None => {
            let xi = pb.x.row(si);
            for (s, k) in kernel_buf.iter_mut().enumerate() {
                *k = dot(xi, pb.x.row(s));
            }
            kernel_buf
        }
    };

    let mut gmax2 = f64::NEG_INFINITY;
    let mut j_sel = None;
    let mut obj_diff_min = f64::INFINITY;
    for &t in active {
        if !pb.in_low(alpha[t], y[t]) {
            continue;
        }
        let yg = y[t] * grad[t];
        gmax2 = gmax2.max(yg);
        let grad_diff = gmax + yg;
        if grad_diff > 0.0 {
            // Curvature along the feasible direction; the signs cancel to K_ii + K_tt - 2 K_it.
            let quad = qd[i] + qd[t] - 2.0 * kernel_row[pb.vars.sample[t]];
            let obj_diff = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
            if obj_diff <= obj_diff_min {
                obj_diff_min = obj_diff;
                j_sel = Some(t);
            }
        }
    }
    Selection {
        pair: j_sel.map(|j| (i, j)),
        violation: gmax + gmax2,
    }
}

/// Analytic two-variable update with clipping to the box, as in LIBSVM.
#[allow(clippy::too_many_arguments)]
fn pair_update(
    mut ai: f64,
    mut aj: f64,
    gi: f64,
    gj: f64,
    qdi: f64,
    qdj: f64,
    q_ij: f64,
    opposite_signs: bool,
    c: f64,
) -> (f64, f64) {
    if opposite_signs {
        let mut quad = qdi + qdj + 2.0 * q_ij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-gi - gj) / quad;
        let diff = ai - aj;
        ai += delta;
        aj += delta;
        if diff > 0.0 {
            if aj < 0.0 {
                aj = 0.0;
                ai = diff;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = -diff;
        }
        if diff > 0.0 {
            if ai > c {
                ai = c;
                aj = c - diff;
            }
        } else if aj > c {
            aj = c;
            ai = c + diff;
        }
    } else {
        let mut quad = qdi + qdj - 2.0 * q_ij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (gi - gj) / quad;
        let sum = ai + aj;
        ai -= delta;
        aj += delta;
        if sum > c {
            if ai > c {
                ai = c;
                aj = sum - c;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > c {
            if aj > c {
                aj = c;
                ai = sum - c;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
    }
    (ai.clamp(0.0, c), aj.clamp(0.0, c))
}

/// Offset of the decision function `<w, x> - rho`.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut free_sum = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}
