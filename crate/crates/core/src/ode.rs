//! Adaptive embedded Runge-Kutta 5(4), Dormand-Prince coefficients.
//!
//! The right-hand side is fallible: a domain error inside an expression
//! (Kepler collision, chart exit) first triggers step-size reduction and
//! finally truncates the integration with a reason, rather than
//! poisoning the state with NaN. Integration runs in either direction.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::eval::EvalError;

pub type Rhs<'a> = dyn FnMut(f64, &[f64], &mut [f64]) -> Result<(), EvalError> + 'a;

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

/// 5th-order weights (row 6 of `A` is identical: FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Clone, Debug, PartialEq)]
pub enum Truncation {
    /// The right-hand side kept failing even at the minimum step.
    Domain(EvalError),
    /// Step size underflowed (stiffness or a singularity).
    StepUnderflow,
    MaxStepsExceeded,
}

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub tol: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-10, h_init: None, max_steps: 2_000_000 }
    }
}

/// Dense solver output: accepted nodes, state and derivative per node,
/// and the embedded error estimate of each accepted step.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
    /// `errs[k]` is the error estimate of the step ending at node `k`
    /// (`errs[0] == 0`).
    pub errs: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
    pub truncated: Option<Truncation>,
}

impl OdeSolution {
    pub fn end_t(&self) -> f64 {
        *self.ts.last().expect("at least the initial node")
    }

    pub fn end_y(&self) -> &[f64] {
        self.ys.last().expect("at least the initial node")
    }

    /// Cubic Hermite interpolation of component `i` at time `t` (which
    /// must lie within the covered span).
    pub fn sample_component(&self, i: usize, t: f64) -> f64 {
        let k = self.bracket(t);
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let h = t1 - t0;
        if h == 0.0 {
            return self.ys[k][i];
        }
        let s = (t - t0) / h;
        let (y0, y1) = (self.ys[k][i], self.ys[k + 1][i]);
        let (d0, d1) = (self.derivs[k][i] * h, self.derivs[k + 1][i] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    fn bracket(&self, t: f64) -> usize {
        let n = self.ts.len();
        let forward = self.ts[n - 1] >= self.ts[0];
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let cond = if forward { self.ts[mid] <= t } else { self.ts[mid] >= t };
            if cond {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], tol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..err.len() {
        let scale = tol + tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / scale;
        acc += r * r;
    }
    (acc / err.len() as f64).sqrt()
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t_end` (either
/// direction). Always returns the nodes accumulated so far; `truncated`
/// explains an early stop.
pub fn dopri5(rhs: &mut Rhs<'_>, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions) -> OdeSolution {
    let dim = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut sol = OdeSolution {
        ts: vec![t0],
        ys: vec![y0.to_vec()],
        derivs: Vec::new(),
        errs: vec![0.0],
        accepted: 0,
        rejected: 0,
        truncated: None,
    };
    let mut k1 = vec![0.0; dim];
    if span == 0.0 {
        sol.derivs.push(k1.clone());
        return sol;
    }
    if let Err(e) = rhs(t0, y0, &mut k1) {
        sol.derivs.push(vec![0.0; dim]);
        sol.truncated = Some(Truncation::Domain(e));
        return sol;
    }
    sol.derivs.push(k1.clone());

    let h_min = span * 1e-14 + f64::MIN_POSITIVE * 16.0;
    let mut h = opts.h_init.unwrap_or(span / 100.0).min(span).max(h_min) * dir;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut stages = vec![vec![0.0; dim]; 7];
    stages[0] = k1;
    let mut steps = 0usize;

    while (t_end - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            sol.truncated = Some(Truncation::MaxStepsExceeded);
            break;
        }
        steps += 1;
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() < h_min {
            sol.truncated = Some(Truncation::StepUnderflow);
            break;
        }

        let mut failed_eval: Option<EvalError> = None;
        let mut y_new = vec![0.0; dim];
        let mut err_vec = vec![0.0; dim];
        let mut ok = true;
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, stage) in stages.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    for i in 0..dim {
                        ys[i] += h * a * stage[i];
                    }
                }
            }
            let ts = t + C[s - 1] * h;
            let (head, tail) = stages.split_at_mut(s);
            let _ = head;
            if let Err(e) = rhs(ts, &ys, &mut tail[0]) {
                failed_eval = Some(e);
                ok = false;
                break;
            }
            if s == 6 {
                y_new = ys;
            }
        }
        if ok {
            for i in 0..dim {
                let mut e = 0.0;
                for j in 0..7 {
                    e += (B5[j] - B4[j]) * stages[j][i];
                }
                err_vec[i] = h * e;
            }
            let norm = error_norm(&err_vec, &y, &y_new, opts.tol);
            if norm <= 1.0 {
                // Accept; FSAL: stage 7 is the derivative at the new node.
                t += h;
                y = y_new;
                sol.ts.push(t);
                sol.ys.push(y.clone());
                sol.derivs.push(stages[6].clone());
                let err_abs = err_vec.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                sol.errs.push(err_abs);
                sol.accepted += 1;
                stages[0] = stages[6].clone();
                let factor = (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0);
                h *= factor;
                continue;
            }
            sol.rejected += 1;
            let factor = (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0);
            h *= factor;
        } else {
            // Domain failure inside the step: shrink hard.
            sol.rejected += 1;
            h *= 0.25;
            if h.abs() < h_min {
                sol.truncated = Some(Truncation::Domain(
                    failed_eval.unwrap_or(EvalError::NonFinite),
                ));
                break;
            }
        }
    }
    sol
}
