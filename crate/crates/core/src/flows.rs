//! Trajectories, piecewise-conservation monitoring, and symmetry flows.
//!
//! `integrate` solves `qdd = f(t,q,qd)` adaptively; `monitor` evaluates
//! declared integrals along the trajectory and classifies each as
//! globally conserved, locally conserved (piecewise constant with
//! detected jumps), or failed. Flows transport states in the group
//! parameter: `flow_ode` integrates the generator field at fixed time,
//! `flow_gauge` adds the time direction scaled by the gauge function,
//! and `flow_series` sums the nested-bracket exponential series.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

#[allow(unused_imports)]
use num_traits::Float;

use crate::eval::{eval, Assignment, EvalError};
use crate::expr::Expr;
use crate::lagrangian::LagrangianSystem;
use crate::noether::{ConservationStatus, ConservedQuantity, SymmetryGenerator};
use crate::ode::{dopri5, OdeOptions, OdeSolution, Truncation};
use crate::sample::NumericEq;
use crate::simplify::simplify;

/// Parameter values by index, shared by every evaluation on a run.
pub type ParamValues = Vec<Option<f64>>;

/// Initial state of a trajectory.
#[derive(Clone, Debug)]
pub struct InitialState {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

/// A computed solution trajectory `q(t), qd(t)` on an adaptive grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    dof: usize,
    pub sol: OdeSolution,
    pub integrator: &'static str,
    pub tol: f64,
    pub truncated: Option<String>,
}

impl Trajectory {
    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn len(&self) -> usize {
        self.sol.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sol.ts.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.sol.ts
    }

    pub fn q_at_node(&self, k: usize) -> &[f64] {
        &self.sol.ys[k][..self.dof]
    }

    pub fn qd_at_node(&self, k: usize) -> &[f64] {
        &self.sol.ys[k][self.dof..]
    }

    pub fn end_time(&self) -> f64 {
        self.sol.end_t()
    }

    /// Dense state at time `t` via cubic Hermite on `(q, qd)`.
    pub fn sample(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let q = (0..self.dof).map(|i| self.sol.sample_component(i, t)).collect();
        let qd = (0..self.dof)
            .map(|i| self.sol.sample_component(self.dof + i, t))
            .collect();
        (q, qd)
    }

    fn assignment_at_node(&self, k: usize, params: &ParamValues) -> Assignment {
        let mut a = Assignment::state(self.sol.ts[k], self.q_at_node(k), self.qd_at_node(k));
        a.params = params.clone();
        a
    }
}

fn truncation_text(t: &Truncation) -> String {
    match t {
        Truncation::Domain(e) => format!("stopped at a singularity: {e}"),
        Truncation::StepUnderflow => "step size underflow (singularity or stiffness)".to_string(),
        Truncation::MaxStepsExceeded => "maximum step count exceeded".to_string(),
    }
}

/// Integrates the equations of motion `qdd^i = f^i` from `initial` to
/// `t_end` with combined absolute/relative tolerance `tol`.
pub fn integrate(
    sys: &LagrangianSystem,
    initial: &InitialState,
    t_end: f64,
    tol: f64,
    params: &ParamValues,
) -> Trajectory {
    let n = sys.dof();
    let mut assignment = Assignment::state(initial.t, &initial.q, &initial.qd);
    assignment.params = params.clone();
    let force = sys.force().to_vec();
    let mut rhs = move |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), EvalError> {
        assignment.t = Some(t);
        assignment.jets[0].clear();
        assignment.jets[0].extend_from_slice(&y[..n]);
        assignment.jets[1].clear();
        assignment.jets[1].extend_from_slice(&y[n..]);
        dy[..n].copy_from_slice(&y[n..]);
        for i in 0..n {
            dy[n + i] = eval(&force[i], &assignment)?;
        }
        Ok(())
    };
    let mut y0 = initial.q.clone();
    y0.extend_from_slice(&initial.qd);
    let opts = OdeOptions { tol, ..Default::default() };
    let sol = dopri5(&mut rhs, initial.t, &y0, t_end, &opts);
    let truncated = sol.truncated.as_ref().map(truncation_text);
    Trajectory { dof: n, sol, integrator: "dopri5", tol, truncated }
}

#[derive(Clone, Debug)]
pub struct MonitorOptions {
    /// Jump flag: `|dC| > jump_threshold * (1 + |C|)` across one step...
    pub jump_threshold: f64,
    /// ...while the integrator error estimate stays below
    /// `err_gate * (1 + |C|)` on that step.
    pub err_gate: f64,
    /// Max in-segment drift for a conserved verdict.
    pub drift_tol: f64,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions { jump_threshold: 1e-3, err_gate: 1e-8, drift_tol: 1e-6 }
    }
}

/// Per-integral outcome of a monitoring pass.
#[derive(Clone, Debug)]
pub struct ConservationVerdict {
    pub classification: ConservationStatus,
    /// Jump instants, refined by bisection on the dense output.
    pub jump_times: Vec<f64>,
    pub max_segment_drift: f64,
    /// Values of the integral on the trajectory grid.
    pub values: Vec<f64>,
    pub note: Option<String>,
}

/// Evaluates each integral along the trajectory and classifies it.
pub fn monitor(
    sys: &LagrangianSystem,
    traj: &Trajectory,
    integrals: &[&ConservedQuantity],
    opts: &MonitorOptions,
    params: &ParamValues,
) -> Vec<ConservationVerdict> {
    let _ = sys;
    integrals
        .iter()
        .map(|c| monitor_one(traj, c, opts, params))
        .collect()
}

fn monitor_one(
    traj: &Trajectory,
    c: &ConservedQuantity,
    opts: &MonitorOptions,
    params: &ParamValues,
) -> ConservationVerdict {
    let m = traj.len();
    let mut values = Vec::with_capacity(m);
    for k in 0..m {
        let a = traj.assignment_at_node(k, params);
        match eval(&c.expr, &a) {
            Ok(v) => values.push(v),
            Err(e) => {
                return ConservationVerdict {
                    classification: ConservationStatus::Failed,
                    jump_times: Vec::new(),
                    max_segment_drift: f64::INFINITY,
                    values,
                    note: Some(format!("evaluation failed on the trajectory: {e}")),
                }
            }
        }
    }
    // Jump detection: a large value change across one accepted step that
    // the integrator's own error estimate cannot explain.
    let mut jump_steps: Vec<usize> = Vec::new();
    for k in 0..m.saturating_sub(1) {
        let scale = 1.0 + values[k].abs().max(values[k + 1].abs());
        let dc = (values[k + 1] - values[k]).abs();
        if dc > opts.jump_threshold * scale && traj.sol.errs[k + 1] < opts.err_gate * scale {
            jump_steps.push(k);
        }
    }
    let jump_times: Vec<f64> = jump_steps
        .iter()
        .map(|&k| refine_jump(traj, &c.expr, params, k, (values[k] + values[k + 1]) / 2.0))
        .collect();

    // Drift within smooth segments, measured against each segment start.
    let mut max_drift: f64 = 0.0;
    let mut seg_start = 0usize;
    let mut boundaries: Vec<usize> = jump_steps.iter().map(|&k| k + 1).collect();
    boundaries.push(m);
    for &end in &boundaries {
        if seg_start < end {
            let base = values[seg_start];
            for v in &values[seg_start..end] {
                max_drift = max_drift.max((v - base).abs() / (1.0 + base.abs()));
            }
        }
        seg_start = end;
    }

    let classification = if max_drift < opts.drift_tol {
        if jump_steps.is_empty() {
            ConservationStatus::NumericGlobal
        } else {
            ConservationStatus::NumericLocal
        }
    } else {
        ConservationStatus::Failed
    };
    ConservationVerdict {
        classification,
        jump_times,
        max_segment_drift: max_drift,
        values,
        note: traj.truncated.clone(),
    }
}

/// Bisects the dense output on a flagged step to localize a jump.
fn refine_jump(
    traj: &Trajectory,
    c: &Expr,
    params: &ParamValues,
    step: usize,
    midvalue: f64,
) -> f64 {
    let mut lo = traj.sol.ts[step];
    let mut hi = traj.sol.ts[step + 1];
    let eval_at = |t: f64| -> Option<f64> {
        let (q, qd) = traj.sample(t);
        let mut a = Assignment::state(t, &q, &qd);
        a.params = params.clone();
        eval(c, &a).ok()
    };
    let lo_val = match eval_at(lo) {
        Some(v) => v,
        None => return 0.5 * (lo + hi),
    };
    let below = lo_val < midvalue;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match eval_at(mid) {
            Some(v) => {
                if (v < midvalue) == below {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            None => break,
        }
    }
    0.5 * (lo + hi)
}

/// Times of local minima of `|q|(t)` along a trajectory (periapsis
/// passages for orbit problems), refined by golden-section search.
pub fn radius_minima(traj: &Trajectory, scan_points: usize) -> Vec<f64> {
    let t0 = traj.times()[0];
    let t1 = traj.end_time();
    let n = scan_points.max(16);
    let radius = |t: f64| -> f64 {
        let (q, _) = traj.sample(t);
        q.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let dt = (t1 - t0) / n as f64;
    let mut out = Vec::new();
    let mut prev = radius(t0);
    let mut curr = radius(t0 + dt);
    for k in 1..n {
        let next = radius(t0 + dt * (k + 1) as f64);
        if curr < prev && curr <= next {
            // Golden-section refinement on the bracketing interval.
            let (mut a, mut b) = (t0 + dt * (k - 1) as f64, t0 + dt * (k + 1) as f64);
            let phi = 0.618_033_988_749_894_9;
            let mut x1 = b - phi * (b - a);
            let mut x2 = a + phi * (b - a);
            let (mut f1, mut f2) = (radius(x1), radius(x2));
            for _ in 0..80 {
                if f1 < f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - phi * (b - a);
                    f1 = radius(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + phi * (b - a);
                    f2 = radius(x2);
                }
            }
            out.push(0.5 * (a + b));
        }
        prev = curr;
        curr = next;
    }
    out
}

/// One-parameter flow of a state in the group parameter.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub eps: Vec<f64>,
    /// Time value per node (constant unless the flow is gauge-extended).
    pub ts: Vec<f64>,
    /// Flat `[q, qd]` per node.
    pub states: Vec<Vec<f64>>,
    pub method: &'static str,
    pub truncated: Option<String>,
}

impl FlowMap {
    pub fn end_state(&self) -> (f64, &[f64]) {
        (
            *self.ts.last().expect("flow has nodes"),
            self.states.last().expect("flow has nodes").as_slice(),
        )
    }
}

/// Transports a state along the generator field: at fixed `t`,
/// `dq^i/de = P^i`, `dqd^i/de = D_t P^i` evaluated at the moving state.
pub fn flow_ode(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    state: &InitialState,
    eps_end: f64,
    tol: f64,
    params: &ParamValues,
) -> FlowMap {
    let n = sys.dof();
    let comps = gen.components().to_vec();
    let dt_comps = gen.dt_components().to_vec();
    let mut assignment = Assignment::state(state.t, &state.q, &state.qd);
    assignment.params = params.clone();
    let mut rhs = move |_eps: f64, y: &[f64], dy: &mut [f64]| -> Result<(), EvalError> {
        assignment.jets[0].clear();
        assignment.jets[0].extend_from_slice(&y[..n]);
        assignment.jets[1].clear();
        assignment.jets[1].extend_from_slice(&y[n..]);
        for i in 0..n {
            dy[i] = eval(&comps[i], &assignment)?;
            dy[n + i] = eval(&dt_comps[i], &assignment)?;
        }
        Ok(())
    };
    let mut y0 = state.q.clone();
    y0.extend_from_slice(&state.qd);
    let opts = OdeOptions { tol, ..Default::default() };
    let sol = dopri5(&mut rhs, 0.0, &y0, eps_end, &opts);
    let truncated = sol.truncated.as_ref().map(truncation_text);
    FlowMap {
        ts: vec![state.t; sol.ts.len()],
        eps: sol.ts,
        states: sol.ys,
        method: "ode",
        truncated,
    }
}

/// Gauge-extended flow of the non-vertical field `Y = X + tau D_t`:
/// `dt/de = tau`, `dq^i/de = P^i + tau qd^i`,
/// `dqd^i/de = D_t P^i + tau f^i`.
pub fn flow_gauge(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    tau: &Expr,
    state: &InitialState,
    eps_end: f64,
    tol: f64,
    params: &ParamValues,
) -> FlowMap {
    let n = sys.dof();
    let comps = gen.components().to_vec();
    let dt_comps = gen.dt_components().to_vec();
    let force = sys.force().to_vec();
    let tau = simplify(tau);
    let mut assignment = Assignment::state(state.t, &state.q, &state.qd);
    assignment.params = params.clone();
    let mut rhs = move |_eps: f64, y: &[f64], dy: &mut [f64]| -> Result<(), EvalError> {
        assignment.t = Some(y[0]);
        assignment.jets[0].clear();
        assignment.jets[0].extend_from_slice(&y[1..=n]);
        assignment.jets[1].clear();
        assignment.jets[1].extend_from_slice(&y[n + 1..]);
        let tau_v = eval(&tau, &assignment)?;
        dy[0] = tau_v;
        for i in 0..n {
            let p = eval(&comps[i], &assignment)?;
            let dp = eval(&dt_comps[i], &assignment)?;
            let f = eval(&force[i], &assignment)?;
            dy[1 + i] = p + tau_v * y[n + 1 + i];
            dy[n + 1 + i] = dp + tau_v * f;
        }
        Ok(())
    };
    let mut y0 = vec![state.t];
    y0.extend_from_slice(&state.q);
    y0.extend_from_slice(&state.qd);
    let opts = OdeOptions { tol, ..Default::default() };
    let sol = dopri5(&mut rhs, 0.0, &y0, eps_end, &opts);
    let truncated = sol.truncated.as_ref().map(truncation_text);
    FlowMap {
        ts: sol.ys.iter().map(|y| y[0]).collect(),
        eps: sol.ts,
        states: sol.ys.iter().map(|y| y[1..].to_vec()).collect(),
        method: "gauge-ode",
        truncated,
    }
}

#[derive(Clone, Debug)]
pub enum FlowError {
    /// Nested brackets grew past the node cap; use `flow_ode` instead.
    SeriesTooLarge { nodes: usize, cap: usize },
}

impl core::fmt::Display for FlowError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FlowError::SeriesTooLarge { nodes, cap } => write!(
                f,
                "series term grew to {nodes} nodes (cap {cap}); use the ODE flow instead"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FlowError {}

const SERIES_NODE_CAP: usize = 100_000;

/// Truncated exponential of the bracket flow:
/// `F + sum_{n=1..k} eps^n/n! {F,C}^n`, with the nested brackets built
/// symbolically.
#[derive(Clone, Debug)]
pub struct SeriesFlow {
    /// `terms[n]` is the n-fold nested bracket (`terms[0] == F`).
    pub terms: Vec<Expr>,
}

impl SeriesFlow {
    pub fn build(
        sys: &LagrangianSystem,
        cq: &ConservedQuantity,
        f: &Expr,
        order: usize,
    ) -> Result<SeriesFlow, FlowError> {
        let mut terms = vec![simplify(f)];
        for _ in 0..order {
            let next = crate::bracket::pbracket(sys, terms.last().unwrap(), &cq.expr);
            let nodes = next.node_count();
            if nodes > SERIES_NODE_CAP {
                return Err(FlowError::SeriesTooLarge { nodes, cap: SERIES_NODE_CAP });
            }
            terms.push(next);
        }
        Ok(SeriesFlow { terms })
    }

    /// Evaluates the truncated series at a state.
    pub fn eval_at(
        &self,
        state: &InitialState,
        eps: f64,
        params: &ParamValues,
    ) -> Result<f64, EvalError> {
        let mut a = Assignment::state(state.t, &state.q, &state.qd);
        a.params = params.clone();
        let mut acc = 0.0;
        let mut coeff = 1.0;
        for (n, term) in self.terms.iter().enumerate() {
            if n > 0 {
                coeff *= eps / n as f64;
            }
            acc += coeff * eval(term, &a)?;
        }
        Ok(acc)
    }
}

/// Lemma-level gauge equivalence: on constants of motion the gauge term
/// acts through `tau * D_t C`, which vanishes identically when `C` is
/// conserved.
pub fn verify_gauge_equivalence(
    sys: &LagrangianSystem,
    tau: &Expr,
    cq: &ConservedQuantity,
    checker: &NumericEq,
) -> bool {
    let dtc = match sys.solution_derivative(&cq.expr) {
        Ok(e) => e,
        Err(_) => return false,
    };
    let diff = simplify(&Expr::mul(tau.clone(), dtc));
    checker.salted(0x9a_9e).is_zero(&diff).is_equal()
}

/// Result of transporting a whole trajectory and measuring how well the
/// image satisfies the equations of motion.
#[derive(Clone, Debug)]
pub struct MappingReport {
    pub max_residual: f64,
    /// Finite-difference step used for the acceleration estimate.
    pub h: f64,
    pub transported: Trajectory,
}

/// Fixed-step classic RK4 transport along the generator field. The map
/// is a smooth function of the initial state (no adaptive step-size
/// decisions), which keeps finite differences of transported points
/// clean.
fn transport_rk4(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    t: f64,
    y0: &[f64],
    eps: f64,
    steps: usize,
    params: &ParamValues,
) -> Result<Vec<f64>, EvalError> {
    let n = sys.dof();
    let comps = gen.components();
    let dt_comps = gen.dt_components();
    let mut a = Assignment::state(t, &y0[..n], &y0[n..]);
    a.params = params.clone();
    let field = |y: &[f64], dy: &mut [f64], a: &mut Assignment| -> Result<(), EvalError> {
        a.jets[0].clear();
        a.jets[0].extend_from_slice(&y[..n]);
        a.jets[1].clear();
        a.jets[1].extend_from_slice(&y[n..]);
        for i in 0..n {
            dy[i] = eval(&comps[i], a)?;
            dy[n + i] = eval(&dt_comps[i], a)?;
        }
        Ok(())
    };
    let h = eps / steps as f64;
    let dim = 2 * n;
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    for _ in 0..steps {
        field(&y, &mut k1, &mut a)?;
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        field(&tmp, &mut k2, &mut a)?;
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        field(&tmp, &mut k3, &mut a)?;
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        field(&tmp, &mut k4, &mut a)?;
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}

/// Transports every node of `traj` by the generator flow at parameter
/// `eps`, then measures the equations-of-motion residual
/// `qdd - f(t, q, qd)` of the transported curve by central second
/// differences at step `h = tol^(1/4)`.
///
/// The points entering each difference stencil are re-integrated from
/// the nearest trajectory node (dense-output interpolation is not
/// accurate enough to be differentiated twice) and transported by a
/// fixed-step flow so that transport errors vary smoothly.
pub fn solution_mapping_check(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    traj: &Trajectory,
    eps: f64,
    tol: f64,
    params: &ParamValues,
) -> Result<MappingReport, EvalError> {
    let n = sys.dof();
    let force = sys.force().to_vec();
    let mut assignment = Assignment::new();
    assignment.params = params.clone();
    let mut sys_rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), EvalError> {
        assignment.t = Some(t);
        assignment.jets[0].clear();
        assignment.jets[0].extend_from_slice(&y[..n]);
        assignment.jets[1].clear();
        assignment.jets[1].extend_from_slice(&y[n..]);
        dy[..n].copy_from_slice(&y[n..]);
        for i in 0..n {
            dy[n + i] = eval(&force[i], &assignment)?;
        }
        Ok(())
    };

    // Transport the trajectory nodes themselves for the report/CSV.
    let mut states = Vec::with_capacity(traj.len());
    let mut derivs = Vec::with_capacity(traj.len());
    let flow_steps = 128usize;
    for k in 0..traj.len() {
        let mut y = traj.q_at_node(k).to_vec();
        y.extend_from_slice(traj.qd_at_node(k));
        let image = transport_rk4(sys, gen, traj.times()[k], &y, eps, flow_steps, params)?;
        let mut a = Assignment::state(traj.times()[k], &image[..n], &image[n..]);
        a.params = params.clone();
        let mut d = vec![0.0; 2 * n];
        d[..n].copy_from_slice(&image[n..]);
        for i in 0..n {
            d[n + i] = eval(&sys.force()[i], &a)?;
        }
        states.push(image);
        derivs.push(d);
    }
    let transported = Trajectory {
        dof: n,
        sol: OdeSolution {
            ts: traj.times().to_vec(),
            ys: states,
            derivs,
            errs: vec![0.0; traj.len()],
            accepted: traj.len().saturating_sub(1),
            rejected: 0,
            truncated: None,
        },
        integrator: "transported",
        tol,
        truncated: None,
    };

    let t0 = traj.times()[0];
    let t1 = traj.end_time();
    let h = tol.powf(0.25).min((t1 - t0).abs() / 16.0);
    let opts = OdeOptions { tol: (tol * 1e-2).max(1e-13), ..Default::default() };
    let mut max_residual: f64 = 0.0;
    let samples = 48usize;
    for s in 1..samples {
        let tc = t0 + (t1 - t0) * (s as f64) / (samples as f64);
        if (tc - t0).abs() < 2.0 * h || (t1 - tc).abs() < 2.0 * h {
            continue;
        }
        // Same source node for the whole stencil: errors stay correlated.
        let node = traj
            .times()
            .iter()
            .position(|&tn| (tn - tc) * (t1 - t0).signum() > 0.0)
            .unwrap_or(traj.len())
            .saturating_sub(1);
        let mut y_node = traj.q_at_node(node).to_vec();
        y_node.extend_from_slice(traj.qd_at_node(node));
        let t_node = traj.times()[node];

        let mut stencil = Vec::with_capacity(3);
        for dt in [-h, 0.0, h] {
            let target = tc + dt;
            let seg = dopri5(&mut sys_rhs, t_node, &y_node, target, &opts);
            if seg.truncated.is_some() {
                return Err(EvalError::NonFinite);
            }
            let image =
                transport_rk4(sys, gen, target, seg.end_y(), eps, flow_steps, params)?;
            stencil.push(image);
        }
        let qd_fd: Vec<f64> = (0..n)
            .map(|i| (stencil[2][i] - stencil[0][i]) / (2.0 * h))
            .collect();
        let mut a = Assignment::state(tc, &stencil[1][..n], &qd_fd);
        a.params = params.clone();
        for i in 0..n {
            let qdd_fd = (stencil[2][i] - 2.0 * stencil[1][i] + stencil[0][i]) / (h * h);
            let f_val = eval(&sys.force()[i], &a)?;
            max_residual = max_residual.max((qdd_fd - f_val).abs());
        }
    }
    Ok(MappingReport { max_residual, h, transported })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noether::is_conserved;
    use crate::parse::parse;
    use crate::sym::VariableSpace;

    fn build(n: usize, src: &str) -> LagrangianSystem {
        let sp = VariableSpace::new(n, &[]).unwrap();
        let l = parse(src, &sp).unwrap();
        LagrangianSystem::build(sp, l, &NumericEq::default()).unwrap()
    }

    fn expr(sys: &LagrangianSystem, src: &str) -> Expr {
        parse(src, sys.space()).unwrap()
    }

    fn no_params() -> ParamValues {
        Vec::new()
    }

    #[test]
    fn oscillator_returns_after_a_period() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let init = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let traj = integrate(&osc, &init, 2.0 * core::f64::consts::PI, 1e-10, &no_params());
        assert!(traj.truncated.is_none());
        let k = traj.len() - 1;
        assert!((traj.q_at_node(k)[0] - 1.0).abs() < 1e-8);
        assert!(traj.qd_at_node(k)[0].abs() < 1e-8);
    }

    #[test]
    fn free_particle_moves_linearly() {
        let free = build(1, "qd1^2/2");
        let init = InitialState { t: 0.0, q: vec![0.0], qd: vec![1.0] };
        let traj = integrate(&free, &init, 3.0, 1e-10, &no_params());
        let (q, _) = traj.sample(1.7);
        assert!((q[0] - 1.7).abs() < 1e-9);
    }

    #[test]
    fn kepler_collision_orbit_truncates() {
        let kepler = build(2, "(qd1^2 + qd2^2)/2 + 1/sqrt(q1^2 + q2^2)");
        let init = InitialState { t: 0.0, q: vec![1.0, 0.0], qd: vec![-1.0, 0.0] };
        let traj = integrate(&kepler, &init, 10.0, 1e-9, &no_params());
        assert!(traj.truncated.is_some(), "radial infall must truncate");
        assert!(traj.end_time() < 10.0);
    }

    #[test]
    fn monitor_oscillator_energy_global() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let e = is_conserved(&osc, &expr(&osc, "qd1^2/2 + q1^2/2"), &chk);
        let init = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let traj = integrate(&osc, &init, 20.0, 1e-10, &no_params());
        let verdicts = monitor(&osc, &traj, &[&e], &MonitorOptions::default(), &no_params());
        assert_eq!(verdicts[0].classification, ConservationStatus::NumericGlobal);
        assert!(verdicts[0].max_segment_drift < 1e-8);
    }

    #[test]
    fn monitor_flags_non_conserved() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let q = is_conserved(&osc, &Expr::coord(0), &chk);
        let init = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let traj = integrate(&osc, &init, 10.0, 1e-10, &no_params());
        let verdicts = monitor(&osc, &traj, &[&q], &MonitorOptions::default(), &no_params());
        assert_eq!(verdicts[0].classification, ConservationStatus::Failed);
    }

    #[test]
    fn monitor_detects_branch_jumps() {
        // The oscillator phase atan2(q, qd) - t is conserved but wraps by
        // 2 pi whenever the orbit crosses the atan2 branch cut.
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let phase = is_conserved(&osc, &expr(&osc, "atan2(q1, qd1) - t"), &chk);
        assert_eq!(phase.status, ConservationStatus::SymbolicVerified);
        let init = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let traj = integrate(&osc, &init, 13.0, 1e-10, &no_params());
        let verdicts = monitor(&osc, &traj, &[&phase], &MonitorOptions::default(), &no_params());
        assert_eq!(verdicts[0].classification, ConservationStatus::NumericLocal);
        // atan2(q, qd) = pi/2 + t (mod 2 pi): cuts at t = pi/2 and 5 pi/2.
        assert_eq!(verdicts[0].jump_times.len(), 2);
        let expect = [core::f64::consts::PI / 2.0, 2.5 * core::f64::consts::PI];
        for (got, want) in verdicts[0].jump_times.iter().zip(expect) {
            assert!((got - want).abs() < 1e-6, "jump at {got}, expected {want}");
        }
        assert!(verdicts[0].max_segment_drift < 1e-7);
    }

    #[test]
    fn radius_minima_of_an_ellipse() {
        let kepler = build(2, "(qd1^2 + qd2^2)/2 + 1/sqrt(q1^2 + q2^2)");
        // r0 = 1 with tangential v0 = 0.8 < v_circ: the start is apoapsis,
        // so periapsis passages sit at odd half-periods.
        let init = InitialState { t: 0.0, q: vec![1.0, 0.0], qd: vec![0.0, 0.8] };
        let energy = 0.5 * 0.8 * 0.8 - 1.0;
        let a = -1.0 / (2.0 * energy);
        let period = 2.0 * core::f64::consts::PI * a.powf(1.5);
        let traj = integrate(&kepler, &init, 3.0 * period, 1e-10, &no_params());
        assert!(traj.truncated.is_none());
        let minima = radius_minima(&traj, 600);
        assert_eq!(minima.len(), 3, "found {minima:?}");
        for (k, t) in minima.iter().enumerate() {
            let expect = period * (k as f64 + 0.5);
            assert!((t - expect).abs() < 1e-3 * period, "minimum {k} at {t}, expected {expect}");
        }
    }

    #[test]
    fn translation_flow_is_exact() {
        let free = build(1, "qd1^2/2");
        let gen = SymmetryGenerator::new(&free, vec![Expr::int(1)], None).unwrap();
        let state = InitialState { t: 0.0, q: vec![0.0], qd: vec![1.0] };
        let map = flow_ode(&free, &gen, &state, 3.0, 1e-12, &no_params());
        let (_, end) = map.end_state();
        assert!((end[0] - 3.0).abs() < 1e-10);
        assert!((end[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_flow_moves_along_the_orbit() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let gen = SymmetryGenerator::new(&osc, vec![Expr::vel(0)], None).unwrap();
        let state = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let map = flow_ode(&osc, &gen, &state, 0.7, 1e-12, &no_params());
        let (_, end) = map.end_state();
        assert!((end[0] - 0.7f64.cos()).abs() < 1e-9);
        assert!((end[1] + 0.7f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn zero_parameter_flow_is_identity() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let gen = SymmetryGenerator::new(&osc, vec![expr(&osc, "q1^2")], None).unwrap();
        let state = InitialState { t: 0.3, q: vec![0.4], qd: vec![-1.1] };
        let map = flow_ode(&osc, &gen, &state, 0.0, 1e-12, &no_params());
        let (_, end) = map.end_state();
        assert_eq!(end, &[0.4, -1.1][..]);
    }

    #[test]
    fn flow_group_property() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let gen = SymmetryGenerator::new(&osc, vec![Expr::vel(0)], None).unwrap();
        let state = InitialState { t: 0.0, q: vec![0.8], qd: vec![0.3] };
        let once = flow_ode(&osc, &gen, &state, 0.9, 1e-12, &no_params());
        let half = flow_ode(&osc, &gen, &state, 0.4, 1e-12, &no_params());
        let (_, mid) = half.end_state();
        let mid_state = InitialState { t: 0.0, q: mid[..1].to_vec(), qd: mid[1..].to_vec() };
        let then = flow_ode(&osc, &gen, &mid_state, 0.5, 1e-12, &no_params());
        let (_, a) = once.end_state();
        let (_, b) = then.end_state();
        for i in 0..2 {
            assert!((a[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn conserved_quantity_invariant_under_own_flow() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let e = is_conserved(&osc, &expr(&osc, "qd1^2/2 + q1^2/2"), &chk);
        let gen = crate::noether::c_to_p(&osc, &e).unwrap();
        let state = InitialState { t: 0.0, q: vec![0.6], qd: vec![0.5] };
        let map = flow_ode(&osc, &gen, &state, 1.3, 1e-12, &no_params());
        let (_, end) = map.end_state();
        let before = 0.5 * (0.5 * 0.5 + 0.6 * 0.6);
        let after = 0.5 * (end[1] * end[1] + end[0] * end[0]);
        assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn gauge_flow_with_minus_one_is_time_translation() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let h = osc.hamiltonian_lagrangian_vars();
        let e = is_conserved(&osc, &h, &chk);
        let gen = crate::noether::c_to_p(&osc, &e).unwrap();
        assert_eq!(gen.components()[0], Expr::vel(0));
        let state = InitialState { t: 0.4, q: vec![0.9], qd: vec![-0.2] };
        let map = flow_gauge(&osc, &gen, &Expr::int(-1), &state, 2.0, 1e-12, &no_params());
        let (t_end, end) = map.end_state();
        assert!((t_end - (0.4 - 2.0)).abs() < 1e-12);
        assert!((end[0] - 0.9).abs() + (end[1] + 0.2).abs() < 1e-9);
    }

    #[test]
    fn zero_gauge_reduces_to_vertical_flow() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let gen = SymmetryGenerator::new(&osc, vec![Expr::vel(0)], None).unwrap();
        let state = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let a = flow_ode(&osc, &gen, &state, 0.5, 1e-12, &no_params());
        let b = flow_gauge(&osc, &gen, &Expr::int(0), &state, 0.5, 1e-12, &no_params());
        let (_, ea) = a.end_state();
        let (tb, eb) = b.end_state();
        assert_eq!(tb, 0.0);
        for i in 0..2 {
            assert!((ea[i] - eb[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn series_flow_translation_terminates() {
        let free = build(1, "qd1^2/2");
        let chk = NumericEq::default();
        let c = is_conserved(&free, &Expr::vel(0), &chk);
        let series = SeriesFlow::build(&free, &c, &Expr::coord(0), 3).unwrap();
        // {q, qd} = 1, higher brackets vanish: q + eps exactly.
        let state = InitialState { t: 0.0, q: vec![0.25], qd: vec![2.0] };
        let v = series.eval_at(&state, 0.8, &no_params()).unwrap();
        assert!((v - 1.05).abs() < 1e-14);
    }

    #[test]
    fn series_flow_matches_ode_flow() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let e = is_conserved(&osc, &expr(&osc, "qd1^2/2 + q1^2/2"), &chk);
        let series = SeriesFlow::build(&osc, &e, &Expr::coord(0), 8).unwrap();
        let state = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let v = series.eval_at(&state, 0.1, &no_params()).unwrap();
        let gen = crate::noether::c_to_p(&osc, &e).unwrap();
        let map = flow_ode(&osc, &gen, &state, 0.1, 1e-12, &no_params());
        let (_, end) = map.end_state();
        assert!((v - end[0]).abs() < 1e-12, "{v} vs {}", end[0]);
    }

    #[test]
    fn series_flow_fixes_its_own_hamiltonian() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let e = is_conserved(&osc, &expr(&osc, "qd1^2/2 + q1^2/2"), &chk);
        let series = SeriesFlow::build(&osc, &e, &e.expr.clone(), 5).unwrap();
        let state = InitialState { t: 0.0, q: vec![0.7], qd: vec![0.4] };
        for eps in [0.0, 0.3, 1.5] {
            let v = series.eval_at(&state, eps, &no_params()).unwrap();
            let direct = 0.5 * (0.4 * 0.4 + 0.7 * 0.7);
            assert!((v - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn gauge_equivalence_lemma() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let e = is_conserved(&osc, &expr(&osc, "qd1^2/2 + q1^2/2"), &chk);
        let tau = expr(&osc, "q1^2*qd1 - t");
        assert!(verify_gauge_equivalence(&osc, &tau, &e, &chk));
        // Non-conserved C fails: the difference is tau * qd.
        let not_conserved = is_conserved(&osc, &Expr::coord(0), &chk);
        assert!(!verify_gauge_equivalence(&osc, &tau, &not_conserved, &chk));
    }

    #[test]
    fn half_tolerance_reintegration_contract() {
        // Re-integration at half tolerance must agree with the reported
        // error budget: endpoint shift < 10x the accumulated estimate.
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let init = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let coarse = integrate(&osc, &init, 10.0, 1e-8, &no_params());
        let fine = integrate(&osc, &init, 10.0, 5e-9, &no_params());
        let budget: f64 = coarse.sol.errs.iter().sum();
        let k = coarse.len() - 1;
        let m = fine.len() - 1;
        let shift = (coarse.q_at_node(k)[0] - fine.q_at_node(m)[0]).abs()
            + (coarse.qd_at_node(k)[0] - fine.qd_at_node(m)[0]).abs();
        assert!(shift < 10.0 * budget, "shift {shift:.3e} vs budget {budget:.3e}");
    }

    #[test]
    fn series_error_decreases_factorially() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let chk = NumericEq::default();
        let e = is_conserved(&osc, &expr(&osc, "qd1^2/2 + q1^2/2"), &chk);
        let state = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let eps = 0.3;
        // Exact flow of q under the energy flow is cos(eps) from (1, 0).
        let exact = eps.cos();
        let mut prev = f64::INFINITY;
        for k in [2usize, 4, 6, 8] {
            let series = SeriesFlow::build(&osc, &e, &Expr::coord(0), k).unwrap();
            let err = (series.eval_at(&state, eps, &no_params()).unwrap() - exact).abs();
            assert!(err < prev / 8.0, "order {k}: {err:.3e} vs previous {prev:.3e}");
            prev = err;
        }
    }

    #[test]
    fn mapping_check_accepts_symmetries_and_flags_non_symmetries() {
        let osc = build(1, "qd1^2/2 - q1^2/2");
        let init = InitialState { t: 0.0, q: vec![1.0], qd: vec![0.0] };
        let traj = integrate(&osc, &init, 3.0, 1e-12, &no_params());

        // Energy flow at eps = 0.5 phase-shifts the solution: residual
        // below 1e-6 on the h = 1e-3 difference grid.
        let sym = SymmetryGenerator::new(&osc, vec![Expr::vel(0)], None).unwrap();
        let good = solution_mapping_check(&osc, &sym, &traj, 0.5, 1e-12, &no_params()).unwrap();
        assert!((good.h - 1e-3).abs() < 1e-12);
        assert!(good.max_residual < 1e-6, "symmetry residual {}", good.max_residual);

        // A non-symmetry leaves an O(eps) defect in the image curve.
        let non = SymmetryGenerator::new(&osc, vec![expr(&osc, "q1^2")], None).unwrap();
        let bad = solution_mapping_check(&osc, &non, &traj, 0.5, 1e-12, &no_params()).unwrap();
        assert!(
            bad.max_residual > 1e-2,
            "non-symmetry residual {} should be O(eps)",
            bad.max_residual
        );
    }
}
