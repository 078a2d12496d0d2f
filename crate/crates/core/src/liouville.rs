//! Local action-angle construction for commuting families.
//!
//! Given `N` functionally independent, Poisson-commuting conserved
//! integrals `C_1..C_N`, the pipeline inverts the velocities
//! `qd(t,q,C)`, builds the generating function
//! `S(t,q,C) = int p_j(t,q,qd(t,q,C)) dq^j`, forms the generalized
//! angles `Theta^i = int g_jk d(qd^k)/dC_i dq^j`, and produces the extra
//! `N` locally conserved integrals: for autonomous systems the temporal
//! integral `T = t - Theta^1` (with `C_1` required to be the energy)
//! plus the constants `Theta^2..Theta^N`; for non-autonomous systems the
//! integrals `Upsilon^i = int dK/dC_i dt - Theta^i` with
//! `K = dS/dt + H`.
//!
//! Everything lives on a chart: a velocity-sign branch around a seed
//! state. Validation samples stay inside the chart, and chart exits are
//! exactly where these locally conserved integrals may jump.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::diff::diff;
use crate::eval::{eval, Assignment};
use crate::expr::Expr;
use crate::flows::{integrate, InitialState, ParamValues};
use crate::kernel::{Kernel, Leg, VelInverseSpec};
use crate::lagrangian::LagrangianSystem;
use crate::noether::{ConservationStatus, ConservedQuantity};
use crate::num::Num;
use crate::sample::NumericEq;
use crate::simplify::simplify;
use crate::sym::{Sym, VariableSpace};

#[derive(Clone, Debug)]
pub enum LiouvilleError {
    WrongCount { expected: usize, got: usize },
    NotVerified(usize),
    NonCommuting { i: usize, j: usize },
    RankDeficient(String),
    /// `C_1` must equal the Hamiltonian for the autonomous split.
    FirstIntegralNotEnergy,
    ExpectedAutonomous,
    ExpectedNonAutonomous,
    /// `K = dS/dt + H` came out `q`-dependent: chart/family inconsistency.
    KDependsOnQ(String),
    ChartBoundary(String),
    /// The conserved-value labels collide with declared parameter names.
    NameCollision(String),
    Unsupported(String),
}

impl fmt::Display for LiouvilleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiouvilleError::WrongCount { expected, got } => {
                write!(f, "family must have {expected} integrals, got {got}")
            }
            LiouvilleError::NotVerified(i) => {
                write!(f, "family member {} is not symbolically verified", i + 1)
            }
            LiouvilleError::NonCommuting { i, j } => {
                write!(f, "family members {} and {} do not commute", i + 1, j + 1)
            }
            LiouvilleError::RankDeficient(s) => write!(f, "velocity Jacobian rank-deficient: {s}"),
            LiouvilleError::FirstIntegralNotEnergy => {
                write!(f, "autonomous construction requires C1 to be the energy")
            }
            LiouvilleError::ExpectedAutonomous => {
                write!(f, "system is non-autonomous; use the non-autonomous construction")
            }
            LiouvilleError::ExpectedNonAutonomous => {
                write!(f, "system is autonomous; use the autonomous construction")
            }
            LiouvilleError::KDependsOnQ(s) => write!(f, "K depends on q: {s}"),
            LiouvilleError::ChartBoundary(s) => write!(f, "chart boundary: {s}"),
            LiouvilleError::NameCollision(s) => write!(f, "name collision: {s}"),
            LiouvilleError::Unsupported(s) => write!(f, "unsupported: {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LiouvilleError {}

/// Integrals of motion, derived constants of motion, and an optional
/// note about the reduction step.
pub type NonAutonomousOutcome = (Vec<ChartIntegral>, Vec<ChartIntegral>, Option<String>);

/// A verified family of commuting, independent conserved integrals.
#[derive(Clone, Debug)]
pub struct CommutingFamily {
    pub integrals: Vec<ConservedQuantity>,
    pub commuting: bool,
    pub independent: bool,
}

/// Checks the family axioms: right count, each member symbolically
/// verified, pairwise vanishing brackets, velocity Jacobian of full rank
/// at sampled points.
pub fn verify_family(
    sys: &LagrangianSystem,
    integrals: Vec<ConservedQuantity>,
    checker: &NumericEq,
) -> Result<CommutingFamily, LiouvilleError> {
    let n = sys.dof();
    if integrals.len() != n {
        return Err(LiouvilleError::WrongCount { expected: n, got: integrals.len() });
    }
    for (i, c) in integrals.iter().enumerate() {
        if c.status != ConservationStatus::SymbolicVerified {
            return Err(LiouvilleError::NotVerified(i));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let br = crate::bracket::pbracket(sys, &integrals[i].expr, &integrals[j].expr);
            if !checker
                .salted(0x11_0000 + (i * n + j) as u64)
                .is_zero(&br)
                .is_equal()
            {
                return Err(LiouvilleError::NonCommuting { i, j });
            }
        }
    }
    // d(C_i)/d(qd^k) must be invertible on the working chart.
    let jac: Vec<Vec<Expr>> = integrals
        .iter()
        .map(|c| c.multipliers.clone())
        .collect();
    let det = crate::matrix::det(&jac);
    match checker.salted(0x11_aa).is_zero(&det) {
        crate::sample::EqVerdict::NotEqual(_) => {}
        _ => {
            return Err(LiouvilleError::RankDeficient(
                "det d(C)/d(qd) vanishes or could not be sampled".to_string(),
            ))
        }
    }
    Ok(CommutingFamily { integrals, commuting: true, independent: true })
}

/// Action-angle data on one velocity-branch chart.
#[derive(Clone, Debug)]
pub struct ActionAngleChart {
    /// Variable space extended with the conserved-value labels `C1..CN`.
    pub space: VariableSpace,
    pub c_syms: Vec<Sym>,
    /// `qd^k(t,q,C)`, symbolic branch or Newton-backed kernels.
    pub inversion: Vec<Expr>,
    /// Generating function `S(t,q,C)`.
    pub generating: Expr,
    /// Angles `Theta^i(t,q,C)`.
    pub thetas: Vec<Expr>,
    /// Angles pulled back along `C_i = C_i(t,q,qd)`.
    pub theta_pullbacks: Vec<Expr>,
    /// Branch seed (fixes velocity signs, Newton starts).
    pub seed: InitialState,
    /// Coordinate base point of the `q`-integrations.
    pub base_q: Vec<f64>,
    /// Base time for the non-autonomous `t`-quadrature.
    pub base_t: f64,
    /// Sampling boxes encoding the chart (velocity signs in particular).
    pub boxes: BTreeMap<Sym, (f64, f64)>,
    /// True when the inversion needed the damped-Newton kernel.
    pub numeric_inversion: bool,
}

impl ActionAngleChart {
    /// A `NumericEq` restricted to this chart.
    pub fn chart_checker(&self, base: &NumericEq) -> NumericEq {
        let mut chk = base.clone();
        for (sym, (lo, hi)) in &self.boxes {
            chk.boxes.insert(*sym, (*lo, *hi));
        }
        chk
    }
}

const C_LABEL_PREFIX: &str = "C";

fn c_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{C_LABEL_PREFIX}{i}")).collect()
}

/// Velocity inversion `qd(t,q,C)`, with two symbolic strategies and a
/// damped-Newton fallback:
///
/// 1. each `C_i` quadratic (or linear) in a single distinct velocity;
/// 2. the family is linear in the squared velocities with a constant
///    coefficient matrix, `C = M [qd^2/2 ...] + v(t,q)` — covers
///    energy-plus-partial-energies families;
/// 3. Newton kernels seeded (and branch-selected) by the seed state.
fn invert_velocities(
    sys: &LagrangianSystem,
    family: &CommutingFamily,
    space: &VariableSpace,
    c_syms: &[Sym],
    seed: &InitialState,
    params: &ParamValues,
) -> Result<(Vec<Expr>, bool), LiouvilleError> {
    let n = sys.dof();
    let _ = space;
    if let Some(inv) = try_single_velocity(family, c_syms, seed, n) {
        return Ok((inv, false));
    }
    if let Some(inv) = try_squares_system(family, c_syms, seed, n) {
        return Ok((inv, false));
    }
    // Newton fallback. Target values come from the C-label parameters.
    let mut seed_vel = seed.qd.clone();
    for v in seed_vel.iter_mut() {
        if v.abs() < 1e-6 {
            *v = 0.3; // nudge off the turning point to fix a branch
        }
    }
    let jacobian: Vec<Vec<Expr>> = family
        .integrals
        .iter()
        .map(|c| c.multipliers.clone())
        .collect();
    let spec = Arc::new(VelInverseSpec {
        constraints: family.integrals.iter().map(|c| c.expr.clone()).collect(),
        targets: c_syms.iter().map(|s| Expr::sym(*s)).collect(),
        jacobian,
        seed_vel,
        tol: 1e-12,
        cache: Default::default(),
    });
    let _ = params;
    let inv = (0..n)
        .map(|k| Expr::kernel(Kernel::vel_inverse(spec.clone(), k)))
        .collect();
    Ok((inv, true))
}

/// Branch sign for a quadratic solve, from the seed velocity.
fn branch_sign(seed_qd: f64) -> i64 {
    if seed_qd < 0.0 {
        -1
    } else {
        1
    }
}

fn velocity_free(e: &Expr, n: usize) -> bool {
    (0..n).all(|k| !e.depends_on(Sym::vel(k)))
}

/// Strategy 1: every `C_i` involves exactly one velocity, quadratically.
fn try_single_velocity(
    family: &CommutingFamily,
    c_syms: &[Sym],
    seed: &InitialState,
    n: usize,
) -> Option<Vec<Expr>> {
    let mut inversion: Vec<Option<Expr>> = vec![None; n];
    let mut used = vec![false; n];
    for (i, cq) in family.integrals.iter().enumerate() {
        let touched: Vec<usize> = (0..n)
            .filter(|&k| cq.expr.depends_on(Sym::vel(k)))
            .collect();
        let [j] = touched.as_slice() else { return None };
        let j = *j;
        if used[j] {
            return None;
        }
        used[j] = true;
        let qd = Expr::vel(j);
        // C = a qd^2 + b qd + c with (a, b, c) velocity-free.
        let b_plus = diff(&cq.expr, Sym::vel(j));
        let a = simplify(&Expr::mul(Expr::ratio(1, 2), diff(&b_plus, Sym::vel(j))));
        let mut at_zero = BTreeMap::new();
        at_zero.insert(Sym::vel(j), Expr::int(0));
        let b = simplify(&b_plus.substitute(&at_zero));
        let c = simplify(&cq.expr.substitute(&at_zero));
        if !velocity_free(&a, n) || !velocity_free(&b, n) || !velocity_free(&c, n) {
            return None;
        }
        let rebuilt = Expr::sum(vec![
            Expr::mul(a.clone(), Expr::powi(qd.clone(), 2)),
            Expr::mul(b.clone(), qd.clone()),
            c.clone(),
        ]);
        if !simplify(&Expr::sub(cq.expr.clone(), rebuilt)).is_zero() {
            return None;
        }
        let c_val = Expr::sym(c_syms[i]);
        let expr = if a.is_zero() {
            if b.is_zero() {
                return None;
            }
            // linear: qd = (C - c)/b
            simplify(&Expr::div(Expr::sub(c_val, c), b))
        } else {
            // qd = (-b + s sqrt(b^2 - 4a(c - C))) / (2a)
            let disc = Expr::sub(
                Expr::powi(b.clone(), 2),
                Expr::product(vec![Expr::int(4), a.clone(), Expr::sub(c, c_val)]),
            );
            let s = branch_sign(seed.qd[j]);
            let root = Expr::mul(Expr::int(s), Expr::sqrt(disc));
            simplify(&Expr::div(
                Expr::add(Expr::neg(b), root),
                Expr::mul(Expr::int(2), a),
            ))
        };
        inversion[j] = Some(expr);
    }
    inversion.into_iter().collect()
}

/// Strategy 2: `C_i = sum_j M_ij qd_j^2 + v_i(t,q)` with rational `M`.
fn try_squares_system(
    family: &CommutingFamily,
    c_syms: &[Sym],
    seed: &InitialState,
    n: usize,
) -> Option<Vec<Expr>> {
    let mut m: Vec<Vec<Expr>> = vec![vec![Expr::int(0); n]; n];
    let mut v: Vec<Expr> = Vec::with_capacity(n);
    let mut at_zero = BTreeMap::new();
    for k in 0..n {
        at_zero.insert(Sym::vel(k), Expr::int(0));
    }
    for (i, cq) in family.integrals.iter().enumerate() {
        for j in 0..n {
            let dj = diff(&cq.expr, Sym::vel(j));
            // No linear part, constant quadratic coefficients.
            if !simplify(&dj.substitute(&at_zero)).is_zero() {
                return None;
            }
            let half_d2 = simplify(&Expr::mul(Expr::ratio(1, 2), diff(&dj, Sym::vel(j))));
            half_d2.as_num()?;
            for k in 0..n {
                if k != j && !simplify(&diff(&dj, Sym::vel(k))).is_zero() {
                    return None;
                }
            }
            m[i][j] = half_d2;
        }
        let vi = simplify(&cq.expr.substitute(&at_zero));
        if !velocity_free(&vi, n) {
            return None;
        }
        // Confirm structurally.
        let mut rebuilt = vec![vi.clone()];
        for j in 0..n {
            rebuilt.push(Expr::mul(m[i][j].clone(), Expr::powi(Expr::vel(j), 2)));
        }
        if !simplify(&Expr::sub(cq.expr.clone(), Expr::sum(rebuilt))).is_zero() {
            return None;
        }
        v.push(vi);
    }
    let det = crate::matrix::det(&m);
    if det.is_zero() {
        return None;
    }
    let minv = crate::matrix::inverse_adjugate(&m);
    // qd_j = s_j sqrt(sum_k Minv_jk (C_k - v_k))
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let terms: Vec<Expr> = (0..n)
            .map(|k| {
                Expr::mul(
                    minv[j][k].clone(),
                    Expr::sub(Expr::sym(c_syms[k]), v[k].clone()),
                )
            })
            .collect();
        let s = branch_sign(seed.qd[j]);
        out.push(simplify(&Expr::mul(
            Expr::int(s),
            Expr::sqrt(Expr::sum(terms)),
        )));
    }
    Some(out)
}

/// Axis-aligned `q`-line-integral from `base_q`, with symbolic
/// antidifferentiation per leg and quadrature kernels as fallback.
fn q_line_integral(
    integrands: &[Expr],
    base_q: &[f64],
    tol: f64,
) -> Result<Expr, LiouvilleError> {
    let n = integrands.len();
    let mut symbolic_terms: Vec<Expr> = Vec::new();
    let mut numeric_legs: Vec<Leg> = Vec::new();
    for j in 0..n {
        let lower = Num::from_f64(base_q[j]).ok_or_else(|| {
            LiouvilleError::ChartBoundary("non-finite base point".to_string())
        })?;
        let mut at_base = BTreeMap::new();
        for (k, b) in base_q.iter().enumerate().skip(j + 1) {
            let num = Num::from_f64(*b).ok_or_else(|| {
                LiouvilleError::ChartBoundary("non-finite base point".to_string())
            })?;
            at_base.insert(Sym::coord(k), Expr::num(num));
        }
        let integrand = simplify(&integrands[j].substitute(&at_base));
        if integrand.is_zero() {
            continue;
        }
        match crate::antideriv::antiderivative(&integrand, Sym::coord(j)) {
            Some(g) => {
                let mut at_lower = BTreeMap::new();
                at_lower.insert(Sym::coord(j), Expr::num(lower));
                let g_low = simplify(&g.substitute(&at_lower));
                symbolic_terms.push(simplify(&Expr::sub(g, g_low)));
            }
            None => numeric_legs.push(Leg {
                sweep: Sym::coord(j),
                lower: Expr::num(lower),
                integrand,
            }),
        }
    }
    if !numeric_legs.is_empty() {
        symbolic_terms.push(Expr::kernel(Kernel::path_integral(numeric_legs, tol)));
    }
    Ok(simplify(&Expr::sum(symbolic_terms)))
}

/// Builds the chart: extends the space with `C1..CN`, inverts the
/// velocities on the seed branch, forms `S` and the angles, and records
/// the chart sampling boxes.
pub fn build_chart(
    sys: &LagrangianSystem,
    family: &CommutingFamily,
    seed: &InitialState,
    base_q: &[f64],
    base_t: f64,
    params: &ParamValues,
) -> Result<ActionAngleChart, LiouvilleError> {
    let n = sys.dof();
    let labels = c_labels(n);
    let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    let space = sys
        .space()
        .extend_params(&label_refs)
        .map_err(|e| LiouvilleError::NameCollision(format!("{e}")))?;
    let c_syms: Vec<Sym> = labels
        .iter()
        .map(|l| space.param_sym(l).expect("just declared"))
        .collect();

    let (inversion, numeric_inversion) =
        invert_velocities(sys, family, &space, &c_syms, seed, params)?;

    // Substitution qd -> qd(t,q,C).
    let mut to_chart = BTreeMap::new();
    for k in 0..n {
        to_chart.insert(Sym::vel(k), inversion[k].clone());
    }

    // S = int p_j(t,q,qd(t,q,C)) dq^j.
    let p_on_chart: Vec<Expr> = sys
        .momenta()
        .iter()
        .map(|p| simplify(&p.substitute(&to_chart)))
        .collect();
    let generating = q_line_integral(&p_on_chart, base_q, 1e-10)?;

    // Theta^i = int g_jk d(qd^k)/dC_i dq^j (differentiation under the
    // integral via the explicit integrand).
    let g_on_chart: Vec<Vec<Expr>> = sys
        .hessian()
        .iter()
        .map(|row| row.iter().map(|e| simplify(&e.substitute(&to_chart))).collect())
        .collect();
    let mut thetas = Vec::with_capacity(n);
    for c_sym in &c_syms {
        let dinv: Vec<Expr> = inversion.iter().map(|e| diff(e, *c_sym)).collect();
        let integrands: Vec<Expr> = (0..n)
            .map(|j| {
                let terms: Vec<Expr> = (0..n)
                    .map(|k| Expr::mul(g_on_chart[j][k].clone(), dinv[k].clone()))
                    .collect();
                simplify(&Expr::sum(terms))
            })
            .collect();
        thetas.push(q_line_integral(&integrands, base_q, 1e-10)?);
    }

    // Pullbacks substitute C_i = C_i(t,q,qd).
    let mut to_state = BTreeMap::new();
    for (i, c_sym) in c_syms.iter().enumerate() {
        to_state.insert(*c_sym, family.integrals[i].expr.clone());
    }
    let theta_pullbacks: Vec<Expr> = thetas
        .iter()
        .map(|th| simplify(&th.substitute(&to_state)))
        .collect();

    // Chart boxes: velocities keep the sign of the seed.
    let mut boxes = BTreeMap::new();
    for k in 0..n {
        let s = branch_sign(seed.qd[k]);
        if s > 0 {
            boxes.insert(Sym::vel(k), (0.15, 1.4));
        } else {
            boxes.insert(Sym::vel(k), (-1.4, -0.15));
        }
        boxes.insert(Sym::coord(k), (-0.6, 0.6));
    }

    Ok(ActionAngleChart {
        space,
        c_syms,
        inversion,
        generating,
        thetas,
        theta_pullbacks,
        seed: seed.clone(),
        base_q: base_q.to_vec(),
        base_t,
        boxes,
        numeric_inversion,
    })
}

/// One produced integral with its validation summary.
#[derive(Clone, Debug)]
pub struct ChartIntegral {
    pub label: String,
    /// Expression in `(t, q, qd)` (pullback form).
    pub expr: Expr,
    pub status: ConservationStatus,
    /// Max observed drift along the validation trajectory (within the
    /// chart), when numeric validation ran.
    pub drift: Option<f64>,
}

/// Validates `D_t X == 0` on the chart; falls back to measuring drift
/// along a short trajectory started at the seed.
fn validate_on_chart(
    sys: &LagrangianSystem,
    chart: &ActionAngleChart,
    expr: &Expr,
    checker: &NumericEq,
    params: &ParamValues,
    salt: u64,
) -> (ConservationStatus, Option<f64>) {
    if let Ok(dtx) = sys.solution_derivative(expr) {
        let chk = chart.chart_checker(checker).salted(salt);
        if chk.is_zero(&dtx).is_equal() {
            return (ConservationStatus::SymbolicVerified, None);
        }
    }
    // Numeric fallback: drift along a short in-chart trajectory.
    let horizon = 0.35;
    let traj = integrate(sys, &chart.seed, chart.seed.t + horizon, 1e-11, params);
    let mut base: Option<f64> = None;
    let mut drift: f64 = 0.0;
    for k in 0..traj.len() {
        let mut a = Assignment::state(
            traj.times()[k],
            traj.q_at_node(k),
            traj.qd_at_node(k),
        );
        a.params = params.clone();
        // Stop at a branch flip (chart exit).
        let exits = (0..sys.dof()).any(|i| {
            branch_sign(traj.qd_at_node(k)[i]) != branch_sign(chart.seed.qd[i])
        });
        if exits {
            break;
        }
        match eval(expr, &a) {
            Ok(v) => match base {
                None => base = Some(v),
                Some(b) => drift = drift.max((v - b).abs()),
            },
            Err(_) => break,
        }
    }
    if base.is_some() && drift < 1e-6 {
        (ConservationStatus::NumericLocal, Some(drift))
    } else {
        (ConservationStatus::Failed, base.map(|_| drift))
    }
}

/// Autonomous case: `C_1` must be the energy; returns the temporal
/// integral `T = t - Theta^1` followed by the constants of motion
/// `Theta^2..Theta^N`, all in pullback form.
pub fn autonomous_integrals(
    sys: &LagrangianSystem,
    family: &CommutingFamily,
    chart: &ActionAngleChart,
    checker: &NumericEq,
    params: &ParamValues,
) -> Result<Vec<ChartIntegral>, LiouvilleError> {
    if !sys.is_autonomous() {
        return Err(LiouvilleError::ExpectedAutonomous);
    }
    let h = sys.hamiltonian_lagrangian_vars();
    if !checker.salted(0x1f_e0).holds(&family.integrals[0].expr, &h) {
        return Err(LiouvilleError::FirstIntegralNotEnergy);
    }
    let mut out = Vec::with_capacity(sys.dof());
    let temporal = simplify(&Expr::sub(Expr::time(), chart.theta_pullbacks[0].clone()));
    let (status, drift) = validate_on_chart(sys, chart, &temporal, checker, params, 0x7e_00);
    out.push(ChartIntegral {
        label: "T".to_string(),
        expr: temporal,
        status,
        drift,
    });
    for i in 1..sys.dof() {
        let th = chart.theta_pullbacks[i].clone();
        let (status, drift) =
            validate_on_chart(sys, chart, &th, checker, params, 0x7e_10 + i as u64);
        out.push(ChartIntegral {
            label: format!("Theta{}", i + 1),
            expr: th,
            status,
            drift,
        });
    }
    Ok(out)
}

/// Non-autonomous case: builds `K = dS/dt + H(t,q,qd(t,q,C))`, verifies
/// it is `q`-free, and returns the integrals
/// `Upsilon^i = int dK/dC_i dt - Theta^i` in pullback form. The further
/// reduction to constants of motion is emitted only for the
/// constant-coefficient `N <= 2` cases.
pub fn nonautonomous_integrals(
    sys: &LagrangianSystem,
    family: &CommutingFamily,
    chart: &ActionAngleChart,
    checker: &NumericEq,
    params: &ParamValues,
) -> Result<NonAutonomousOutcome, LiouvilleError> {
    if sys.is_autonomous() {
        return Err(LiouvilleError::ExpectedNonAutonomous);
    }
    let n = sys.dof();
    let mut to_chart = BTreeMap::new();
    for k in 0..n {
        to_chart.insert(Sym::vel(k), chart.inversion[k].clone());
    }
    let h_chart = simplify(
        &sys.hamiltonian_lagrangian_vars().substitute(&to_chart),
    );
    let k_expr = simplify(&Expr::add(diff(&chart.generating, Sym::Time), h_chart));
    for j in 0..n {
        let dk = diff(&k_expr, Sym::coord(j));
        if !checker.salted(0x4b_00 + j as u64).is_zero(&dk).is_equal() {
            return Err(LiouvilleError::KDependsOnQ(format!(
                "dK/dq{} does not vanish",
                j + 1
            )));
        }
    }

    let mut to_state = BTreeMap::new();
    for (i, c_sym) in chart.c_syms.iter().enumerate() {
        to_state.insert(*c_sym, family.integrals[i].expr.clone());
    }

    let base_t = Num::from_f64(chart.base_t)
        .ok_or_else(|| LiouvilleError::ChartBoundary("non-finite base time".to_string()))?;
    let mut upsilons = Vec::with_capacity(n);
    let mut dk_dc = Vec::with_capacity(n);
    for (i, c_sym) in chart.c_syms.iter().enumerate() {
        let rate = diff(&k_expr, *c_sym);
        dk_dc.push(rate.clone());
        let t_quadrature = match crate::antideriv::antiderivative(&rate, Sym::Time) {
            Some(g) => {
                let mut at_lower = BTreeMap::new();
                at_lower.insert(Sym::Time, Expr::num(base_t.clone()));
                let g_low = simplify(&g.substitute(&at_lower));
                simplify(&Expr::sub(g, g_low))
            }
            None => Expr::kernel(Kernel::path_integral(
                vec![Leg {
                    sweep: Sym::Time,
                    lower: Expr::num(base_t.clone()),
                    integrand: rate,
                }],
                1e-10,
            )),
        };
        let upsilon = simplify(&Expr::sub(t_quadrature, chart.thetas[i].clone()));
        let pullback = simplify(&upsilon.substitute(&to_state));
        let (status, drift) =
            validate_on_chart(sys, chart, &pullback, checker, params, 0x6f_00 + i as u64);
        upsilons.push(ChartIntegral {
            label: format!("Upsilon{}", i + 1),
            expr: pullback,
            status,
            drift,
        });
    }

    // Constants of motion from dK/dC_i d/dUpsilon^i F = 0.
    let mut constants = Vec::new();
    let mut note = None;
    match n {
        1 => {
            note = Some(
                "N = 1: the single Upsilon already solves the reduction trivially"
                    .to_string(),
            );
        }
        2 => {
            let coeffs_constant = dk_dc.iter().enumerate().all(|(i, r)| {
                let dt = diff(r, Sym::Time);
                let mut ok = checker
                    .salted(0x3c_00 + i as u64)
                    .is_zero(&dt)
                    .is_equal();
                for (j, c_sym) in chart.c_syms.iter().enumerate() {
                    ok = ok
                        && checker
                            .salted(0x3d_00 + (i * n + j) as u64)
                            .is_zero(&diff(r, *c_sym))
                            .is_equal();
                }
                ok
            });
            if coeffs_constant {
                // F = (dK/dC2) Upsilon^1 - (dK/dC1) Upsilon^2.
                let f = simplify(&Expr::sub(
                    Expr::mul(dk_dc[1].clone(), upsilons[0].expr.clone()),
                    Expr::mul(dk_dc[0].clone(), upsilons[1].expr.clone()),
                ));
                let (status, drift) =
                    validate_on_chart(sys, chart, &f, checker, params, 0x3e_00);
                constants.push(ChartIntegral {
                    label: "F".to_string(),
                    expr: f,
                    status,
                    drift,
                });
            } else {
                note = Some(
                    "dK/dC_i are not constants; the N = 2 ratio reduction does not apply"
                        .to_string(),
                );
            }
        }
        _ => {
            note = Some(format!(
                "reduction to constants of motion beyond N = 2 is not constructed (N = {n})"
            ));
        }
    }
    Ok((upsilons, constants, note))
}
