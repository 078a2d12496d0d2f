//! The Noether correspondence engine.
//!
//! Both directions of the correspondence between locally conserved
//! quantities `C(t,q,qd)` and variational symmetry generators
//! `P^i(t,q,qd)`:
//!
//! * `C -> P`: `P^i = g^-1^ij dC/dqd^j`;
//! * `P -> C`: reconstruction of `C` by a line integral of its gradient
//!   `(C_t, C_q, C_qd)`, assembled from `g`, `f`, and `P`, after the
//!   closure of that gradient has been verified.
//!
//! Also here: the Euler-Lagrange operators `E^(0..2)`, the symmetry
//! tests (equations-of-motion and variational), and the point-versus-
//! dynamical classifier.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::diff::{diff, total_derivative_jet, DiffError};
use crate::expr::Expr;
use crate::kernel::{Kernel, Leg};
use crate::lagrangian::LagrangianSystem;
use crate::num::Num;
use crate::sample::{EqVerdict, NumericEq};
use crate::simplify::simplify;
use crate::sym::Sym;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConservedKind {
    /// No explicit time dependence.
    ConstantOfMotion,
    /// Depends explicitly on `t`.
    IntegralOfMotion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConservationStatus {
    /// `D_t C == 0` held identically under sampling.
    SymbolicVerified,
    /// Continuous along monitored trajectories.
    NumericGlobal,
    /// Piecewise constant along monitored trajectories.
    NumericLocal,
    Failed,
}

/// A candidate conserved quantity with its verification metadata.
#[derive(Clone, Debug)]
pub struct ConservedQuantity {
    pub expr: Expr,
    /// Multipliers `Q_i = dC/dqd^i`.
    pub multipliers: Vec<Expr>,
    pub kind: ConservedKind,
    pub status: ConservationStatus,
}

impl ConservedQuantity {
    pub fn is_verified(&self) -> bool {
        matches!(
            self.status,
            ConservationStatus::SymbolicVerified | ConservationStatus::NumericLocal
        )
    }
}

/// Vertical symmetry generator `X = P^i d/dq^i`, with the on-solution
/// derivative of its components cached, plus an optional gauge function.
#[derive(Clone, Debug)]
pub struct SymmetryGenerator {
    components: Vec<Expr>,
    /// `D_t P^i` restricted to the solution space.
    dt_components: Vec<Expr>,
    tau: Option<Expr>,
}

#[derive(Clone, Debug)]
pub enum NoetherError {
    /// Components must depend on (t, q, qd) only.
    NotVertical,
    WrongArity { expected: usize, got: usize },
    /// The generator fails the variational-symmetry test.
    NotVariational,
    /// A mixed-partials (closure) check failed during reconstruction.
    ClosureFailure(String),
    /// Reconstruction produced something that is not conserved.
    ReconstructionInconsistent(String),
    /// Base point must be finite.
    BadBasePoint,
    Jet(DiffError),
}

impl fmt::Display for NoetherError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoetherError::NotVertical => {
                write!(f, "generator components may depend on (t, q, qd) only")
            }
            NoetherError::WrongArity { expected, got } => {
                write!(f, "expected {expected} components, got {got}")
            }
            NoetherError::NotVariational => {
                write!(f, "generator is not a variational symmetry")
            }
            NoetherError::ClosureFailure(s) => write!(f, "closure check failed: {s}"),
            NoetherError::ReconstructionInconsistent(s) => {
                write!(f, "reconstructed quantity inconsistent: {s}")
            }
            NoetherError::BadBasePoint => write!(f, "base point must be finite"),
            NoetherError::Jet(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NoetherError {}

impl From<DiffError> for NoetherError {
    fn from(e: DiffError) -> Self {
        NoetherError::Jet(e)
    }
}

impl SymmetryGenerator {
    pub fn new(
        sys: &LagrangianSystem,
        components: Vec<Expr>,
        tau: Option<Expr>,
    ) -> Result<Self, NoetherError> {
        if components.len() != sys.dof() {
            return Err(NoetherError::WrongArity {
                expected: sys.dof(),
                got: components.len(),
            });
        }
        let components: Vec<Expr> = components.iter().map(simplify).collect();
        if components.iter().any(|c| c.max_jet_order() > 1) {
            return Err(NoetherError::NotVertical);
        }
        if let Some(t) = &tau {
            if t.max_jet_order() > 1 {
                return Err(NoetherError::NotVertical);
            }
        }
        let dt_components = components
            .iter()
            .map(|c| sys.solution_derivative(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SymmetryGenerator {
            components,
            dt_components,
            tau: tau.map(|t| simplify(&t)),
        })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// `D_t P^i` on the solution space.
    pub fn dt_components(&self) -> &[Expr] {
        &self.dt_components
    }

    pub fn tau(&self) -> Option<&Expr> {
        self.tau.as_ref()
    }

    pub fn with_tau(mut self, tau: Expr) -> Self {
        self.tau = Some(simplify(&tau));
        self
    }

    /// Directional derivative `X^E |_ dF = P^i dF/dq^i + (D_t P^i) dF/dqd^i`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut terms = Vec::with_capacity(2 * self.components.len());
        for (i, (p, dp)) in self.components.iter().zip(&self.dt_components).enumerate() {
            terms.push(Expr::mul(p.clone(), diff(f, Sym::coord(i))));
            terms.push(Expr::mul(dp.clone(), diff(f, Sym::vel(i))));
        }
        simplify(&Expr::sum(terms))
    }
}

/// Outcome of the variational-symmetry test.
#[derive(Clone, Debug)]
pub struct VariationalReport {
    pub verdict: bool,
    /// `E^(0)_i(prX(L))`, which must vanish identically for a symmetry.
    pub residuals: Vec<Expr>,
    /// Boundary function `W`, filled once the conserved quantity is known
    /// (`W = P^i dL/dqd^i - C`).
    pub boundary_w: Option<Expr>,
}

#[derive(Clone, Debug)]
pub enum SymmetryClass {
    /// Strictly linear in the velocities: `dP^i/dqd^j == -tau delta^i_j`
    /// with `tau(t,q)`; projects to a point transformation of `(t, q)`.
    Point { tau: Expr, eta: Vec<Expr> },
    Dynamical,
}

/// The three Euler-Lagrange operator outputs `(E0_i, E1_i, E2_i)`.
pub type ElOperators = (Vec<Expr>, Vec<Expr>, Vec<Expr>);

/// Euler-Lagrange operators `E^(0)`, `E^(1)`, `E^(2)` applied to a
/// function of `(t, q, qd, qdd)`:
///
/// ```text
/// E0_i = dF/dq^i - D_t dF/dqd^i + D_t^2 dF/dqdd^i
/// E1_i = dF/dqd^i - 2 D_t dF/dqdd^i
/// E2_i = dF/dqdd^i
/// ```
pub fn el_operators(f: &Expr, dof: usize) -> Result<ElOperators, DiffError> {
    let mut e0 = Vec::with_capacity(dof);
    let mut e1 = Vec::with_capacity(dof);
    let mut e2 = Vec::with_capacity(dof);
    for i in 0..dof {
        let fq = diff(f, Sym::coord(i));
        let fqd = diff(f, Sym::vel(i));
        let fqdd = diff(f, Sym::accel(i));
        let dt_fqd = total_derivative_jet(&fqd)?;
        let dt_fqdd = total_derivative_jet(&fqdd)?;
        let dt2_fqdd = total_derivative_jet(&dt_fqdd)?;
        e0.push(simplify(&Expr::sum(vec![
            fq,
            Expr::neg(dt_fqd),
            dt2_fqdd.clone(),
        ])));
        e1.push(simplify(&Expr::sub(
            fqd,
            Expr::mul(Expr::int(2), dt_fqdd),
        )));
        e2.push(fqdd);
    }
    Ok((e0, e1, e2))
}

/// Classifies `C` by testing `D_t C == 0` on the solution space and the
/// presence of explicit time dependence.
pub fn is_conserved(
    sys: &LagrangianSystem,
    c: &Expr,
    checker: &NumericEq,
) -> ConservedQuantity {
    let c = simplify(c);
    let multipliers: Vec<Expr> = (0..sys.dof()).map(|i| diff(&c, Sym::vel(i))).collect();
    let kind = if checker.salted(0xc0_01).is_zero(&diff(&c, Sym::Time)).is_equal() {
        ConservedKind::ConstantOfMotion
    } else {
        ConservedKind::IntegralOfMotion
    };
    let status = match sys.solution_derivative(&c) {
        Ok(dtc) => {
            if checker.salted(0xc0_02).is_zero(&dtc).is_equal() {
                ConservationStatus::SymbolicVerified
            } else {
                ConservationStatus::Failed
            }
        }
        Err(_) => ConservationStatus::Failed,
    };
    ConservedQuantity { expr: c, multipliers, kind, status }
}

/// Tests whether the generator maps solutions to solutions:
/// `D_t^2 P^i - X^E(f^i) == 0` identically.
pub fn is_eom_symmetry(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    checker: &NumericEq,
) -> bool {
    for i in 0..sys.dof() {
        let dt2 = match sys.solution_derivative(&gen.dt_components()[i]) {
            Ok(e) => e,
            Err(_) => return false,
        };
        let action_on_f = gen.apply(&sys.force()[i]);
        let residual = simplify(&Expr::sub(dt2, action_on_f));
        if !checker.salted(0xe0_0100 + i as u64).is_zero(&residual).is_equal() {
            return false;
        }
    }
    true
}

/// Variational-symmetry test: `E^(0)_i(prX(L)) == 0` for all `i`, where
/// `prX(L) = P^i dL/dq^i + (D_t P^i) dL/dqd^i` uses the full (off-shell)
/// total derivative of the components.
pub fn is_variational_symmetry(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    checker: &NumericEq,
) -> Result<VariationalReport, DiffError> {
    let l = sys.lagrangian();
    let mut terms = Vec::with_capacity(2 * sys.dof());
    for (i, p) in gen.components().iter().enumerate() {
        terms.push(Expr::mul(p.clone(), diff(l, Sym::coord(i))));
        terms.push(Expr::mul(total_derivative_jet(p)?, diff(l, Sym::vel(i))));
    }
    let pr_x_l = simplify(&Expr::sum(terms));
    let (residuals, _, _) = el_operators(&pr_x_l, sys.dof())?;
    let mut verdict = true;
    for (i, r) in residuals.iter().enumerate() {
        if !checker.salted(0x7a_0000 + i as u64).is_zero(r).is_equal() {
            verdict = false;
        }
    }
    Ok(VariationalReport { verdict, residuals, boundary_w: None })
}

/// Boundary function `W = P^i dL/dqd^i - C` of a generated pair.
pub fn recover_w(sys: &LagrangianSystem, gen: &SymmetryGenerator, c: &Expr) -> Expr {
    let mut terms: Vec<Expr> = gen
        .components()
        .iter()
        .zip(sys.momenta())
        .map(|(p, m)| Expr::mul(p.clone(), m.clone()))
        .collect();
    terms.push(Expr::neg(c.clone()));
    simplify(&Expr::sum(terms))
}

/// Noether map `C -> P`: `P^i = g^-1^ij dC/dqd^j`.
pub fn c_to_p(
    sys: &LagrangianSystem,
    cq: &ConservedQuantity,
) -> Result<SymmetryGenerator, NoetherError> {
    let p = crate::matrix::matvec(sys.hessian_inv(), &cq.multipliers);
    SymmetryGenerator::new(sys, p, None)
}

/// Base point of the reconstruction path.
#[derive(Clone, Debug)]
pub struct BasePoint {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

impl BasePoint {
    pub fn origin(dof: usize) -> Self {
        BasePoint { t: 0.0, q: vec![0.0; dof], qd: vec![0.0; dof] }
    }
}

/// Noether map `P -> C` by line integration of the gradient
/// `(C_t, C_{q^k}, C_{qd^k})` along the axis-aligned path
/// `base -> (t, q0, qd0) -> (t, q, qd0) -> (t, q, qd)`.
///
/// The gradient is assembled from the system matrices, its closure is
/// verified first (so the value is path independent), each leg is
/// antidifferentiated symbolically when possible and otherwise becomes a
/// quadrature kernel. The reconstructed `C` vanishes at the base point;
/// the additive constant is the caller's to restore.
pub fn p_to_c(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    base: &BasePoint,
    checker: &NumericEq,
) -> Result<ConservedQuantity, NoetherError> {
    let n = sys.dof();
    let report = is_variational_symmetry(sys, gen, checker)?;
    if !report.verdict {
        return Err(NoetherError::NotVariational);
    }

    // C_{qd^k} = g_kj P^j
    let c_qd = crate::matrix::matvec(sys.hessian(), gen.components());
    // A = g_ij f^i P^j
    let mut a_terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            a_terms.push(Expr::product(vec![
                sys.hessian()[i][j].clone(),
                sys.force()[i].clone(),
                gen.components()[j].clone(),
            ]));
        }
    }
    let gfp = simplify(&Expr::sum(a_terms));
    // C_{q^k} = -((gfP)_{qd^k} + (g_kj P^j)_t + qd^i (g_kj P^j)_{q^i})
    let mut c_q = Vec::with_capacity(n);
    for k in 0..n {
        let gkp = &c_qd[k];
        let mut terms = vec![diff(&gfp, Sym::vel(k)), diff(gkp, Sym::Time)];
        for i in 0..n {
            terms.push(Expr::mul(Expr::vel(i), diff(gkp, Sym::coord(i))));
        }
        c_q.push(simplify(&Expr::neg(Expr::sum(terms))));
    }
    // C_t = -gfP - qd^k C_{q^k}
    let mut t_terms = vec![Expr::neg(gfp)];
    for k in 0..n {
        t_terms.push(Expr::neg(Expr::mul(Expr::vel(k), c_q[k].clone())));
    }
    let c_t = simplify(&Expr::sum(t_terms));

    verify_closure(&c_t, &c_q, &c_qd, n, checker)?;

    // Axis-aligned path: t, then q^0..q^(N-1), then qd^0..qd^(N-1).
    let mut path: Vec<(Sym, f64, Expr)> = Vec::with_capacity(2 * n + 1);
    path.push((Sym::Time, base.t, c_t));
    for k in 0..n {
        path.push((Sym::coord(k), base.q[k], c_q[k].clone()));
    }
    for k in 0..n {
        path.push((Sym::vel(k), base.qd[k], c_qd[k].clone()));
    }

    let mut symbolic_terms: Vec<Expr> = Vec::new();
    let mut numeric_legs: Vec<Leg> = Vec::new();
    for (idx, (sweep, lower, gradient)) in path.iter().enumerate() {
        let lower_num = Num::from_f64(*lower).ok_or(NoetherError::BadBasePoint)?;
        // Later path symbols sit at their base values on this leg.
        let mut at_base = BTreeMap::new();
        for (later_sym, later_lower, _) in &path[idx + 1..] {
            let v = Num::from_f64(*later_lower).ok_or(NoetherError::BadBasePoint)?;
            at_base.insert(*later_sym, Expr::num(v));
        }
        let integrand = simplify(&gradient.substitute(&at_base));
        if integrand.is_zero() {
            continue;
        }
        match crate::antideriv::antiderivative(&integrand, *sweep) {
            Some(g) => {
                let mut at_lower = BTreeMap::new();
                at_lower.insert(*sweep, Expr::num(lower_num));
                let g_low = simplify(&g.substitute(&at_lower));
                symbolic_terms.push(simplify(&Expr::sub(g, g_low)));
            }
            None => numeric_legs.push(Leg {
                sweep: *sweep,
                lower: Expr::num(lower_num),
                integrand,
            }),
        }
    }
    if !numeric_legs.is_empty() {
        symbolic_terms.push(Expr::kernel(Kernel::path_integral(numeric_legs, 1e-10)));
    }
    let c = simplify(&Expr::sum(symbolic_terms));

    // The reconstruction must be conserved and reproduce its gradient.
    let dtc = sys.solution_derivative(&c)?;
    if !checker.salted(0x9c_01).is_zero(&dtc).is_equal() {
        return Err(NoetherError::ReconstructionInconsistent(String::from(
            "D_t C does not vanish",
        )));
    }
    for k in 0..n {
        let got = diff(&c, Sym::vel(k));
        if !checker.salted(0x9c_10 + k as u64).holds(&got, &c_qd[k]) {
            return Err(NoetherError::ReconstructionInconsistent(format!(
                "dC/dqd{} does not match g_kj P^j",
                k + 1
            )));
        }
    }
    Ok(is_conserved(sys, &c, checker))
}

fn verify_closure(
    c_t: &Expr,
    c_q: &[Expr],
    c_qd: &[Expr],
    n: usize,
    checker: &NumericEq,
) -> Result<(), NoetherError> {
    let fail = |label: String, verdict: EqVerdict| -> Result<(), NoetherError> {
        match verdict {
            EqVerdict::Equal => Ok(()),
            EqVerdict::NotEqual(w) => Err(NoetherError::ClosureFailure(format!(
                "{label}: lhs {} vs rhs {} at {:?}",
                w.lhs, w.rhs, w.point
            ))),
            EqVerdict::Inconclusive => Err(NoetherError::ClosureFailure(format!(
                "{label}: sampling inconclusive"
            ))),
        }
    };
    for k in 0..n {
        fail(
            format!("d C_t/d q{} vs d C_q{}/d t", k + 1, k + 1),
            checker
                .salted(0xc1_0000 + k as u64)
                .check(&diff(c_t, Sym::coord(k)), &diff(&c_q[k], Sym::Time)),
        )?;
        fail(
            format!("d C_t/d qd{} vs d C_qd{}/d t", k + 1, k + 1),
            checker
                .salted(0xc2_0000 + k as u64)
                .check(&diff(c_t, Sym::vel(k)), &diff(&c_qd[k], Sym::Time)),
        )?;
        for l in 0..n {
            fail(
                format!("d C_q{}/d q{} symmetry", k + 1, l + 1),
                checker.salted(0xc3_0000 + (k * n + l) as u64).check(
                    &diff(&c_q[k], Sym::coord(l)),
                    &diff(&c_q[l], Sym::coord(k)),
                ),
            )?;
            fail(
                format!("d C_q{}/d qd{} vs d C_qd{}/d q{}", k + 1, l + 1, l + 1, k + 1),
                checker.salted(0xc4_0000 + (k * n + l) as u64).check(
                    &diff(&c_q[k], Sym::vel(l)),
                    &diff(&c_qd[l], Sym::coord(k)),
                ),
            )?;
            fail(
                format!("d C_qd{}/d qd{} symmetry", k + 1, l + 1),
                checker.salted(0xc5_0000 + (k * n + l) as u64).check(
                    &diff(&c_qd[k], Sym::vel(l)),
                    &diff(&c_qd[l], Sym::vel(k)),
                ),
            )?;
        }
    }
    Ok(())
}

/// Point-vs-dynamical classification of a generator.
pub fn classify(
    sys: &LagrangianSystem,
    gen: &SymmetryGenerator,
    checker: &NumericEq,
) -> SymmetryClass {
    let n = sys.dof();
    let tau = simplify(&Expr::neg(diff(&gen.components()[0], Sym::vel(0))));
    // Kronecker pattern dP^i/dqd^j == -tau delta^i_j.
    for i in 0..n {
        for j in 0..n {
            let lhs = diff(&gen.components()[i], Sym::vel(j));
            let rhs = if i == j {
                simplify(&Expr::neg(tau.clone()))
            } else {
                Expr::int(0)
            };
            if !checker.salted(0xc1a_000 + (i * n + j) as u64).holds(&lhs, &rhs) {
                return SymmetryClass::Dynamical;
            }
        }
    }
    // tau must not depend on velocities.
    for k in 0..n {
        if !checker
            .salted(0xc1b_000 + k as u64)
            .is_zero(&diff(&tau, Sym::vel(k)))
            .is_equal()
        {
            return SymmetryClass::Dynamical;
        }
    }
    // eta^i = P^i + tau qd^i, verified velocity-free.
    let mut eta = Vec::with_capacity(n);
    for i in 0..n {
        let e = simplify(&Expr::add(
            gen.components()[i].clone(),
            Expr::mul(tau.clone(), Expr::vel(i)),
        ));
        for k in 0..n {
            if !checker
                .salted(0xc1c_000 + (i * n + k) as u64)
                .is_zero(&diff(&e, Sym::vel(k)))
                .is_equal()
            {
                return SymmetryClass::Dynamical;
            }
        }
        eta.push(e);
    }
    SymmetryClass::Point { tau, eta }
}
