//! Exact differentiation.
//!
//! Partial derivatives are purely structural; the total time derivative
//! raises jet orders (`q -> qd -> qdd -> ...`) and is capped so that the
//! Euler-Lagrange operator rewrites stay inside the representable jet
//! space. Numeric kernels differentiate exactly too: path integrals by
//! the Leibniz rule, velocity inversions by the implicit function
//! theorem, matrix-inverse entries by `d(M^-1) = -M^-1 dM M^-1`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::{Expr, Func, Node};
use crate::kernel::{Kernel, Leg, MatInvEntry, PathIntegral, VelInverse};
use crate::matrix;
use crate::simplify::simplify;
use crate::sym::{Sym, MAX_JET_ORDER};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiffError {
    /// `total_derivative` requires an input of jet order <= 1.
    InputBeyondVelocities,
    /// An internal rewrite would need jets beyond the representable order.
    JetOverflow,
}

impl fmt::Display for DiffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffError::InputBeyondVelocities => {
                write!(f, "total derivative input may depend on (t, q, qd) only")
            }
            DiffError::JetOverflow => write!(f, "expression exceeds the representable jet order"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DiffError {}

/// Exact partial derivative with respect to one symbol, simplified.
pub fn diff(e: &Expr, v: Sym) -> Expr {
    simplify(&diff_raw(e, v))
}

fn diff_raw(e: &Expr, v: Sym) -> Expr {
    match e.node() {
        Node::Num(_) => Expr::int(0),
        Node::Sym(s) => Expr::int(if *s == v { 1 } else { 0 }),
        Node::Add(ts) => Expr::sum(ts.iter().map(|t| diff_raw(t, v)).collect()),
        Node::Mul(ts) => {
            let mut terms = Vec::with_capacity(ts.len());
            for i in 0..ts.len() {
                let mut factors: Vec<Expr> = ts.clone();
                factors[i] = diff_raw(&ts[i], v);
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Pow(b, x) => {
            if let Node::Num(n) = x.node() {
                // d(b^n) = n b^(n-1) b'
                let n_minus_one = Expr::num(n.add(&crate::num::Num::from_i64(-1)));
                return Expr::product(vec![
                    x.clone(),
                    Expr::pow(b.clone(), n_minus_one),
                    diff_raw(b, v),
                ]);
            }
            // d(b^x) = b^x (x' log b + x b'/b)
            let db = diff_raw(b, v);
            let dx = diff_raw(x, v);
            Expr::mul(
                e.clone(),
                Expr::add(
                    Expr::mul(dx, Expr::log(b.clone())),
                    Expr::mul(x.clone(), Expr::div(db, b.clone())),
                ),
            )
        }
        Node::Call(f, args) => diff_call(*f, args, e, v),
        Node::Kernel(k) => diff_kernel(k, v),
    }
}

fn diff_call(f: Func, args: &[Expr], _whole: &Expr, v: Sym) -> Expr {
    let u = &args[0];
    let du = diff_raw(u, v);
    match f {
        Func::Sin => Expr::mul(Expr::cos(u.clone()), du),
        Func::Cos => Expr::neg(Expr::mul(Expr::sin(u.clone()), du)),
        Func::Tan => {
            // 1 + tan^2
            let sec2 = Expr::add(
                Expr::int(1),
                Expr::powi(Expr::call(Func::Tan, vec![u.clone()]), 2),
            );
            Expr::mul(sec2, du)
        }
        Func::Asin => Expr::mul(du, inv_sqrt_one_minus_sq(u)),
        Func::Acos => Expr::neg(Expr::mul(du, inv_sqrt_one_minus_sq(u))),
        Func::Atan => Expr::div(
            du,
            Expr::add(Expr::int(1), Expr::powi(u.clone(), 2)),
        ),
        Func::Exp => Expr::mul(Expr::exp(u.clone()), du),
        Func::Log => Expr::div(du, u.clone()),
        Func::Abs => Expr::mul(du, Expr::div(u.clone(), Expr::abs(u.clone()))),
        Func::Atan2 => {
            let y = &args[0];
            let x = &args[1];
            let dy = du;
            let dx = diff_raw(x, v);
            let num = Expr::sub(Expr::mul(x.clone(), dy), Expr::mul(y.clone(), dx));
            let den = Expr::add(Expr::powi(x.clone(), 2), Expr::powi(y.clone(), 2));
            Expr::div(num, den)
        }
    }
}

fn inv_sqrt_one_minus_sq(u: &Expr) -> Expr {
    Expr::pow(
        Expr::sub(Expr::int(1), Expr::powi(u.clone(), 2)),
        Expr::ratio(-1, 2),
    )
}

// ---- total time derivative ----------------------------------------------

/// Total time derivative `D_t = d/dt + qd d/dq + qdd d/dqd` for inputs of
/// jet order at most 1. The result may depend on accelerations.
pub fn total_derivative(e: &Expr) -> Result<Expr, DiffError> {
    if e.max_jet_order() > 1 {
        return Err(DiffError::InputBeyondVelocities);
    }
    total_derivative_jet(e)
}

/// Total time derivative for any representable jet order (used by the
/// Euler-Lagrange operators, where inputs transiently contain `qdd`).
pub fn total_derivative_jet(e: &Expr) -> Result<Expr, DiffError> {
    let mut terms = vec![diff_raw(e, Sym::Time)];
    for sym in e.free_syms() {
        if let Sym::Jet { order, index } = sym {
            if order + 1 > MAX_JET_ORDER {
                return Err(DiffError::JetOverflow);
            }
            let next = Expr::sym(Sym::Jet { order: order + 1, index });
            terms.push(Expr::mul(next, diff_raw(e, sym)));
        }
    }
    Ok(simplify(&Expr::sum(terms)))
}

// ---- kernel rules --------------------------------------------------------

fn diff_kernel(k: &Kernel, v: Sym) -> Expr {
    if !k.deps().contains(&v) {
        return Expr::int(0);
    }
    match k {
        Kernel::PathIntegral(p) => diff_path_integral(p, v),
        Kernel::VelInverse(vi) => diff_vel_inverse(vi, v),
        Kernel::MatInvEntry(m) => diff_mat_inv(m, v),
    }
}

fn diff_path_integral(p: &PathIntegral, v: Sym) -> Expr {
    let mut terms: Vec<Expr> = Vec::new();
    let mut new_legs: Vec<Leg> = Vec::new();
    for leg in &p.legs {
        if leg.sweep == v {
            // Endpoint contribution; occurrences of the sweep symbol in
            // the stored integrand mean its current (upper-limit) value.
            terms.push(leg.integrand.clone());
        } else {
            let di = diff_raw(&leg.integrand, v);
            let di = simplify(&di);
            if !di.is_zero() {
                new_legs.push(Leg {
                    sweep: leg.sweep,
                    lower: leg.lower.clone(),
                    integrand: di,
                });
            }
        }
        if leg.lower.depends_on(v) {
            let mut at_lower = BTreeMap::new();
            at_lower.insert(leg.sweep, leg.lower.clone());
            let boundary = leg.integrand.substitute(&at_lower);
            terms.push(Expr::neg(Expr::mul(boundary, diff_raw(&leg.lower, v))));
        }
    }
    if !new_legs.is_empty() {
        terms.push(Expr::kernel(Kernel::path_integral(new_legs, p.tol)));
    }
    Expr::sum(terms)
}

fn diff_vel_inverse(k: &VelInverse, v: Sym) -> Expr {
    let spec = &k.spec;
    let n = spec.seed_vel.len();
    // qd symbols evaluated at the inverted velocities.
    let mut at_solution = BTreeMap::new();
    let mut vel_nodes = Vec::with_capacity(n);
    for m in 0..n {
        let node = Expr::kernel(Kernel::vel_inverse(spec.clone(), m));
        at_solution.insert(Sym::vel(m), node.clone());
        vel_nodes.push(node);
    }
    // J_{ik} = d constraints_i / d qd_k at the solution.
    let jac: matrix::ExprMatrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|c| simplify(&spec.jacobian[i][c].substitute(&at_solution)))
                .collect()
        })
        .collect();
    let jinv = if n <= 4 {
        matrix::inverse_adjugate(&jac)
    } else {
        matrix::inverse_kernel(&jac)
    };
    // d qd_c / dv = sum_i Jinv_{ci} (d target_i/dv - dG_i/dv|qd fixed)
    let mut rhs = Vec::with_capacity(n);
    for i in 0..n {
        let dt = diff_raw(&spec.targets[i], v);
        let explicit = if matches!(v, Sym::Jet { order: 1, .. }) {
            Expr::int(0)
        } else {
            simplify(&diff_raw(&spec.constraints[i], v)).substitute(&at_solution)
        };
        rhs.push(simplify(&Expr::sub(dt, explicit)));
    }
    let terms: Vec<Expr> = (0..n)
        .map(|i| Expr::mul(jinv[k.component][i].clone(), rhs[i].clone()))
        .collect();
    Expr::sum(terms)
}

fn diff_mat_inv(k: &MatInvEntry, v: Sym) -> Expr {
    let n = k.matrix.len();
    let entry = |i: usize, j: usize| {
        Expr::kernel(Kernel::mat_inv_entry(k.matrix.clone(), i, j))
    };
    let mut terms = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let dm = simplify(&diff_raw(&k.matrix[r][c], v));
            if dm.is_zero() {
                continue;
            }
            terms.push(Expr::neg(Expr::product(vec![
                entry(k.row, r),
                dm,
                entry(c, k.col),
            ])));
        }
    }
    Expr::sum(terms)
}
