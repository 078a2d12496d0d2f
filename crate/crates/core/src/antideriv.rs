//! Symbolic antidifferentiation in one variable, table-driven.
//!
//! Covers what the line integrals of this crate actually produce:
//! generalized monomials `c(rest) * s^k`, trig/exponential of a linear
//! argument, and the square-root-of-quadratic forms arising in action
//! integrals (`(A + B s^2)^{+-1/2}` and the `s * (A + B s^2)^p`
//! u-substitution case). Anything else returns `None` and the caller
//! falls back to adaptive quadrature.

use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{Expr, Func, Node};
use crate::num::Num;
use crate::simplify::simplify;
use crate::sym::Sym;

/// Antiderivative `G` of `f` with respect to `s` (so `dG/ds == f`), when
/// the whole expression falls inside the table.
pub fn antiderivative(f: &Expr, s: Sym) -> Option<Expr> {
    let f = simplify(f);
    let terms: Vec<Expr> = match f.node() {
        Node::Add(ts) => ts.clone(),
        _ => vec![f.clone()],
    };
    let mut parts = Vec::with_capacity(terms.len());
    for t in terms {
        parts.push(antideriv_term(&t, s)?);
    }
    Some(simplify(&Expr::sum(parts)))
}

fn antideriv_term(term: &Expr, s: Sym) -> Option<Expr> {
    if !term.depends_on(s) {
        return Some(Expr::mul(term.clone(), Expr::sym(s)));
    }
    let factors: Vec<Expr> = match term.node() {
        Node::Mul(fs) => fs.clone(),
        _ => vec![term.clone()],
    };
    let mut rest: Vec<Expr> = Vec::new();
    let mut dependent: Vec<Expr> = Vec::new();
    for f in factors {
        if f.depends_on(s) {
            dependent.push(f);
        } else {
            rest.push(f);
        }
    }
    let core = match dependent.len() {
        1 => antideriv_core(&dependent[0], s),
        2 => antideriv_product(&dependent[0], &dependent[1], s),
        _ => None,
    }?;
    Some(Expr::mul(Expr::product(rest), core))
}

/// Exponent of `s` in a factor: `s -> 1`, `s^k -> k` (rational `k`).
fn power_of_s(f: &Expr, s: Sym) -> Option<Num> {
    if f.as_sym() == Some(s) {
        return Some(Num::one());
    }
    if let Node::Pow(b, x) = f.node() {
        if b.as_sym() == Some(s) {
            if let Node::Num(k) = x.node() {
                return Some(k.clone());
            }
        }
    }
    None
}

/// `a + b*s` decomposition with `a`, `b` free of `s`.
fn linear_in(e: &Expr, s: Sym) -> Option<(Expr, Expr)> {
    let b = crate::diff::diff(e, s);
    if b.depends_on(s) {
        return None;
    }
    let mut map = alloc::collections::BTreeMap::new();
    map.insert(s, Expr::int(0));
    let a = simplify(&e.substitute(&map));
    if a.depends_on(s) {
        return None;
    }
    Some((a, b))
}

/// `A + B*s^2` decomposition (no linear term) with `A`, `B` free of `s`.
fn pure_quadratic_in(e: &Expr, s: Sym) -> Option<(Expr, Expr)> {
    let d1 = crate::diff::diff(e, s);
    let d2 = crate::diff::diff(&d1, s);
    if d2.depends_on(s) {
        return None;
    }
    let b = simplify(&Expr::mul(Expr::ratio(1, 2), d2));
    let mut map = alloc::collections::BTreeMap::new();
    map.insert(s, Expr::int(0));
    let a = simplify(&e.substitute(&map));
    let lin = simplify(&d1.substitute(&map));
    if !lin.is_zero() || a.depends_on(s) {
        return None;
    }
    // Confirm the decomposition structurally.
    let rebuilt = Expr::add(
        a.clone(),
        Expr::mul(b.clone(), Expr::powi(Expr::sym(s), 2)),
    );
    if simplify(&Expr::sub(e.clone(), rebuilt)).is_zero() {
        Some((a, b))
    } else {
        None
    }
}

fn antideriv_core(f: &Expr, s: Sym) -> Option<Expr> {
    // s^k
    if let Some(k) = power_of_s(f, s) {
        if k.as_i64() == Some(-1) {
            return Some(Expr::log(Expr::abs(Expr::sym(s))));
        }
        let k1 = k.add(&Num::one());
        return Some(Expr::mul(
            Expr::num(k1.recip()),
            Expr::pow(Expr::sym(s), Expr::num(k1)),
        ));
    }
    // sin/cos/exp of a linear argument
    if let Node::Call(func, args) = f.node() {
        if matches!(func, Func::Sin | Func::Cos | Func::Exp) {
            let (_, b) = linear_in(&args[0], s)?;
            if b.is_zero() {
                return None;
            }
            let binv = Expr::powi(b, -1);
            return Some(match func {
                Func::Sin => Expr::neg(Expr::mul(binv, Expr::cos(args[0].clone()))),
                Func::Cos => Expr::mul(binv, Expr::sin(args[0].clone())),
                Func::Exp => Expr::mul(binv, Expr::exp(args[0].clone())),
                _ => unreachable!(),
            });
        }
    }
    // (A + B s^2)^(+-1/2) with numeric B < 0
    if let Node::Pow(base, x) = f.node() {
        if let Node::Num(p) = x.node() {
            let (a, b) = pure_quadratic_in(base, s)?;
            let b_num = b.as_num()?.clone();
            if !b_num.is_negative() {
                return None;
            }
            let root_negb = simplify(&Expr::sqrt(Expr::num(b_num.neg())));
            // asin(s * sqrt(-B) / sqrt(A))
            let arg = simplify(&Expr::product(vec![
                Expr::sym(s),
                root_negb.clone(),
                Expr::pow(a.clone(), Expr::ratio(-1, 2)),
            ]));
            let asin = Expr::asin(arg);
            if *p == Num::ratio(-1, 2) {
                return Some(simplify(&Expr::mul(
                    Expr::powi(root_negb, -1),
                    asin,
                )));
            }
            if *p == Num::ratio(1, 2) {
                // s sqrt(A+Bs^2)/2 + A asin(...)/(2 sqrt(-B))
                let first = Expr::product(vec![
                    Expr::ratio(1, 2),
                    Expr::sym(s),
                    Expr::sqrt(base.clone()),
                ]);
                let second = Expr::product(vec![
                    Expr::ratio(1, 2),
                    a,
                    Expr::powi(root_negb, -1),
                    asin,
                ]);
                return Some(simplify(&Expr::add(first, second)));
            }
        }
    }
    None
}

/// `s * (A + B s^2)^p` by u-substitution: `(A + B s^2)^(p+1) / (2B(p+1))`.
fn antideriv_product(f1: &Expr, f2: &Expr, s: Sym) -> Option<Expr> {
    for (lin, pow) in [(f1, f2), (f2, f1)] {
        if power_of_s(lin, s).map(|k| k.is_one()) != Some(true) {
            continue;
        }
        if let Node::Pow(base, x) = pow.node() {
            if let Node::Num(p) = x.node() {
                if p.as_i64() == Some(-1) {
                    continue;
                }
                let (_, b) = pure_quadratic_in(base, s)?;
                let b_num = b.as_num()?.clone();
                if b_num.is_zero() {
                    return None;
                }
                let p1 = p.add(&Num::one());
                let coeff = Num::ratio(1, 2).mul(&b_num.recip()).mul(&p1.recip());
                return Some(simplify(&Expr::mul(
                    Expr::num(coeff),
                    Expr::pow(base.clone(), Expr::num(p1)),
                )));
            }
        }
    }
    None
}
