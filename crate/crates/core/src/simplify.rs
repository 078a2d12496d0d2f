//! Expression canonicalization.
//!
//! Scope is deliberately narrow: flattening, exact constant folding,
//! like-term/like-factor collection, integer-power rules, and the trig
//! Pythagorean identity. Semantic equality beyond that is the job of
//! [`crate::sample::NumericEq`]; the simplifier only has to be sound
//! (value-preserving wherever the input is defined) and idempotent.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::expr::{Expr, Func, Node};
use crate::num::Num;

/// Canonicalizes an expression. Deterministic and idempotent:
/// `simplify(simplify(e)) == simplify(e)`.
pub fn simplify(e: &Expr) -> Expr {
    match e.node() {
        Node::Num(_) | Node::Sym(_) | Node::Kernel(_) => e.clone(),
        Node::Add(ts) => {
            let parts: Vec<Expr> = ts.iter().map(simplify).collect();
            collect_add(parts)
        }
        Node::Mul(ts) => {
            let parts: Vec<Expr> = ts.iter().map(simplify).collect();
            collect_mul(parts)
        }
        Node::Pow(b, x) => simplify_pow(simplify(b), simplify(x)),
        Node::Call(f, args) => {
            let parts: Vec<Expr> = args.iter().map(simplify).collect();
            simplify_call(*f, parts)
        }
    }
}

/// Splits a canonical term into (rational coefficient, non-constant core).
/// `None` core means the term is a pure constant.
fn split_coeff(t: &Expr) -> (Num, Option<Expr>) {
    match t.node() {
        Node::Num(n) => (n.clone(), None),
        Node::Mul(fs) => {
            if let Node::Num(n) = fs[0].node() {
                let rest: Vec<Expr> = fs[1..].to_vec();
                (n.clone(), Some(Expr::product(rest)))
            } else {
                (Num::one(), Some(t.clone()))
            }
        }
        _ => (Num::one(), Some(t.clone())),
    }
}

fn term_from(coeff: Num, core: Expr) -> Expr {
    if coeff.is_one() {
        return core;
    }
    let mut factors = vec![Expr::num(coeff)];
    match core.node() {
        Node::Mul(fs) => factors.extend(fs.iter().cloned()),
        _ => factors.push(core),
    }
    Expr::product(factors)
}

/// Matches `sin(u)^2` / `cos(u)^2`, returning `u`.
fn square_of(core: &Expr, f: Func) -> Option<Expr> {
    if let Node::Pow(b, x) = core.node() {
        if let Node::Num(n) = x.node() {
            if n.as_i64() == Some(2) {
                if let Node::Call(g, args) = b.node() {
                    if *g == f {
                        return Some(args[0].clone());
                    }
                }
            }
        }
    }
    None
}

fn collect_add(parts: Vec<Expr>) -> Expr {
    let mut constant = Num::zero();
    let mut coeffs: BTreeMap<Expr, Num> = BTreeMap::new();
    let mut stack = parts;
    stack.reverse();
    while let Some(t) = stack.pop() {
        if let Node::Add(inner) = t.node() {
            for x in inner.iter().rev() {
                stack.push(x.clone());
            }
            continue;
        }
        let (c, core) = split_coeff(&t);
        match core {
            None => constant = constant.add(&c),
            Some(core) => {
                // Distribute a numeric coefficient over a sum so that
                // -(a + b) and 2*(a + b) merge with sibling terms.
                if let Node::Add(sub) = core.node() {
                    for s in sub.iter().rev() {
                        stack.push(collect_mul(vec![Expr::num(c.clone()), s.clone()]));
                    }
                    continue;
                }
                let entry = coeffs.entry(core).or_insert_with(Num::zero);
                *entry = entry.add(&c);
            }
        }
    }

    // c1*sin(u)^2 + c2*cos(u)^2  ->  c2 + (c1-c2)*sin(u)^2
    let cos_args: Vec<Expr> = coeffs
        .keys()
        .filter_map(|core| square_of(core, Func::Cos))
        .collect();
    for u in cos_args {
        let cos_core = Expr::powi(Expr::cos(u.clone()), 2);
        let sin_core = Expr::powi(Expr::sin(u.clone()), 2);
        let c2 = match coeffs.remove(&cos_core) {
            Some(c) => c,
            None => continue,
        };
        constant = constant.add(&c2);
        let c1 = coeffs.remove(&sin_core).unwrap_or_else(Num::zero);
        let new = c1.add(&c2.neg());
        if !new.is_zero() {
            coeffs.insert(sin_core, new);
        }
    }

    let mut terms: Vec<Expr> = coeffs
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(core, c)| term_from(c, core))
        .collect();
    if !constant.is_zero() || terms.is_empty() {
        terms.push(Expr::num(constant));
    }
    terms.sort();
    Expr::sum(terms)
}

/// Splits a canonical factor into (base, exponent).
fn split_power(f: &Expr) -> (Expr, Expr) {
    if let Node::Pow(b, x) = f.node() {
        (b.clone(), x.clone())
    } else {
        (f.clone(), Expr::int(1))
    }
}

fn collect_mul(parts: Vec<Expr>) -> Expr {
    let mut constant = Num::one();
    let mut powers: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
    let mut order: Vec<Expr> = Vec::new();
    let mut stack = parts;
    stack.reverse();
    while let Some(f) = stack.pop() {
        match f.node() {
            Node::Mul(inner) => {
                for x in inner.iter().rev() {
                    stack.push(x.clone());
                }
            }
            Node::Num(n) => {
                if n.is_zero() {
                    return Expr::int(0);
                }
                constant = constant.mul(n);
            }
            _ => {
                let (base, exp) = split_power(&f);
                if !powers.contains_key(&base) {
                    order.push(base.clone());
                }
                powers.entry(base).or_default().push(exp);
            }
        }
    }

    let mut factors: Vec<Expr> = Vec::new();
    for base in order {
        let exps = powers.remove(&base).expect("tracked base");
        let exp = if exps.len() == 1 {
            exps.into_iter().next().unwrap()
        } else {
            collect_add(exps)
        };
        if exp.is_zero() {
            continue;
        }
        let powed = simplify_pow(base, exp);
        match powed.node() {
            Node::Num(n) => {
                if n.is_zero() {
                    return Expr::int(0);
                }
                constant = constant.mul(n);
            }
            Node::Mul(fs) => factors.extend(fs.iter().cloned()),
            _ => factors.push(powed),
        }
    }

    if factors.is_empty() {
        return Expr::num(constant);
    }
    factors.sort();
    if !constant.is_one() {
        factors.insert(0, Expr::num(constant));
    }
    Expr::product(factors)
}

fn simplify_pow(base: Expr, exp: Expr) -> Expr {
    if let Node::Num(x) = exp.node() {
        if x.is_zero() {
            return Expr::int(1);
        }
        if x.is_one() {
            return base;
        }
        if let Node::Num(b) = base.node() {
            if let Some(i) = x.as_i64() {
                if let Some(folded) = b.pow_i64(i) {
                    return Expr::num(folded);
                }
            } else if b.is_zero() && !x.is_negative() {
                return Expr::int(0);
            } else if b.is_one() {
                return Expr::int(1);
            } else if *x == Num::ratio(1, 2) {
                if let Some(r) = b.sqrt_exact() {
                    return Expr::num(r);
                }
            } else if *x == Num::ratio(-1, 2) && !b.is_zero() {
                if let Some(r) = b.recip().sqrt_exact() {
                    return Expr::num(r);
                }
            }
        }
        if let Some(i) = x.as_i64() {
            // (a*b)^n -> a^n * b^n, sound for integer n.
            if let Node::Mul(fs) = base.node() {
                let parts: Vec<Expr> = fs
                    .iter()
                    .map(|f| simplify_pow(f.clone(), Expr::int(i)))
                    .collect();
                return collect_mul(parts);
            }
            // (x^m)^n -> x^(m*n) for integer m, n.
            if let Node::Pow(b2, x2) = base.node() {
                if let Node::Num(m) = x2.node() {
                    if let Some(m) = m.as_i64() {
                        return simplify_pow(b2.clone(), Expr::int(m * i));
                    }
                }
            }
        }
    }
    if base.is_one() {
        return Expr::int(1);
    }
    Expr::pow(base, exp)
}

fn simplify_call(f: Func, args: Vec<Expr>) -> Expr {
    if let Node::Num(n) = args[0].node() {
        match f {
            Func::Sin | Func::Tan | Func::Asin | Func::Atan if n.is_zero() => {
                return Expr::int(0)
            }
            Func::Cos | Func::Exp if n.is_zero() => return Expr::int(1),
            Func::Log if n.is_one() => return Expr::int(0),
            Func::Abs => {
                return Expr::num(if n.is_negative() { n.neg() } else { n.clone() })
            }
            _ => {}
        }
    }
    Expr::call(f, args)
}
