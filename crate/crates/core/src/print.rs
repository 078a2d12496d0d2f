//! Pretty printer.
//!
//! Output re-parses to a numerically equal expression for every
//! grammar-representable tree. Numeric-kernel nodes render as readable
//! but non-parseable `integral(...)` / `qdinv...` / `matinv...` forms;
//! they only ever appear in reports.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{Expr, Node};
use crate::kernel::Kernel;
use crate::num::Num;
use crate::sym::VariableSpace;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Add,
    Mul,
    Unary,
    Pow,
    Atom,
}

/// Renders an expression in the input grammar.
pub fn pretty(e: &Expr, space: &VariableSpace) -> String {
    render(e, space, Prec::Add)
}

fn parenthesize(s: String, needed: bool) -> String {
    if needed {
        format!("({s})")
    } else {
        s
    }
}

fn render_num(n: &Num, parent: Prec) -> String {
    let s = n.render();
    let own = if n.is_negative() {
        Prec::Unary
    } else if n.is_integer() {
        Prec::Atom
    } else {
        Prec::Mul // a/b
    };
    parenthesize(s, parent > own)
}

/// Splits a term into sign and magnitude rendering, for `a - b` output.
fn term_with_sign(e: &Expr, space: &VariableSpace) -> (bool, String) {
    match e.node() {
        Node::Num(n) if n.is_negative() => (true, render_num(&n.neg(), Prec::Add)),
        Node::Mul(fs) => {
            if let Node::Num(n) = fs[0].node() {
                if n.is_negative() {
                    let flipped = n.neg();
                    let mut factors: Vec<Expr> = fs.clone();
                    if flipped.is_one() && fs.len() > 1 {
                        factors.remove(0);
                    } else {
                        factors[0] = Expr::num(flipped);
                    }
                    return (true, render(&Expr::product(factors), space, Prec::Add));
                }
            }
            (false, render(e, space, Prec::Add))
        }
        _ => (false, render(e, space, Prec::Add)),
    }
}

fn render(e: &Expr, space: &VariableSpace, parent: Prec) -> String {
    match e.node() {
        Node::Num(n) => render_num(n, parent),
        Node::Sym(s) => space.name_of(*s),
        Node::Add(ts) => {
            let mut out = String::new();
            for (i, t) in ts.iter().enumerate() {
                let (neg, body) = term_with_sign(t, space);
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                } else if neg {
                    out.push_str(" - ");
                } else {
                    out.push_str(" + ");
                }
                out.push_str(&body);
            }
            parenthesize(out, parent > Prec::Add)
        }
        Node::Mul(ts) => {
            // Split into numerator and denominator factors.
            let mut nums: Vec<String> = Vec::new();
            let mut dens: Vec<String> = Vec::new();
            for f in ts {
                match f.node() {
                    Node::Num(n) if !n.is_integer() => {
                        // p/q constant: p joins the numerator, q the denominator.
                        let (p, q) = (n.value().numer().clone(), n.value().denom().clone());
                        let p_num = Num::from_rational(num_rational::BigRational::from_integer(p));
                        let q_num = Num::from_rational(num_rational::BigRational::from_integer(q));
                        if !p_num.is_one() {
                            nums.push(render_num(&p_num, Prec::Mul));
                        }
                        dens.push(render_num(&q_num, Prec::Pow));
                    }
                    Node::Pow(b, x) => {
                        if let Node::Num(n) = x.node() {
                            if n.is_negative() {
                                let flipped = Expr::pow(b.clone(), Expr::num(n.neg()));
                                dens.push(render(&crate::simplify::simplify(&flipped), space, Prec::Pow));
                                continue;
                            }
                        }
                        nums.push(render(f, space, Prec::Mul));
                    }
                    _ => nums.push(render(f, space, Prec::Mul)),
                }
            }
            let num_part = if nums.is_empty() {
                String::from("1")
            } else {
                nums.join("*")
            };
            let body = if dens.is_empty() {
                num_part
            } else if dens.len() == 1 {
                format!("{num_part}/{}", dens[0])
            } else {
                format!("{num_part}/({})", dens.join("*"))
            };
            parenthesize(body, parent > Prec::Mul)
        }
        Node::Pow(b, x) => {
            if let Node::Num(n) = x.node() {
                if *n == Num::ratio(1, 2) {
                    return format!("sqrt({})", render(b, space, Prec::Add));
                }
                if *n == Num::ratio(-1, 2) {
                    let s = format!("1/sqrt({})", render(b, space, Prec::Add));
                    return parenthesize(s, parent > Prec::Mul);
                }
                if n.is_negative() {
                    let flipped =
                        crate::simplify::simplify(&Expr::pow(b.clone(), Expr::num(n.neg())));
                    let s = format!("1/{}", render(&flipped, space, Prec::Pow));
                    return parenthesize(s, parent > Prec::Mul);
                }
            }
            let base = render(b, space, Prec::Atom);
            let exp = match x.node() {
                Node::Num(n) if n.is_integer() && !n.is_negative() => render_num(n, Prec::Pow),
                _ => format!("({})", render(x, space, Prec::Add)),
            };
            let s = format!("{base}^{exp}");
            parenthesize(s, parent > Prec::Pow)
        }
        Node::Call(f, args) => {
            let rendered: Vec<String> =
                args.iter().map(|a| render(a, space, Prec::Add)).collect();
            format!("{}({})", f.name(), rendered.join(", "))
        }
        Node::Kernel(k) => render_kernel(k, space),
    }
}

fn render_kernel(k: &Kernel, space: &VariableSpace) -> String {
    match k {
        Kernel::PathIntegral(p) => {
            let legs: Vec<String> = p
                .legs
                .iter()
                .map(|l| {
                    format!(
                        "integral({}, {}, {}, {})",
                        render(&l.integrand, space, Prec::Add),
                        space.name_of(l.sweep),
                        render(&l.lower, space, Prec::Add),
                        space.name_of(l.sweep),
                    )
                })
                .collect();
            legs.join(" + ")
        }
        Kernel::VelInverse(v) => {
            let targets: Vec<String> = v
                .spec
                .targets
                .iter()
                .map(|t| render(t, space, Prec::Add))
                .collect();
            format!("qdinv{}({})", v.component + 1, targets.join(", "))
        }
        Kernel::MatInvEntry(m) => format!("matinv_{}_{}", m.row + 1, m.col + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::simplify::simplify;
    use crate::sym::VariableSpace;

    fn roundtrip(src: &str, sp: &VariableSpace) {
        let e = simplify(&parse(src, sp).unwrap());
        let printed = pretty(&e, sp);
        let back = simplify(&parse(&printed, sp).unwrap());
        assert_eq!(e, back, "printed form `{printed}` of `{src}` did not round-trip");
    }

    #[test]
    fn structural_roundtrips() {
        let sp = VariableSpace::new(2, &["m", "k"]).unwrap();
        for src in [
            "qd1^2/2 + qd2^2/2 - k*(q1^2 + q2^2)/2",
            "sin(q1)*t - cos(q2)/m",
            "sqrt(2*q1 - qd2^2)",
            "q1^-3",
            "-q1 - 2*qd1 + 3/2",
            "atan2(q2, q1)^2",
            "exp(-t)*log(q1 + 2)",
            "1/(q1*qd1)",
            "(q1 + qd1)^(1/2)",
            "abs(q1)/q1",
            "2^-3*q1",
        ] {
            roundtrip(src, &sp);
        }
    }

    #[test]
    fn negative_leading_term_renders_with_minus() {
        let sp = VariableSpace::new(1, &[]).unwrap();
        let e = simplify(&parse("-q1 + qd1", &sp).unwrap());
        let s = pretty(&e, &sp);
        let back = simplify(&parse(&s, &sp).unwrap());
        assert_eq!(e, back);
    }

    #[test]
    fn rational_coefficients_render_as_fractions() {
        let sp = VariableSpace::new(1, &[]).unwrap();
        let e = simplify(&parse("qd1^2/2", &sp).unwrap());
        assert_eq!(pretty(&e, &sp), "qd1^2/2");
    }
}
