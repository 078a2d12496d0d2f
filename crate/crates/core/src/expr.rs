//! Immutable expression trees.
//!
//! Nodes are reference-counted so cloning subtrees during rewriting is
//! cheap. Structural equality and a total order are defined over the
//! whole tree; numeric-kernel nodes (quadratures, implicit inversions,
//! matrix-inverse entries) compare by their creation id.
//!
//! Construction performs only light normalization (subtraction and
//! division unfold into `+`/`*`/`^`); canonicalization lives in
//! [`crate::simplify`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::kernel::Kernel;
use crate::num::Num;
use crate::sym::Sym;

/// Built-in scalar functions. `sqrt` is not here: it normalizes to
/// `Pow(x, 1/2)` at construction so that power collection sees it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
    Exp,
    Log,
    Abs,
    Atan2,
}

impl Func {
    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Asin => "asin",
            Func::Acos => "acos",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Atan2 => "atan2",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }
}

#[derive(Clone)]
pub enum Node {
    Num(Num),
    Sym(Sym),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Call(Func, Vec<Expr>),
    Kernel(Kernel),
}

/// An immutable symbolic expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

// Arithmetic constructors intentionally mirror operator names; they are
// associated functions, not operator impls.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    // ---- constructors ------------------------------------------------

    pub fn num(n: Num) -> Expr {
        Expr::new(Node::Num(n))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Num::from_i64(n))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::num(Num::ratio(num, den))
    }

    pub fn sym(s: Sym) -> Expr {
        Expr::new(Node::Sym(s))
    }

    pub fn time() -> Expr {
        Expr::sym(Sym::Time)
    }

    pub fn coord(i: usize) -> Expr {
        Expr::sym(Sym::coord(i))
    }

    pub fn vel(i: usize) -> Expr {
        Expr::sym(Sym::vel(i))
    }

    pub fn accel(i: usize) -> Expr {
        Expr::sym(Sym::accel(i))
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        match terms.len() {
            0 => Expr::int(0),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::new(Node::Add(terms)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, b])
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        match factors.len() {
            0 => Expr::int(1),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::new(Node::Mul(factors)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::product(vec![a, b])
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::mul(Expr::int(-1), a)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::neg(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::mul(a, Expr::pow(b, Expr::int(-1)))
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        Expr::new(Node::Pow(base, exp))
    }

    pub fn powi(base: Expr, exp: i64) -> Expr {
        Expr::pow(base, Expr::int(exp))
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::pow(a, Expr::ratio(1, 2))
    }

    pub fn call(func: Func, args: Vec<Expr>) -> Expr {
        debug_assert_eq!(args.len(), func.arity());
        Expr::new(Node::Call(func, args))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::call(Func::Sin, vec![a])
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::call(Func::Cos, vec![a])
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::call(Func::Exp, vec![a])
    }

    pub fn log(a: Expr) -> Expr {
        Expr::call(Func::Log, vec![a])
    }

    pub fn abs(a: Expr) -> Expr {
        Expr::call(Func::Abs, vec![a])
    }

    pub fn asin(a: Expr) -> Expr {
        Expr::call(Func::Asin, vec![a])
    }

    pub fn atan2(y: Expr, x: Expr) -> Expr {
        Expr::call(Func::Atan2, vec![y, x])
    }

    pub fn kernel(k: Kernel) -> Expr {
        Expr::new(Node::Kernel(k))
    }

    // ---- inspection ---------------------------------------------------

    pub fn as_num(&self) -> Option<&Num> {
        match self.node() {
            Node::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<Sym> {
        match self.node() {
            Node::Sym(s) => Some(*s),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(n) if n.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(n) if n.is_one())
    }

    /// All symbols the value of this expression depends on.
    pub fn free_syms(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.collect_syms(&mut out);
        out
    }

    pub(crate) fn collect_syms(&self, out: &mut BTreeSet<Sym>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(s) => {
                out.insert(*s);
            }
            Node::Add(ts) | Node::Mul(ts) | Node::Call(_, ts) => {
                for t in ts {
                    t.collect_syms(out);
                }
            }
            Node::Pow(b, e) => {
                b.collect_syms(out);
                e.collect_syms(out);
            }
            Node::Kernel(k) => k.collect_syms(out),
        }
    }

    pub fn depends_on(&self, sym: Sym) -> bool {
        self.free_syms().contains(&sym)
    }

    /// Highest jet order among free symbols (0 when none appear).
    pub fn max_jet_order(&self) -> u8 {
        self.free_syms().iter().map(|s| s.jet_order()).max().unwrap_or(0)
    }

    /// Number of nodes in the tree, counting kernel integrands.
    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => 1,
            Node::Add(ts) | Node::Mul(ts) | Node::Call(_, ts) => {
                1 + ts.iter().map(|t| t.node_count()).sum::<usize>()
            }
            Node::Pow(b, e) => 1 + b.node_count() + e.node_count(),
            Node::Kernel(k) => 1 + k.node_count(),
        }
    }

    /// Replaces free symbols according to `map`. Must not target the sweep
    /// symbol of an embedded quadrature kernel (its occurrences double as
    /// the integration limit).
    pub fn substitute(&self, map: &BTreeMap<Sym, Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(ts) => {
                Expr::new(Node::Add(ts.iter().map(|t| t.substitute(map)).collect()))
            }
            Node::Mul(ts) => {
                Expr::new(Node::Mul(ts.iter().map(|t| t.substitute(map)).collect()))
            }
            Node::Call(f, ts) => {
                Expr::new(Node::Call(*f, ts.iter().map(|t| t.substitute(map)).collect()))
            }
            Node::Pow(b, e) => Expr::new(Node::Pow(b.substitute(map), e.substitute(map))),
            Node::Kernel(k) => Expr::new(Node::Kernel(k.substitute(map))),
        }
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Num(_) => 0,
            Node::Sym(_) => 1,
            Node::Pow(..) => 2,
            Node::Mul(_) => 3,
            Node::Add(_) => 4,
            Node::Call(..) => 5,
            Node::Kernel(_) => 6,
        }
    }
}

fn cmp_slices(a: &[Expr], b: &[Expr]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let c = x.cmp(y);
        if c != Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        let r = self.rank().cmp(&other.rank());
        if r != Ordering::Equal {
            return r;
        }
        match (self.node(), other.node()) {
            (Node::Num(a), Node::Num(b)) => a.cmp(b),
            (Node::Sym(a), Node::Sym(b)) => a.cmp(b),
            (Node::Pow(ab, ae), Node::Pow(bb, be)) => {
                ab.cmp(bb).then_with(|| ae.cmp(be))
            }
            (Node::Mul(a), Node::Mul(b)) | (Node::Add(a), Node::Add(b)) => cmp_slices(a, b),
            (Node::Call(af, aa), Node::Call(bf, ba)) => {
                af.cmp(bf).then_with(|| cmp_slices(aa, ba))
            }
            (Node::Kernel(a), Node::Kernel(b)) => a.order_key().cmp(&b.order_key()),
            _ => unreachable!("rank already distinguished variants"),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(n) => write!(f, "{n:?}"),
            Node::Sym(s) => write!(f, "{s:?}"),
            Node::Add(ts) => f.debug_tuple("Add").field(ts).finish(),
            Node::Mul(ts) => f.debug_tuple("Mul").field(ts).finish(),
            Node::Pow(b, e) => f.debug_tuple("Pow").field(b).field(e).finish(),
            Node::Call(func, ts) => f.debug_tuple(func.name()).field(ts).finish(),
            Node::Kernel(k) => write!(f, "Kernel#{:?}", k.order_key()),
        }
    }
}
