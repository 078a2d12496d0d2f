//! Numeric-kernel expression nodes.
//!
//! Three operations have no closed symbolic form in general and are
//! represented as opaque nodes that compute on demand at evaluation
//! points:
//!
//! * [`PathIntegral`] — a sum of one-dimensional integrals along an
//!   axis-aligned path, used for conserved-quantity reconstruction and
//!   generating functions when symbolic antidifferentiation fails;
//! * [`VelInverse`] — a component of the velocity map `qd(t,q,C)`
//!   obtained by damped-Newton inversion of `C_i = C_i(t,q,qd)`;
//! * [`MatInvEntry`] — an entry of a Hessian inverse computed by LU
//!   factorization at each point (used for `N > 4`, where the adjugate
//!   blows up).
//!
//! Kernels compare by creation id: two kernels are the same expression
//! node only if they were created by the same call. All carry a per-point
//! memoization cache (std builds only); evaluation is deterministic, so
//! the cache never changes observable values.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use crate::expr::Expr;
use crate::sym::Sym;

static NEXT_KERNEL_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_KERNEL_ID.fetch_add(1, AtomicOrdering::Relaxed)
}

/// Per-point memoization of kernel results. Results are deterministic,
/// so a cache miss and a recomputation are indistinguishable.
#[cfg(feature = "std")]
type CacheMap = BTreeMap<Vec<u64>, Result<Vec<f64>, crate::eval::EvalError>>;

#[cfg(feature = "std")]
#[derive(Default)]
pub(crate) struct PointCache {
    map: std::sync::Mutex<CacheMap>,
}

#[cfg(not(feature = "std"))]
#[derive(Default)]
pub(crate) struct PointCache;

#[cfg(feature = "std")]
const CACHE_CAP: usize = 1 << 14;

impl PointCache {
    #[cfg(feature = "std")]
    pub(crate) fn get(&self, key: &[u64]) -> Option<Result<Vec<f64>, crate::eval::EvalError>> {
        self.map.lock().unwrap().get(key).cloned()
    }

    #[cfg(feature = "std")]
    pub(crate) fn put(&self, key: Vec<u64>, val: Result<Vec<f64>, crate::eval::EvalError>) {
        let mut m = self.map.lock().unwrap();
        if m.len() < CACHE_CAP {
            m.insert(key, val);
        }
    }

    #[cfg(not(feature = "std"))]
    pub(crate) fn get(&self, _key: &[u64]) -> Option<Result<Vec<f64>, crate::eval::EvalError>> {
        None
    }

    #[cfg(not(feature = "std"))]
    pub(crate) fn put(&self, _key: Vec<u64>, _val: Result<Vec<f64>, crate::eval::EvalError>) {}
}

/// One leg of an axis-aligned integration path: the `sweep` symbol runs
/// from `lower` to its current value while the integrand is evaluated.
///
/// Builder contract: the integrand of leg `j` must not reference the
/// sweep symbols of later legs (the builder substitutes their base
/// values), and occurrences of earlier sweep symbols mean "final value".
#[derive(Clone, Debug)]
pub struct Leg {
    pub sweep: Sym,
    pub lower: Expr,
    pub integrand: Expr,
}

/// Sum of 1-D quadratures along an axis-aligned path, as an expression.
pub struct PathIntegral {
    id: u64,
    pub legs: Vec<Leg>,
    /// Absolute/relative quadrature tolerance.
    pub tol: f64,
    pub(crate) deps: Vec<Sym>,
    pub(crate) cache: PointCache,
}

impl PathIntegral {
    pub fn id(&self) -> u64 {
        self.id
    }
}

/// Shared data of a velocity inversion: the implicit system
/// `constraints_i(t,q,qd) = target_i` solved for the `qd` vector.
pub struct VelInverseSpec {
    /// `C_i(t,q,qd)` as declared.
    pub constraints: Vec<Expr>,
    /// Expressions supplying the target values (initially the `C_i`
    /// parameter symbols; pullbacks substitute them).
    pub targets: Vec<Expr>,
    /// Symbolic Jacobian d constraints_i / d qd_k.
    pub jacobian: Vec<Vec<Expr>>,
    /// Newton seed; also selects the branch.
    pub seed_vel: Vec<f64>,
    pub tol: f64,
    pub(crate) cache: PointCache,
}

/// One component of the inverted velocity map, as an expression.
pub struct VelInverse {
    id: u64,
    pub spec: Arc<VelInverseSpec>,
    pub component: usize,
    pub(crate) deps: Vec<Sym>,
}

impl VelInverse {
    pub fn id(&self) -> u64 {
        self.id
    }
}

/// Entry `(row, col)` of the inverse of a symbolic matrix, computed
/// numerically (LU) at each evaluation point.
pub struct MatInvEntry {
    id: u64,
    pub matrix: Arc<Vec<Vec<Expr>>>,
    pub row: usize,
    pub col: usize,
    pub(crate) deps: Vec<Sym>,
    pub(crate) cache: PointCache,
}

impl MatInvEntry {
    pub fn id(&self) -> u64 {
        self.id
    }
}

#[derive(Clone)]
pub enum Kernel {
    PathIntegral(Arc<PathIntegral>),
    VelInverse(Arc<VelInverse>),
    MatInvEntry(Arc<MatInvEntry>),
}

fn sorted_syms(set: BTreeSet<Sym>) -> Vec<Sym> {
    set.into_iter().collect()
}

impl Kernel {
    pub fn path_integral(legs: Vec<Leg>, tol: f64) -> Kernel {
        let mut syms = BTreeSet::new();
        for leg in &legs {
            leg.integrand.collect_syms(&mut syms);
            leg.lower.collect_syms(&mut syms);
            // The sweep symbol is the upper limit, hence a dependency even
            // if the integrand happens not to mention it.
            syms.insert(leg.sweep);
        }
        Kernel::PathIntegral(Arc::new(PathIntegral {
            id: fresh_id(),
            legs,
            tol,
            deps: sorted_syms(syms),
            cache: PointCache::default(),
        }))
    }

    pub fn vel_inverse(spec: Arc<VelInverseSpec>, component: usize) -> Kernel {
        let mut syms = BTreeSet::new();
        for c in &spec.constraints {
            c.collect_syms(&mut syms);
        }
        // The qd symbols inside the constraints are bound by the solve.
        let n = spec.seed_vel.len();
        for k in 0..n {
            syms.remove(&Sym::vel(k));
        }
        for t in &spec.targets {
            t.collect_syms(&mut syms);
        }
        Kernel::VelInverse(Arc::new(VelInverse {
            id: fresh_id(),
            spec,
            component,
            deps: sorted_syms(syms),
        }))
    }

    pub fn mat_inv_entry(matrix: Arc<Vec<Vec<Expr>>>, row: usize, col: usize) -> Kernel {
        let mut syms = BTreeSet::new();
        for r in matrix.iter() {
            for e in r {
                e.collect_syms(&mut syms);
            }
        }
        Kernel::MatInvEntry(Arc::new(MatInvEntry {
            id: fresh_id(),
            matrix,
            row,
            col,
            deps: sorted_syms(syms),
            cache: PointCache::default(),
        }))
    }

    /// (kind, id) pair, the total-order key for expression comparison.
    pub fn order_key(&self) -> (u8, u64) {
        match self {
            Kernel::PathIntegral(k) => (0, k.id),
            Kernel::VelInverse(k) => (1, k.id),
            Kernel::MatInvEntry(k) => (2, k.id),
        }
    }

    pub(crate) fn deps(&self) -> &[Sym] {
        match self {
            Kernel::PathIntegral(k) => &k.deps,
            Kernel::VelInverse(k) => &k.deps,
            Kernel::MatInvEntry(k) => &k.deps,
        }
    }

    pub(crate) fn collect_syms(&self, out: &mut BTreeSet<Sym>) {
        out.extend(self.deps().iter().copied());
    }

    pub(crate) fn node_count(&self) -> usize {
        match self {
            Kernel::PathIntegral(k) => k
                .legs
                .iter()
                .map(|l| l.integrand.node_count() + l.lower.node_count())
                .sum(),
            Kernel::VelInverse(k) => k
                .spec
                .constraints
                .iter()
                .chain(k.spec.targets.iter())
                .map(|e| e.node_count())
                .sum(),
            Kernel::MatInvEntry(k) => k
                .matrix
                .iter()
                .flat_map(|r| r.iter())
                .map(|e| e.node_count())
                .sum(),
        }
    }

    /// Rebuilds the kernel with substituted inner expressions. The result
    /// is a distinct kernel (fresh id, fresh cache).
    pub(crate) fn substitute(&self, map: &BTreeMap<Sym, Expr>) -> Kernel {
        match self {
            Kernel::PathIntegral(k) => {
                debug_assert!(
                    k.legs.iter().all(|l| !map.contains_key(&l.sweep)),
                    "cannot substitute a path-integral sweep symbol"
                );
                let legs = k
                    .legs
                    .iter()
                    .map(|l| Leg {
                        sweep: l.sweep,
                        lower: l.lower.substitute(map),
                        integrand: l.integrand.substitute(map),
                    })
                    .collect();
                Kernel::path_integral(legs, k.tol)
            }
            Kernel::VelInverse(k) => {
                // The qd symbols of the constraints are bound by the
                // solve: only map entries whose key actually occurs in
                // the constraints touch them, and those must not inject
                // aliased qd symbols. Targets are evaluated in the outer
                // environment and take the substitution unfiltered.
                let n = k.spec.seed_vel.len();
                let mut constraint_syms = BTreeSet::new();
                for c in k.spec.constraints.iter() {
                    c.collect_syms(&mut constraint_syms);
                }
                let inner: BTreeMap<Sym, Expr> = map
                    .iter()
                    .filter(|(s, _)| {
                        !matches!(s, Sym::Jet { order: 1, index } if (*index as usize) < n)
                            && constraint_syms.contains(s)
                    })
                    .map(|(s, e)| (*s, e.clone()))
                    .collect();
                debug_assert!(inner
                    .values()
                    .all(|e| (0..n).all(|i| !e.depends_on(Sym::vel(i)))));
                let spec = Arc::new(VelInverseSpec {
                    constraints: k.spec.constraints.iter().map(|c| c.substitute(&inner)).collect(),
                    targets: k.spec.targets.iter().map(|t| t.substitute(map)).collect(),
                    jacobian: k
                        .spec
                        .jacobian
                        .iter()
                        .map(|r| r.iter().map(|e| e.substitute(&inner)).collect())
                        .collect(),
                    seed_vel: k.spec.seed_vel.clone(),
                    tol: k.spec.tol,
                    cache: PointCache::default(),
                });
                Kernel::vel_inverse(spec, k.component)
            }
            Kernel::MatInvEntry(k) => {
                let m: Vec<Vec<Expr>> = k
                    .matrix
                    .iter()
                    .map(|r| r.iter().map(|e| e.substitute(map)).collect())
                    .collect();
                Kernel::mat_inv_entry(Arc::new(m), k.row, k.col)
            }
        }
    }

    /// Sibling component of a velocity-inverse kernel (same solve).
    pub fn vel_inverse_component(&self, component: usize) -> Option<Kernel> {
        match self {
            Kernel::VelInverse(k) => Some(Kernel::vel_inverse(k.spec.clone(), component)),
            _ => None,
        }
    }
}
