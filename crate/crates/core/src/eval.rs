//! Numeric evaluation of expressions.
//!
//! Evaluation is total over an [`Env`] (symbol -> f64 lookup) and
//! reports domain violations as errors instead of letting NaN propagate:
//! log of a non-positive, fractional power of a negative, division by
//! zero, inverse-trig out of range, non-finite intermediates.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::expr::{Expr, Func, Node};
use crate::kernel::{Kernel, MatInvEntry, PathIntegral, VelInverse};
use crate::matrix;
use crate::quad;
use crate::sym::{Sym, MAX_JET_ORDER};

/// Why an evaluation failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalError {
    /// The environment has no value for this symbol.
    MissingSymbol(Sym),
    /// A mathematical domain violation, e.g. "log of non-positive".
    Domain(&'static str),
    /// The result or an intermediate overflowed to inf/NaN.
    NonFinite,
    /// Damped Newton failed to converge in a velocity inversion.
    NewtonDiverged,
    /// Adaptive quadrature could not reach its tolerance.
    QuadratureFailed,
    /// A numeric matrix inverse hit a singular matrix.
    SingularMatrix,
}

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EvalError::MissingSymbol(s) => write!(f, "no value assigned for {s:?}"),
            EvalError::Domain(msg) => write!(f, "domain violation: {msg}"),
            EvalError::NonFinite => write!(f, "non-finite result"),
            EvalError::NewtonDiverged => write!(f, "velocity inversion did not converge"),
            EvalError::QuadratureFailed => write!(f, "quadrature did not converge"),
            EvalError::SingularMatrix => write!(f, "singular matrix in numeric inverse"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// Source of numeric values for symbols.
pub trait Env {
    fn get(&self, sym: Sym) -> Result<f64, EvalError>;
}

/// Concrete assignment: time, jet values per order, parameter values.
#[derive(Clone, Debug, Default)]
pub struct Assignment {
    pub t: Option<f64>,
    /// `jets[order][index]`; a short vector means the remaining symbols
    /// of that order are unassigned.
    pub jets: [Vec<f64>; (MAX_JET_ORDER + 1) as usize],
    pub params: Vec<Option<f64>>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// State assignment `(t, q, qd)`.
    pub fn state(t: f64, q: &[f64], qd: &[f64]) -> Self {
        Assignment {
            t: Some(t),
            jets: [q.to_vec(), qd.to_vec(), Vec::new(), Vec::new(), Vec::new()],
            params: Vec::new(),
        }
    }

    pub fn with_param(mut self, index: u16, value: f64) -> Self {
        let idx = index as usize;
        if self.params.len() <= idx {
            self.params.resize(idx + 1, None);
        }
        self.params[idx] = Some(value);
        self
    }

    pub fn with_accel(mut self, qdd: &[f64]) -> Self {
        self.jets[2] = qdd.to_vec();
        self
    }
}

impl Env for Assignment {
    fn get(&self, sym: Sym) -> Result<f64, EvalError> {
        match sym {
            Sym::Time => self.t.ok_or(EvalError::MissingSymbol(sym)),
            Sym::Jet { order, index } => self.jets[order as usize]
                .get(index as usize)
                .copied()
                .ok_or(EvalError::MissingSymbol(sym)),
            Sym::Param(i) => self
                .params
                .get(i as usize)
                .copied()
                .flatten()
                .ok_or(EvalError::MissingSymbol(sym)),
        }
    }
}

/// Shadows a single symbol over a base environment.
pub struct Overlay<'a> {
    pub base: &'a dyn Env,
    pub sym: Sym,
    pub val: f64,
}

impl Env for Overlay<'_> {
    fn get(&self, sym: Sym) -> Result<f64, EvalError> {
        if sym == self.sym {
            Ok(self.val)
        } else {
            self.base.get(sym)
        }
    }
}

/// Shadows the velocity symbols `qd1..qdN` (Newton iterate).
struct VelOverlay<'a> {
    base: &'a dyn Env,
    v: &'a [f64],
}

impl Env for VelOverlay<'_> {
    fn get(&self, sym: Sym) -> Result<f64, EvalError> {
        if let Sym::Jet { order: 1, index } = sym {
            if let Some(x) = self.v.get(index as usize) {
                return Ok(*x);
            }
        }
        self.base.get(sym)
    }
}

/// Map-backed environment (used by random sampling).
pub struct MapEnv<'a>(pub &'a alloc::collections::BTreeMap<Sym, f64>);

impl Env for MapEnv<'_> {
    fn get(&self, sym: Sym) -> Result<f64, EvalError> {
        self.0.get(&sym).copied().ok_or(EvalError::MissingSymbol(sym))
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_pow(b: f64, x: f64) -> Result<f64, EvalError> {
    if b > 0.0 {
        return finite(b.powf(x));
    }
    if b == 0.0 {
        if x > 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        return Err(EvalError::Domain("zero raised to a negative power"));
    }
    // Negative base: only integral exponents are real.
    if x.fract() == 0.0 {
        finite(b.powf(x))
    } else {
        Err(EvalError::Domain("negative base with fractional exponent"))
    }
}

/// Clamp arguments a hair outside [-1, 1] back in (rounding slop at
/// chart boundaries); genuine violations stay errors.
fn unit_interval(u: f64) -> Result<f64, EvalError> {
    if u.abs() <= 1.0 {
        Ok(u)
    } else if u.abs() <= 1.0 + 1e-12 {
        Ok(u.signum())
    } else {
        Err(EvalError::Domain("inverse trig argument outside [-1, 1]"))
    }
}

fn eval_call(f: Func, args: &[f64]) -> Result<f64, EvalError> {
    let v = match f {
        Func::Sin => args[0].sin(),
        Func::Cos => args[0].cos(),
        Func::Tan => args[0].tan(),
        Func::Asin => unit_interval(args[0])?.asin(),
        Func::Acos => unit_interval(args[0])?.acos(),
        Func::Atan => args[0].atan(),
        Func::Exp => args[0].exp(),
        Func::Log => {
            if args[0] <= 0.0 {
                return Err(EvalError::Domain("log of non-positive"));
            }
            args[0].ln()
        }
        Func::Abs => args[0].abs(),
        Func::Atan2 => args[0].atan2(args[1]),
    };
    finite(v)
}

/// Evaluates an expression at a point.
pub fn eval(e: &Expr, env: &dyn Env) -> Result<f64, EvalError> {
    match e.node() {
        Node::Num(n) => Ok(n.to_f64()),
        Node::Sym(s) => env.get(*s),
        Node::Add(ts) => {
            let mut acc = 0.0;
            for t in ts {
                acc += eval(t, env)?;
            }
            finite(acc)
        }
        Node::Mul(ts) => {
            let mut acc = 1.0;
            for t in ts {
                acc *= eval(t, env)?;
            }
            finite(acc)
        }
        Node::Pow(b, x) => {
            let bv = eval(b, env)?;
            let xv = eval(x, env)?;
            eval_pow(bv, xv)
        }
        Node::Call(f, args) => {
            let mut vals = [0.0f64; 2];
            for (i, a) in args.iter().enumerate() {
                vals[i] = eval(a, env)?;
            }
            eval_call(*f, &vals[..args.len()])
        }
        Node::Kernel(k) => eval_kernel(k, env),
    }
}

fn cache_key(deps: &[Sym], env: &dyn Env) -> Result<Vec<u64>, EvalError> {
    deps.iter().map(|s| env.get(*s).map(f64::to_bits)).collect()
}

fn eval_kernel(k: &Kernel, env: &dyn Env) -> Result<f64, EvalError> {
    match k {
        Kernel::PathIntegral(p) => eval_path_integral(p, env),
        Kernel::VelInverse(v) => eval_vel_inverse(v, env),
        Kernel::MatInvEntry(m) => eval_mat_inv(m, env),
    }
}

fn eval_path_integral(p: &PathIntegral, env: &dyn Env) -> Result<f64, EvalError> {
    let key = cache_key(&p.deps, env)?;
    if let Some(hit) = p.cache.get(&key) {
        return hit.map(|v| v[0]);
    }
    let result = (|| {
        let mut total = 0.0;
        for leg in &p.legs {
            let lower = eval(&leg.lower, env)?;
            let upper = env.get(leg.sweep)?;
            let mut f = |x: f64| {
                let overlay = Overlay { base: env, sym: leg.sweep, val: x };
                eval(&leg.integrand, &overlay)
            };
            total += quad::adaptive(&mut f, lower, upper, p.tol)?;
        }
        finite(total)
    })();
    p.cache.put(key, result.map(|v| vec![v]));
    result
}

const NEWTON_MAX_ITER: usize = 80;

fn eval_vel_inverse(k: &VelInverse, env: &dyn Env) -> Result<f64, EvalError> {
    let spec = &k.spec;
    let n = spec.seed_vel.len();
    let key = cache_key(&k.deps, env)?;
    if let Some(hit) = spec.cache.get(&key) {
        return hit.map(|v| v[k.component]);
    }
    let result = (|| {
        let mut targets = vec![0.0; n];
        for (i, t) in spec.targets.iter().enumerate() {
            targets[i] = eval(t, env)?;
        }
        let scale = 1.0 + targets.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let residual = |v: &[f64]| -> Result<Vec<f64>, EvalError> {
            let overlay = VelOverlay { base: env, v };
            let mut r = vec![0.0; n];
            for i in 0..n {
                r[i] = eval(&spec.constraints[i], &overlay)? - targets[i];
            }
            Ok(r)
        };
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let mut v = spec.seed_vel.clone();
        let mut r = residual(&v)?;
        for _ in 0..NEWTON_MAX_ITER {
            if norm(&r) <= spec.tol * scale {
                return Ok(v);
            }
            let overlay = VelOverlay { base: env, v: &v };
            let mut jac = vec![0.0; n * n];
            for i in 0..n {
                for c in 0..n {
                    jac[i * n + c] = eval(&spec.jacobian[i][c], &overlay)?;
                }
            }
            let mut step: Vec<f64> = r.iter().map(|x| -x).collect();
            if !matrix::solve_in_place(&mut jac, &mut step, n) {
                return Err(EvalError::NewtonDiverged);
            }
            // Damping: halve the step until the residual shrinks.
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> =
                    v.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
                match residual(&trial) {
                    Ok(rt) if norm(&rt) < norm(&r) || lambda < 1e-4 => {
                        v = trial;
                        r = rt;
                        break;
                    }
                    _ if lambda < 1e-8 => return Err(EvalError::NewtonDiverged),
                    _ => lambda *= 0.5,
                }
            }
        }
        if norm(&r) <= spec.tol * scale * 10.0 {
            Ok(v)
        } else {
            Err(EvalError::NewtonDiverged)
        }
    })();
    spec.cache.put(key, result.clone());
    result.map(|v| v[k.component])
}

fn eval_mat_inv(k: &MatInvEntry, env: &dyn Env) -> Result<f64, EvalError> {
    let n = k.matrix.len();
    let key = cache_key(&k.deps, env)?;
    if let Some(hit) = k.cache.get(&key) {
        return hit.map(|v| v[k.row * n + k.col]);
    }
    let result = (|| {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = eval(&k.matrix[i][j], env)?;
            }
        }
        matrix::invert(&m, n).ok_or(EvalError::SingularMatrix)
    })();
    k.cache.put(key, result.clone());
    result.map(|v| v[k.row * n + k.col])
}
