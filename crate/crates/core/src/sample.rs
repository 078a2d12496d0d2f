//! Probabilistic expression-identity checking.
//!
//! Semantic equality of expressions is decided by sampling random points
//! in a box and comparing values with a relative tolerance. Domain
//! errors reject the sample (bounded retries), so identities over
//! partial domains (square roots, logs, inverse Hessians) still get
//! checked on their natural domain. The verdict is three-valued: a
//! domain that rejects every sample is `Inconclusive`, not `Equal`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{eval, MapEnv};
use crate::expr::Expr;
use crate::simplify::simplify;
use crate::sym::Sym;

/// Counterexample from a failed comparison.
#[derive(Clone, Debug)]
pub struct Witness {
    pub point: BTreeMap<Sym, f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub enum EqVerdict {
    Equal,
    NotEqual(Witness),
    /// Every sample hit a domain error; nothing was decided.
    Inconclusive,
}

impl EqVerdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, EqVerdict::Equal)
    }
}

/// Sampling configuration for numeric identity checks.
#[derive(Clone, Debug)]
pub struct NumericEq {
    pub trials: u32,
    pub tol: f64,
    pub default_box: (f64, f64),
    /// Per-symbol sampling boxes (chart restrictions, singularity
    /// avoidance).
    pub boxes: BTreeMap<Sym, (f64, f64)>,
    /// Symbols held at fixed values instead of being sampled.
    pub pinned: BTreeMap<Sym, f64>,
    pub seed: u64,
    /// Rejection-sampling budget: at most `attempts_factor * trials`
    /// draws before giving up as inconclusive.
    pub attempts_factor: u32,
}

impl Default for NumericEq {
    fn default() -> Self {
        NumericEq {
            trials: 64,
            tol: 1e-9,
            default_box: (-2.0, 2.0),
            boxes: BTreeMap::new(),
            pinned: BTreeMap::new(),
            seed: 0,
            attempts_factor: 20,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

impl NumericEq {
    pub fn with_seed(seed: u64) -> Self {
        NumericEq { seed, ..Self::default() }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn trials(mut self, trials: u32) -> Self {
        self.trials = trials;
        self
    }

    pub fn boxed(mut self, lo: f64, hi: f64) -> Self {
        self.default_box = (lo, hi);
        self
    }

    pub fn box_for(mut self, sym: Sym, lo: f64, hi: f64) -> Self {
        self.boxes.insert(sym, (lo, hi));
        self
    }

    pub fn pin(mut self, sym: Sym, value: f64) -> Self {
        self.pinned.insert(sym, value);
        self
    }

    /// Derives an independent sampling stream for a sub-check, keeping
    /// the overall run deterministic in `seed`.
    pub fn salted(&self, salt: u64) -> Self {
        let mut out = self.clone();
        out.seed = splitmix64(self.seed ^ splitmix64(salt));
        out
    }

    fn draw(&self, syms: &[Sym], rng: &mut ChaCha8Rng) -> BTreeMap<Sym, f64> {
        let mut point = self.pinned.clone();
        for s in syms {
            let (lo, hi) = self.boxes.get(s).copied().unwrap_or(self.default_box);
            point.insert(*s, rng.gen_range(lo..hi));
        }
        point
    }

    /// Samples a point where `exprs` all evaluate; `None` when the budget
    /// is exhausted.
    pub fn sample_point(
        &self,
        exprs: &[&Expr],
        rng: &mut ChaCha8Rng,
    ) -> Option<(BTreeMap<Sym, f64>, Vec<f64>)> {
        let mut syms = alloc::collections::BTreeSet::new();
        for e in exprs {
            e.collect_syms(&mut syms);
        }
        let free: Vec<Sym> = syms
            .into_iter()
            .filter(|s| !self.pinned.contains_key(s))
            .collect();
        for _ in 0..self.attempts_factor.max(1) {
            let point = self.draw(&free, rng);
            let env = MapEnv(&point);
            let vals: Result<Vec<f64>, _> = exprs.iter().map(|e| eval(e, &env)).collect();
            if let Ok(vals) = vals {
                return Some((point, vals));
            }
        }
        None
    }

    /// Probabilistic identity check `a == b`. Even structurally identical
    /// inputs are sampled: a domain that admits no valid point reports
    /// `Inconclusive`, never `Equal`.
    pub fn check(&self, a: &Expr, b: &Expr) -> EqVerdict {
        let sa = simplify(a);
        let sb = simplify(b);
        let mut syms = alloc::collections::BTreeSet::new();
        sa.collect_syms(&mut syms);
        sb.collect_syms(&mut syms);
        let free: Vec<Sym> = syms
            .into_iter()
            .filter(|s| !self.pinned.contains_key(s))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let cap = (self.attempts_factor as u64) * (self.trials as u64);
        let mut successes = 0u32;
        let mut attempts = 0u64;
        while successes < self.trials && attempts < cap {
            attempts += 1;
            let point = self.draw(&free, &mut rng);
            let env = MapEnv(&point);
            let (va, vb) = match (eval(&sa, &env), eval(&sb, &env)) {
                (Ok(va), Ok(vb)) => (va, vb),
                _ => continue,
            };
            successes += 1;
            if (va - vb).abs() > self.tol * (1.0 + va.abs() + vb.abs()) {
                return EqVerdict::NotEqual(Witness { point, lhs: va, rhs: vb });
            }
        }
        if successes == self.trials {
            EqVerdict::Equal
        } else {
            EqVerdict::Inconclusive
        }
    }

    /// Identity-to-zero check.
    pub fn is_zero(&self, e: &Expr) -> EqVerdict {
        self.check(e, &Expr::int(0))
    }

    /// Checks that `e` takes one value over the whole sampled domain
    /// (equality up to an additive constant reduces to this on a
    /// difference).
    pub fn is_constant(&self, e: &Expr) -> EqVerdict {
        let se = simplify(e);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut base: Option<(BTreeMap<Sym, f64>, f64)> = None;
        let mut valid = 0u32;
        while valid < self.trials {
            let Some((point, vals)) = self.sample_point(&[&se], &mut rng) else {
                return EqVerdict::Inconclusive;
            };
            valid += 1;
            match &base {
                None => base = Some((point, vals[0])),
                Some((_, b)) => {
                    if (vals[0] - b).abs() > self.tol * (1.0 + b.abs() + vals[0].abs()) {
                        return EqVerdict::NotEqual(Witness {
                            point,
                            lhs: vals[0],
                            rhs: *b,
                        });
                    }
                }
            }
        }
        EqVerdict::Equal
    }

    /// `true` only on a conclusive `Equal`.
    pub fn holds(&self, a: &Expr, b: &Expr) -> bool {
        self.check(a, b).is_equal()
    }
}

/// Random multivariate polynomial over `syms` with small rational
/// coefficients, total degree `<= degree`. Deterministic in the RNG.
pub fn random_polynomial(
    syms: &[Sym],
    degree: u32,
    terms: usize,
    rng: &mut ChaCha8Rng,
) -> Expr {
    let mut ts = Vec::new();
    for _ in 0..terms {
        let c: i64 = rng.gen_range(-4..=4);
        if c == 0 {
            continue;
        }
        let mut factors = vec![Expr::ratio(c, 2)];
        let mut left = degree;
        for &s in syms {
            if left == 0 {
                break;
            }
            let d = rng.gen_range(0..=left.min(2));
            left -= d;
            if d > 0 {
                factors.push(Expr::powi(Expr::sym(s), d as i64));
            }
        }
        ts.push(Expr::product(factors));
    }
    simplify(&Expr::sum(ts))
}
