//! Poisson bracket in Lagrangian variables.
//!
//! For functions `F(t,q,qd)` the bracket is
//!
//! ```text
//! {F1,F2} = g^-1^ij (dF1/dq^i dF2/dqd^j - dF2/dq^i dF1/dqd^j)
//!           + c^ij dF1/dqd^i dF2/dqd^j
//! ```
//!
//! with `c^ij` the antisymmetrized mixed Hessian from the system cache.
//! On top of it: the conservation test `dC/dt + {C,H} == 0`, the
//! symmetry-action identity `X_(C) _| dF == {F,C}`, the commutator
//! homomorphism `[X_(C2), X_(C1)] == X_({C1,C2})`, pairwise bracket
//! tables with linear-closure annotation, and the independence test for
//! generators over the solution space.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diff::diff;
use crate::expr::Expr;
use crate::lagrangian::LagrangianSystem;
use crate::matrix::{self, ExprMatrix};
use crate::noether::{c_to_p, ConservedQuantity, NoetherError};
use crate::sample::NumericEq;
use crate::simplify::simplify;
use crate::sym::Sym;

/// `{F1, F2}` in Lagrangian variables, simplified.
pub fn pbracket(sys: &LagrangianSystem, f1: &Expr, f2: &Expr) -> Expr {
    let n = sys.dof();
    let ginv = sys.hessian_inv();
    let skew = sys.skew_matrix();
    let f1_q: Vec<Expr> = (0..n).map(|i| diff(f1, Sym::coord(i))).collect();
    let f1_qd: Vec<Expr> = (0..n).map(|i| diff(f1, Sym::vel(i))).collect();
    let f2_q: Vec<Expr> = (0..n).map(|i| diff(f2, Sym::coord(i))).collect();
    let f2_qd: Vec<Expr> = (0..n).map(|i| diff(f2, Sym::vel(i))).collect();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            terms.push(Expr::product(vec![
                ginv[i][j].clone(),
                Expr::sub(
                    Expr::mul(f1_q[i].clone(), f2_qd[j].clone()),
                    Expr::mul(f2_q[i].clone(), f1_qd[j].clone()),
                ),
            ]));
            if !skew[i][j].is_zero() {
                terms.push(Expr::product(vec![
                    skew[i][j].clone(),
                    f1_qd[i].clone(),
                    f2_qd[j].clone(),
                ]));
            }
        }
    }
    simplify(&Expr::sum(terms))
}

/// The symplectic block matrix `[[0, g^-1], [-g^-1, c]]` of the bracket.
#[derive(Clone, Debug)]
pub struct SymplecticStructure {
    pub matrix: ExprMatrix,
}

impl SymplecticStructure {
    pub fn new(sys: &LagrangianSystem) -> Self {
        let n = sys.dof();
        let mut m = vec![vec![Expr::int(0); 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                m[i][n + j] = sys.hessian_inv()[i][j].clone();
                m[n + i][j] = simplify(&Expr::neg(sys.hessian_inv()[i][j].clone()));
                m[n + i][n + j] = sys.skew_matrix()[i][j].clone();
            }
        }
        SymplecticStructure { matrix: m }
    }

    /// `J + J^T == 0` entrywise.
    pub fn verify_skew(&self, checker: &NumericEq) -> bool {
        let m = &self.matrix;
        let n = m.len();
        for i in 0..n {
            for j in 0..n {
                let s = Expr::add(m[i][j].clone(), m[j][i].clone());
                if !checker.salted(0x5e_0000 + (i * n + j) as u64).is_zero(&s).is_equal() {
                    return false;
                }
            }
        }
        true
    }
}

/// Local conservation through the bracket: `dC/dt + {C, H} == 0`.
pub fn conservation_via_bracket(
    sys: &LagrangianSystem,
    c: &Expr,
    checker: &NumericEq,
) -> bool {
    let h = sys.hamiltonian_lagrangian_vars();
    let lhs = simplify(&Expr::add(diff(c, Sym::Time), pbracket(sys, c, &h)));
    checker.salted(0xbc_01).is_zero(&lhs).is_equal()
}

/// Symmetry action on observables: `X_(C) _| dF == {F, C}` where the
/// generator comes from the Noether map of `C`.
pub fn verify_symmetry_action(
    sys: &LagrangianSystem,
    cq: &ConservedQuantity,
    f: &Expr,
    checker: &NumericEq,
) -> Result<bool, NoetherError> {
    let gen = c_to_p(sys, cq)?;
    let lhs = gen.apply(f);
    let rhs = pbracket(sys, f, &cq.expr);
    Ok(checker.salted(0xac_01).holds(&lhs, &rhs))
}

/// Pair action: `X_(C1) _| dC2 == -X_(C2) _| dC1 == {C2, C1}`.
pub fn verify_pair_action(
    sys: &LagrangianSystem,
    c1: &ConservedQuantity,
    c2: &ConservedQuantity,
    checker: &NumericEq,
) -> Result<bool, NoetherError> {
    let x1 = c_to_p(sys, c1)?;
    let x2 = c_to_p(sys, c2)?;
    let a = x1.apply(&c2.expr);
    let b = simplify(&Expr::neg(x2.apply(&c1.expr)));
    let br = pbracket(sys, &c2.expr, &c1.expr);
    Ok(checker.salted(0xac_10).holds(&a, &b) && checker.salted(0xac_11).holds(&a, &br))
}

/// Commutator homomorphism: the commutator of the two generators equals
/// the generator of the bracket, checked componentwise as
/// `X_(C2) _| dP1^i - X_(C1) _| dP2^i == g^-1^ij d{C1,C2}/dqd^j`.
pub fn verify_commutator_homomorphism(
    sys: &LagrangianSystem,
    c1: &ConservedQuantity,
    c2: &ConservedQuantity,
    checker: &NumericEq,
) -> Result<bool, NoetherError> {
    let n = sys.dof();
    let x1 = c_to_p(sys, c1)?;
    let x2 = c_to_p(sys, c2)?;
    let br = pbracket(sys, &c1.expr, &c2.expr);
    let br_grad: Vec<Expr> = (0..n).map(|j| diff(&br, Sym::vel(j))).collect();
    let rhs = matrix::matvec(sys.hessian_inv(), &br_grad);
    for i in 0..n {
        let lhs = simplify(&Expr::sub(
            x2.apply(&x1.components()[i]),
            x1.apply(&x2.components()[i]),
        ));
        if !checker.salted(0xc8_0000 + i as u64).holds(&lhs, &rhs[i]) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Closure annotation of one bracket-table entry.
#[derive(Clone, Debug, PartialEq)]
pub enum Closure {
    Zero,
    Constant(f64),
    /// `a0 + sum a_k C_k` with the fitted coefficients.
    LinearInBasis { constant: f64, coeffs: Vec<f64> },
    NonlinearOrUnknown,
}

/// Pairwise bracket table over a family of conserved quantities.
#[derive(Clone, Debug)]
pub struct BracketTable {
    pub names: Vec<String>,
    pub entries: Vec<Vec<Expr>>,
    pub closures: Vec<Vec<Closure>>,
}

const CLOSURE_SAMPLES: usize = 200;
const CLOSURE_RESIDUAL: f64 = 1e-7;

/// Least-squares fit of `b` onto the columns of `a` (row-major,
/// `rows x cols`). Returns coefficients and the relative residual.
fn lsq_fit(a: &[f64], b: &[f64], rows: usize, cols: usize) -> Option<(Vec<f64>, f64)> {
    let mut ata = vec![0.0; cols * cols];
    let mut atb = vec![0.0; cols];
    for r in 0..rows {
        for i in 0..cols {
            atb[i] += a[r * cols + i] * b[r];
            for j in 0..cols {
                ata[i * cols + j] += a[r * cols + i] * a[r * cols + j];
            }
        }
    }
    // Tikhonov hair keeps near-collinear bases solvable.
    for i in 0..cols {
        ata[i * cols + i] += 1e-12;
    }
    let mut x = atb;
    if !matrix::solve_in_place(&mut ata, &mut x, cols) {
        return None;
    }
    let mut res: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for r in 0..rows {
        let mut pred = 0.0;
        for i in 0..cols {
            pred += a[r * cols + i] * x[i];
        }
        res += (pred - b[r]) * (pred - b[r]);
        scale += b[r] * b[r];
    }
    let rel = (res / scale.max(1e-30)).sqrt();
    Some((x, rel))
}

fn classify_closure(
    bracket: &Expr,
    basis: &[&Expr],
    checker: &NumericEq,
    salt: u64,
) -> Closure {
    let chk = checker.salted(salt);
    if chk.is_zero(bracket).is_equal() {
        return Closure::Zero;
    }
    // Collect joint samples of (bracket, C_1..C_m).
    let mut exprs: Vec<&Expr> = vec![bracket];
    exprs.extend_from_slice(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(chk.seed ^ 0x717);
    let m = basis.len();
    let mut a = Vec::with_capacity(CLOSURE_SAMPLES * (m + 1));
    let mut b = Vec::with_capacity(CLOSURE_SAMPLES);
    for _ in 0..CLOSURE_SAMPLES {
        if let Some((_, vals)) = chk.sample_point(&exprs, &mut rng) {
            b.push(vals[0]);
            a.push(1.0);
            a.extend_from_slice(&vals[1..]);
        }
    }
    let rows = b.len();
    if rows < 2 * (m + 1) {
        return Closure::NonlinearOrUnknown;
    }
    // Constant-only fit first.
    let const_col: Vec<f64> = vec![1.0; rows];
    if let Some((coef, rel)) = lsq_fit(&const_col, &b, rows, 1) {
        if rel < CLOSURE_RESIDUAL {
            return Closure::Constant(coef[0]);
        }
    }
    if let Some((coef, rel)) = lsq_fit(&a, &b, rows, m + 1) {
        if rel < CLOSURE_RESIDUAL {
            return Closure::LinearInBasis {
                constant: coef[0],
                coeffs: coef[1..].to_vec(),
            };
        }
    }
    Closure::NonlinearOrUnknown
}

/// Fills all pairwise brackets and annotates closure onto
/// `span{1, C_1..C_m}` by least-squares fit at sampled points.
pub fn bracket_table(
    sys: &LagrangianSystem,
    items: &[(String, &ConservedQuantity)],
    checker: &NumericEq,
) -> BracketTable {
    let m = items.len();
    let basis: Vec<&Expr> = items.iter().map(|(_, c)| &c.expr).collect();
    let mut entries = vec![vec![Expr::int(0); m]; m];
    let mut closures = vec![vec![Closure::Zero; m]; m];
    for i in 0..m {
        for j in (i + 1)..m {
            let br = pbracket(sys, basis[i], basis[j]);
            let closure = classify_closure(
                &br,
                &basis,
                checker,
                0xb7_0000 + (i * m + j) as u64,
            );
            entries[j][i] = simplify(&Expr::neg(br.clone()));
            entries[i][j] = br;
            closures[i][j] = closure.clone();
            closures[j][i] = match closure {
                Closure::Constant(c) => Closure::Constant(-c),
                Closure::LinearInBasis { constant, coeffs } => Closure::LinearInBasis {
                    constant: -constant,
                    coeffs: coeffs.iter().map(|c| -c).collect(),
                },
                other => other,
            };
        }
    }
    BracketTable {
        names: items.iter().map(|(n, _)| n.clone()).collect(),
        entries,
        closures,
    }
}

/// Verdict of the dependence test for two generators over the solution
/// space.
#[derive(Clone, Debug)]
pub enum IndependenceVerdict {
    Independent,
    /// Pointwise `P_(C2) == lambda(C1,C2) P_(C1)`; the fitted polynomial
    /// coefficients of `lambda` over `{1, C1, C2, C1^2, C1 C2, C2^2}`.
    Dependent { lambda_coeffs: Vec<f64> },
    Inconclusive,
}

/// Tests whether the Noether generators of `C1` and `C2` are dependent
/// over the solution space: pointwise parallel with a proportionality
/// factor that is a function of `(C1, C2)` only (fit and validate).
pub fn independence_over_solution_space(
    sys: &LagrangianSystem,
    c1: &ConservedQuantity,
    c2: &ConservedQuantity,
    checker: &NumericEq,
) -> Result<IndependenceVerdict, NoetherError> {
    let n = sys.dof();
    let x1 = c_to_p(sys, c1)?;
    let x2 = c_to_p(sys, c2)?;
    let mut exprs: Vec<&Expr> = Vec::with_capacity(2 * n + 2);
    exprs.extend(x1.components().iter());
    exprs.extend(x2.components().iter());
    exprs.push(&c1.expr);
    exprs.push(&c2.expr);

    let chk = checker.salted(0x1d_de9);
    let mut rng = ChaCha8Rng::seed_from_u64(chk.seed ^ 0x51);
    let samples = 120usize;
    let mut lambdas: Vec<f64> = Vec::new();
    let mut basis_rows: Vec<f64> = Vec::new();
    let mut valid = 0usize;
    for _ in 0..samples {
        let (_, vals) = match chk.sample_point(&exprs, &mut rng) {
            Some(x) => x,
            None => continue,
        };
        valid += 1;
        let p1 = &vals[0..n];
        let p2 = &vals[n..2 * n];
        let (v1, v2) = (vals[2 * n], vals[2 * n + 1]);
        let n1: f64 = p1.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n2: f64 = p2.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = 1.0 + n1 + n2;
        if n1 < 1e-9 * scale {
            if n2 < 1e-9 * scale {
                continue; // both vanish; uninformative
            }
            return Ok(IndependenceVerdict::Independent);
        }
        let lambda = p1.iter().zip(p2).map(|(a, b)| a * b).sum::<f64>() / (n1 * n1);
        let residual: f64 = p1
            .iter()
            .zip(p2)
            .map(|(a, b)| (b - lambda * a) * (b - lambda * a))
            .sum::<f64>()
            .sqrt();
        if residual > 1e-7 * scale {
            return Ok(IndependenceVerdict::Independent);
        }
        lambdas.push(lambda);
        basis_rows.extend_from_slice(&[1.0, v1, v2, v1 * v1, v1 * v2, v2 * v2]);
    }
    if valid < 20 || lambdas.len() < 12 {
        return Ok(IndependenceVerdict::Inconclusive);
    }
    match lsq_fit(&basis_rows, &lambdas, lambdas.len(), 6) {
        Some((coeffs, rel)) if rel < 1e-6 => {
            Ok(IndependenceVerdict::Dependent { lambda_coeffs: coeffs })
        }
        _ => Ok(IndependenceVerdict::Independent),
    }
}
