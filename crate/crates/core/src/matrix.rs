//! Small dense matrices: symbolic (expression entries) and float.
//!
//! Symbolic inverses go through the adjugate, which is only sensible for
//! small dimension; larger systems use numeric LU kernels instead.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::expr::Expr;
use crate::kernel::Kernel;
use crate::simplify::simplify;

/// Square matrix of expressions, row-major.
pub type ExprMatrix = Vec<Vec<Expr>>;

pub fn dim(m: &ExprMatrix) -> usize {
    m.len()
}

pub fn identity(n: usize) -> ExprMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| Expr::int(if i == j { 1 } else { 0 })).collect())
        .collect()
}

/// Determinant by cofactor expansion (small N only).
pub fn det(m: &ExprMatrix) -> Expr {
    let n = dim(m);
    if n == 1 {
        return m[0][0].clone();
    }
    let mut terms = Vec::new();
    for j in 0..n {
        let sub: ExprMatrix = (1..n)
            .map(|r| {
                (0..n)
                    .filter(|&c| c != j)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        let mut term = Expr::mul(m[0][j].clone(), det(&sub));
        if j % 2 == 1 {
            term = Expr::neg(term);
        }
        terms.push(term);
    }
    simplify(&Expr::sum(terms))
}

/// Symbolic inverse via adjugate/determinant. Caller is responsible for
/// keeping `n` small (<= 4 in this crate).
pub fn inverse_adjugate(m: &ExprMatrix) -> ExprMatrix {
    let n = dim(m);
    let d = det(m);
    let dinv = Expr::powi(d, -1);
    let mut out = vec![vec![Expr::int(0); n]; n];
    if n == 1 {
        out[0][0] = simplify(&dinv);
        return out;
    }
    for i in 0..n {
        for j in 0..n {
            // inverse[i][j] = cofactor_{ji} / det: minor deletes row j,
            // column i.
            let sub: ExprMatrix = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let mut cof = det(&sub);
            if (i + j) % 2 == 1 {
                cof = Expr::neg(cof);
            }
            out[i][j] = simplify(&Expr::mul(cof, dinv.clone()));
        }
    }
    out
}

/// Inverse as a matrix of numeric-LU kernel entries (for larger N).
pub fn inverse_kernel(m: &ExprMatrix) -> ExprMatrix {
    let n = dim(m);
    let shared = Arc::new(m.clone());
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Expr::kernel(Kernel::mat_inv_entry(shared.clone(), i, j)))
                .collect()
        })
        .collect()
}

pub fn matmul(a: &ExprMatrix, b: &ExprMatrix) -> ExprMatrix {
    let n = dim(a);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let terms: Vec<Expr> = (0..n)
                        .map(|k| Expr::mul(a[i][k].clone(), b[k][j].clone()))
                        .collect();
                    simplify(&Expr::sum(terms))
                })
                .collect()
        })
        .collect()
}

/// Matrix-vector product with simplification.
pub fn matvec(a: &ExprMatrix, v: &[Expr]) -> Vec<Expr> {
    let n = dim(a);
    (0..n)
        .map(|i| {
            let terms: Vec<Expr> = (0..n)
                .map(|k| Expr::mul(a[i][k].clone(), v[k].clone()))
                .collect();
            simplify(&Expr::sum(terms))
        })
        .collect()
}

// ---- float linear algebra ---------------------------------------------

/// Solves `a x = b` in place by Gaussian elimination with partial
/// pivoting; `a` is row-major `n x n`. Returns `false` when singular.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in (col + 1)..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return false;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / d;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            b[r] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in (col + 1)..n {
            acc -= a[col * n + c] * b[c];
        }
        b[col] = acc / a[col * n + col];
    }
    true
}

/// Full inverse of a row-major `n x n` float matrix.
pub fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut out = vec![0.0; n * n];
    for col in 0..n {
        let mut m = a.to_vec();
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        if !solve_in_place(&mut m, &mut e, n) {
            return None;
        }
        for row in 0..n {
            out[row * n + col] = e[row];
        }
    }
    Some(out)
}
