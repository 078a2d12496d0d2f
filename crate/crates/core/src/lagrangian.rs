//! The Lagrangian system model.
//!
//! Building a system derives and caches everything downstream modules
//! need: the Hessian `g_ij = d2L/dqd_i dqd_j` and its inverse, the force
//! law `f^i` putting the equations of motion in the form `qdd^i = f^i`,
//! the mixed Hessian `h_ij = d2L/dq_i dqd_j`, and the antisymmetrized
//! combination `c^ij` entering the Lagrangian-variable Poisson bracket.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

use crate::diff::{diff, total_derivative, DiffError};
use crate::expr::Expr;
use crate::matrix::{self, ExprMatrix};
use crate::sample::{EqVerdict, NumericEq};
use crate::simplify::simplify;
use crate::sym::{Sym, VariableSpace};

#[derive(Clone, Debug)]
pub enum BuildError {
    /// The Lagrangian may depend on (t, q, qd) only.
    InputBeyondVelocities,
    /// det(g) vanishes identically; rendered determinant attached.
    DegenerateHessian(String),
    /// The non-degeneracy check could not sample any valid point.
    DegeneracyInconclusive(String),
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::InputBeyondVelocities => {
                write!(f, "Lagrangian may depend on (t, q, qd) only")
            }
            BuildError::DegenerateHessian(d) => {
                write!(f, "degenerate Lagrangian: det(g) = {d} vanishes identically")
            }
            BuildError::DegeneracyInconclusive(d) => {
                write!(f, "could not establish non-degeneracy of det(g) = {d}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BuildError {}

/// Euler-Lagrange residuals `dL/dq^i - D_t dL/dqd^i`, one per coordinate.
#[derive(Clone, Debug)]
pub struct EulerLagrangeResidual {
    pub components: Vec<Expr>,
    /// Whether `residual_i == g_ij (f^j - qdd^j)` held at sampled points.
    pub identity_verified: bool,
}

/// An immutable Lagrangian dynamical system with cached derived data.
#[derive(Clone, Debug)]
pub struct LagrangianSystem {
    space: VariableSpace,
    lagrangian: Expr,
    hessian: ExprMatrix,
    hessian_inv: ExprMatrix,
    force: Vec<Expr>,
    momenta: Vec<Expr>,
    mixed: ExprMatrix,
    skew: ExprMatrix,
    autonomous: bool,
    warnings: Vec<String>,
}

impl LagrangianSystem {
    /// Builds the system, deriving all cached matrices. Fails on inputs
    /// beyond velocities and on degenerate Hessians.
    pub fn build(
        space: VariableSpace,
        lagrangian: Expr,
        checker: &NumericEq,
    ) -> Result<Self, BuildError> {
        let lagrangian = simplify(&lagrangian);
        if lagrangian.max_jet_order() > 1 {
            return Err(BuildError::InputBeyondVelocities);
        }
        let n = space.dof();
        let mut warnings = Vec::new();

        let mut hessian = vec![vec![Expr::int(0); n]; n];
        for i in 0..n {
            let li = diff(&lagrangian, Sym::vel(i));
            for j in i..n {
                let gij = diff(&li, Sym::vel(j));
                hessian[i][j] = gij.clone();
                hessian[j][i] = gij;
            }
        }

        let det = matrix::det(&hessian);
        let det_text = crate::print::pretty(&det, &space);
        match checker.salted(0x6de7).is_zero(&det) {
            EqVerdict::Equal => return Err(BuildError::DegenerateHessian(det_text)),
            EqVerdict::Inconclusive => {
                return Err(BuildError::DegeneracyInconclusive(det_text))
            }
            EqVerdict::NotEqual(_) => {}
        }
        // Isolated zeros of det(g) are tolerated but worth flagging: a
        // sampled |det| far below the typical magnitude suggests the
        // determinant vanishes somewhere in the box.
        if !det.free_syms().is_empty() {
            let probe = checker.salted(0x6de8);
            let mut rng = rand::SeedableRng::seed_from_u64(probe.seed);
            let mut mags: Vec<f64> = Vec::new();
            for _ in 0..128 {
                if let Some((_, vals)) = probe.sample_point(&[&det], &mut rng) {
                    mags.push(vals[0].abs());
                }
            }
            if !mags.is_empty() {
                mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let min = mags[0];
                let median = mags[mags.len() / 2];
                if min < 1e-2 * (1.0 + median) {
                    warnings.push(format!(
                        "det(g) = {det_text} comes close to zero in the sampling box; \
                         sampling avoids the singular set"
                    ));
                }
            }
        }

        let hessian_inv = if n <= 4 {
            matrix::inverse_adjugate(&hessian)
        } else {
            matrix::inverse_kernel(&hessian)
        };

        // h_ij = d2L / dq^i dqd^j
        let mut mixed = vec![vec![Expr::int(0); n]; n];
        for i in 0..n {
            let li = diff(&lagrangian, Sym::coord(i));
            for j in 0..n {
                mixed[i][j] = diff(&li, Sym::vel(j));
            }
        }

        // f^i = g^-1^ij (dL/dq^j - d2L/dt dqd^j - qd^k d2L/dq^k dqd^j)
        let mut rhs = Vec::with_capacity(n);
        for j in 0..n {
            let lqd_j = diff(&lagrangian, Sym::vel(j));
            let mut terms = vec![
                diff(&lagrangian, Sym::coord(j)),
                Expr::neg(diff(&lqd_j, Sym::Time)),
            ];
            for k in 0..n {
                terms.push(Expr::neg(Expr::mul(
                    Expr::vel(k),
                    mixed[k][j].clone(),
                )));
            }
            rhs.push(simplify(&Expr::sum(terms)));
        }
        let force = matrix::matvec(&hessian_inv, &rhs);

        let momenta: Vec<Expr> = (0..n).map(|j| diff(&lagrangian, Sym::vel(j))).collect();

        // c^ij = g^-1^ik g^-1^jl (h_kl - h_lk)
        let mut skew = vec![vec![Expr::int(0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut terms = Vec::new();
                for k in 0..n {
                    for l in 0..n {
                        let asym = Expr::sub(mixed[k][l].clone(), mixed[l][k].clone());
                        terms.push(Expr::product(vec![
                            hessian_inv[i][k].clone(),
                            hessian_inv[j][l].clone(),
                            asym,
                        ]));
                    }
                }
                skew[i][j] = simplify(&Expr::sum(terms));
            }
        }

        let autonomous = checker
            .salted(0xa0f0)
            .is_zero(&diff(&lagrangian, Sym::Time))
            .is_equal();

        Ok(LagrangianSystem {
            space,
            lagrangian,
            hessian,
            hessian_inv,
            force,
            momenta,
            mixed,
            skew,
            autonomous,
            warnings,
        })
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn dof(&self) -> usize {
        self.space.dof()
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    /// Hessian `g_ij`.
    pub fn hessian(&self) -> &ExprMatrix {
        &self.hessian
    }

    /// Inverse Hessian `g^-1^ij`.
    pub fn hessian_inv(&self) -> &ExprMatrix {
        &self.hessian_inv
    }

    /// Right-hand side of `qdd^i = f^i(t,q,qd)`.
    pub fn force(&self) -> &[Expr] {
        &self.force
    }

    /// Canonical momenta `p_j = dL/dqd^j` in Lagrangian variables.
    pub fn momenta(&self) -> &[Expr] {
        &self.momenta
    }

    /// Mixed Hessian `h_ij`.
    pub fn mixed_hessian(&self) -> &ExprMatrix {
        &self.mixed
    }

    /// Antisymmetric bracket matrix `c^ij`.
    pub fn skew_matrix(&self) -> &ExprMatrix {
        &self.skew
    }

    /// Semantic autonomy: `dL/dt == 0` under sampling, so `qd^2/2 + t - t`
    /// counts as autonomous.
    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Time derivative restricted to the solution space:
    /// `D_t with qdd^i replaced by f^i`. Input and output depend on
    /// (t, q, qd) at most.
    pub fn solution_derivative(&self, e: &Expr) -> Result<Expr, DiffError> {
        let dt = total_derivative(e)?;
        let mut map = BTreeMap::new();
        for i in 0..self.dof() {
            map.insert(Sym::accel(i), self.force[i].clone());
        }
        Ok(simplify(&dt.substitute(&map)))
    }

    /// Euler-Lagrange residuals, with the identity
    /// `residual_i == g_ij (f^j - qdd^j)` verified by sampling.
    pub fn el_residual(&self, checker: &NumericEq) -> EulerLagrangeResidual {
        let n = self.dof();
        let mut components = Vec::with_capacity(n);
        let mut verified = true;
        for i in 0..n {
            let r = simplify(&Expr::sub(
                diff(&self.lagrangian, Sym::coord(i)),
                total_derivative(&diff(&self.lagrangian, Sym::vel(i)))
                    .expect("momenta depend on (t,q,qd) only"),
            ));
            let mut terms = Vec::new();
            for j in 0..n {
                terms.push(Expr::mul(
                    self.hessian[i][j].clone(),
                    Expr::sub(self.force[j].clone(), Expr::accel(j)),
                ));
            }
            let identity = Expr::sum(terms);
            if !checker.salted(0xe1_0000 + i as u64).holds(&r, &identity) {
                verified = false;
            }
            components.push(r);
        }
        EulerLagrangeResidual { components, identity_verified: verified }
    }

    /// Hamiltonian in Lagrangian variables: `qd^i dL/dqd^i - L`.
    pub fn hamiltonian_lagrangian_vars(&self) -> Expr {
        let mut terms: Vec<Expr> = (0..self.dof())
            .map(|i| Expr::mul(Expr::vel(i), self.momenta[i].clone()))
            .collect();
        terms.push(Expr::neg(self.lagrangian.clone()));
        simplify(&Expr::sum(terms))
    }

    /// Checks that `L -> L + D_t A` leaves both `g` and `f` unchanged,
    /// for gauge functions `A(t, q)`.
    pub fn gauge_shift_check(&self, a: &Expr, checker: &NumericEq) -> Result<bool, BuildError> {
        if a.max_jet_order() > 0 {
            return Err(BuildError::InputBeyondVelocities);
        }
        let shifted = simplify(&Expr::add(
            self.lagrangian.clone(),
            total_derivative(a).expect("gauge term depends on (t,q) only"),
        ));
        let other = LagrangianSystem::build(self.space.clone(), shifted, checker)?;
        let n = self.dof();
        for i in 0..n {
            for j in 0..n {
                if !checker
                    .salted(0x9a_0000 + (i * n + j) as u64)
                    .holds(&self.hessian[i][j], &other.hessian[i][j])
                {
                    return Ok(false);
                }
            }
            if !checker
                .salted(0x9b_0000 + i as u64)
                .holds(&self.force[i], &other.force[i])
            {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
