//! Symbolic-numeric toolkit for Lagrangian dynamical systems.
//!
//! The crate models a dynamical system by its Lagrangian `L(t,q,qd)` and
//! provides, on top of a small expression engine:
//!
//! * the Noether correspondence between locally conserved integrals
//!   `C(t,q,qd)` and variational symmetry generators `P^i(t,q,qd)`,
//!   in both directions;
//! * the Poisson bracket written directly in Lagrangian variables
//!   `(q, qd)`, together with verifiers for the symmetry-action and
//!   commutator-homomorphism identities;
//! * numeric trajectory integration with piecewise-conservation
//!   monitoring (globally vs. locally conserved integrals);
//! * one-parameter symmetry flows in the group parameter, with optional
//!   gauge extension along the time direction;
//! * local action-angle construction for commuting families of
//!   conserved integrals.
//!
//! Everything is built over immutable [`Expr`] trees; semantic equality
//! of expressions is decided probabilistically by [`NumericEq`], which
//! keeps the symbolic layer free of canonical-form requirements.
//!
//! The crate is `no_std`-compatible (with `alloc`); the `std` feature
//! (default) enables memoization caches and `std::error::Error` impls.

#![cfg_attr(not(feature = "std"), no_std)]
// Indexed loops are the house style for the matrix/stencil math here.
#![allow(clippy::needless_range_loop)]
// Expr is an ordered map key throughout; its interior mutability is the
// kernels' memoization cache, which Eq/Ord never touch (kernels compare
// by creation id).
#![allow(clippy::mutable_key_type)]

extern crate alloc;

pub mod antideriv;
pub mod bracket;
pub mod diff;
pub mod eval;
pub mod expr;
pub mod flows;
pub mod kernel;
pub mod lagrangian;
pub mod liouville;
pub mod matrix;
pub mod noether;
pub mod num;
pub mod ode;
pub mod parse;
pub mod print;
pub mod quad;
pub mod sample;
pub mod simplify;
pub mod sym;

pub use expr::{Expr, Func};
pub use sample::{EqVerdict, NumericEq};
pub use sym::{Sym, VariableSpace};
