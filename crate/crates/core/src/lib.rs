//! Boundary null control of a one-dimensional advection–diffusion problem
//! with dynamic (Wentzell-type) boundary conditions.
//!
//! The state solves `u_t + u_x − ε u_xx = 0` on `(−L, 0)` with
//! `ε(u_t + ∂_ν u) = v` on Γ0 (`x = 0`) and `ε(u_t + ∂_ν u) + u = 0` on Γ1
//! (`x = −L`). The crate provides
//!
//! * a P1 Galerkin discretization whose mass matrix is the X inner product
//!   ([`mesh`], [`assembly`]),
//! * θ-scheme forward marching and its exact discrete transpose
//!   ([`march`], [`adjoint`]),
//! * penalized HUM controls by conjugate gradient ([`hum`]),
//! * observability constants from dense generalized eigenproblems ([`gramian`]),
//! * Carleman weights and inequality quadrature ([`carleman`]),
//! * experiment drivers and a command-line front end ([`experiments`], [`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod assembly;
pub mod carleman;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod gramian;
pub mod hum;
pub mod march;
pub mod mesh;
pub mod tridiag;

pub use error::{LabError, Result};
