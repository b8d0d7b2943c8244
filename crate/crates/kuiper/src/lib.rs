//! Numerical toolkit for convex integration of the very weak Monge-Ampere
//! system `1/2 dv (x) dv + Sym dw = A` in dimension `n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`] builds Radon-Hurwitz spaces of invertible matrices, the
//!   annihilated subspace `L`, its dual and primitive frames.
//! * [`grid`] holds uniform Cartesian grids, grid fields, finite differences,
//!   mollification, norms and field IO.
//! * [`elliptic`] assembles and solves the constant coefficient system that
//!   eliminates the `L` component of a symmetric field.
//! * [`decompose`] turns any symmetric field into `-Sym grad Phi` plus a
//!   nonnegative combination of primitive rank one matrices.
//! * [`corrugation`] evaluates the one-dimensional corrugation profiles.
//! * [`scheme`] drives the multi-stage iteration and audits its parameters.

pub mod algebra;
pub mod corrugation;
pub mod decompose;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod scheme;
pub mod sparse;

pub use decompose::{decompose, DecomposeOptions, Decomposer, Decomposition};
pub use grid::{Grid, GridField, Rank};
pub use algebra::{
    certify_invertible, choose_l, dual_space, find_primitive_frame, radon_hurwitz, rho,
    rho_half, xi_index, CaseTag, MatrixSpace, PrimitiveFrame, RhIndex,
};

pub use error::{Error, Result};

