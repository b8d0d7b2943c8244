//! The constant coefficient system that removes the `L` component of a
//! symmetric field.
//!
//! With `B` the finite difference operator `Phi -> [grad Phi + grad Phi^T]`
//! (vector form, so diagonal rows carry `2 d_i Phi_i`), `B*` its adjoint in
//! the trapezoidal grid inner product and `eta` an orthonormal basis of
//! `[L]`, the unknowns `u` (one scalar per generator, zero on the boundary)
//! solve `eta^T B B* eta u = eta^T [D]` at interior nodes.

mod fastdiag;
mod operator;
mod solve;

pub use operator::{BOperator, Stencil};
pub use solve::{EllipticSystem, SolveReport, SolverKind};
