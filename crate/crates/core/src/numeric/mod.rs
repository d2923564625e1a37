//! Numerical building blocks shared by the solvers.

pub mod ode;
pub mod quadrature;
pub mod roots;
