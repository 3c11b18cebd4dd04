//! Numerical machinery for bounding Chen's constant `C*` in the extended
//! Goldbach conjecture `D(N) <= C* * Theta(N)`.
//!
//! The pipeline follows Wu's 2004 discretisation of the sieve bound:
//!
//! 1. [`buchstab`] evaluates the Buchstab function `omega(u)` with a
//!    certified midpoint Taylor spline, cross-checked by a method-of-steps
//!    ODE solution.
//! 2. [`quadrature`] supplies adaptive 1-D quadrature, iterated and
//!    quasi-Monte-Carlo integration over chain-ordered domains, grid
//!    maximisation and feasibility bisection.
//! 3. [`wu`] computes the weighted integrals `I_1`, `I_{2,9}..I_{2,21}` and
//!    the bound functions `Psi_1`, `Psi_2` together with the kernels
//!    `Xi_1`, `Xi_2`.
//! 4. [`chen`] discretises `[2,3]`, assembles the linear system
//!    `(I - A) X = B` and extracts `C* = 8 (1 - x_1)`, including the
//!    grid-refinement and interpolation experiments.
//! 5. [`goldbach`] counts prime decompositions `D(N)` and emits the comet
//!    datasets together with the constants `C_0` and `Theta(N)`.

pub mod buchstab;
pub mod cache;
pub mod chen;
pub mod error;
pub mod goldbach;
pub mod interp;
pub mod quadrature;
pub mod wu;

pub use error::{Error, Result};
