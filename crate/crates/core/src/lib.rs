//! Higher-order implicit Runge-Kutta (Radau IIa) time integration for
//! small-strain von-Mises elasto-plasticity, embedded in a minimal
//! total-Lagrangian finite-element solver, with a convergence-order harness.
//!
//! The crate is organised bottom-up:
//! - [`tensor`]: symmetric tensor arithmetic in 6-component storage
//! - [`material`]: elasticity, yield function and isotropic hardening
//! - [`butcher`]: Radau IIa tableaus (s = 1, 2, 3)
//! - [`strain_path`]: stage-strain interpolation and scalar root finding
//! - [`stage_solver`]: the coupled stage system, consistent tangent and the
//!   per-material-point step driver with switching-point detection
//! - [`fem`]: hex8 total-Lagrangian FEM with displacement control
//! - [`scenarios`]: the benchmark problems
//! - [`convergence`]: error norms, order fits and the study runner

pub mod butcher;
pub mod convergence;
pub mod fem;
pub mod scenarios;
pub mod material;
pub mod stage_solver;
pub mod strain_path;
pub mod tensor;
