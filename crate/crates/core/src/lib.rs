//! Equilibrium randomized stopping of one-dimensional Itô diffusions under
//! the uniform expected-time constraint `E_x[tau] <= T`.
//!
//! The crate provides:
//!  * [`diffusion`]: problem data, generator, scale function, path simulation;
//!  * [`strategy`]: randomized Markovian stopping strategies (open set D plus
//!    a piecewise-constant stopping rate psi) and their region partition;
//!  * [`ode`]: a finite-difference two-point solver shared by the field
//!    computations;
//!  * [`expected_time`] / [`reward`]: the fields `e(x) = E_x[tau]` and
//!    J(x) = E_x[e^{-r tau} g(X_tau)];
//!  * [`constructor`]: the guess-and-verify construction of equilibria
//!    (threshold case, full-randomization case, free-boundary case);
//!  * [`verifier`]: numerical checks of the necessary and sufficient
//!    equilibrium conditions;
//!  * [`mc`]: a deterministic parallel Monte Carlo engine for independent
//!    cross-validation and perturbation-gap estimates.

pub mod constructor;
pub mod diffusion;
pub mod error;
pub mod expected_time;
pub mod layout;
pub mod mc;
pub mod ode;
pub mod reward;
pub mod strategy;
pub mod verifier;

pub use error::{Error, Result};
pub use layout::GridConfig;
