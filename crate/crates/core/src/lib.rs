//! Zonotopic data-driven predictive control.
//!
//! The crate learns a matrix zonotope of linear models that are consistent with
//! noisy input-output data, propagates data-driven reachable sets with it, and
//! wraps both in a robust receding-horizon controller that keeps the measured
//! output inside box constraints.
//!
//! Module map:
//!
//! - [`setalg`]: zonotopes, matrix zonotopes, interval vectors and membership tests.
//! - [`datadriven`]: data matrices, Hankel matrices, persistency of excitation and the model set.
//! - [`reach`]: concrete, parametric and factored reachable-set recursions.
//! - [`qp`]: a dense convex QP solver with KKT certification.
//! - [`control`]: the data-driven controller, nominal MPC, the zonotopic robust MPC baseline
//!   and the closed loop.
//! - [`harness`]: plant simulation, data collection and experiment orchestration.

pub mod control;
pub mod datadriven;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod qp;
pub mod reach;
pub mod setalg;

pub use error::{Error, Result};
