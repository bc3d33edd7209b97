//! Receding-horizon controllers and the closed loop.
//!
//! [`build_zpc_qp`] condenses the data-driven program into a convex QP over the
//! stacked inputs and a few epigraph variables. [`build_nominal_qp`] is the
//! known-model baseline, and [`rmpc_zono_step`] runs the data-driven pipeline
//! with a singleton model set.

mod config;
mod problem;
mod run;

pub use config::{ControllerConfig, Reference};
pub use problem::{
    build_nominal_qp, build_zpc_qp, nominal_mpc_step, rmpc_zono_step, zpc_step, ControlProblem,
    OcpSolution,
};
pub use run::{
    closed_loop_run, Controller, LogEntry, NominalMpc, Plant, RunLog, RunSummary, ZpcController,
    VIOLATION_TOLERANCE,
};
