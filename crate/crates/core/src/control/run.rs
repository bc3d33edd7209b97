use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{nominal_mpc_step, zpc_step, ControllerConfig, OcpSolution};
use crate::datadriven::{ModelSet, NoiseSpec};
use crate::qp::QpStatus;
use crate::setalg::IntervalVector;
use crate::{Error, Result};

/// A system that can be measured and driven one step at a time.
pub trait Plant {
    fn measure(&self) -> DVector<f64>;
    fn apply(&mut self, u: &DVector<f64>);
}

pub trait Controller {
    fn name(&self) -> &str;
    fn config(&self) -> &ControllerConfig;
    /// Computes the input for measured output `y` at time `t`.
    fn step(&mut self, t: usize, y: &DVector<f64>) -> Result<(DVector<f64>, OcpSolution)>;
}

pub struct ZpcController {
    pub model: ModelSet,
    pub noise: NoiseSpec,
    pub cfg: ControllerConfig,
    name: String,
}

impl ZpcController {
    pub fn new(model: ModelSet, noise: NoiseSpec, cfg: ControllerConfig) -> Self {
        Self {
            model,
            noise,
            cfg,
            name: "zpc".into(),
        }
    }

    /// The same pipeline with the singleton model set of `(A, B)`.
    pub fn rmpc_zono(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        noise: NoiseSpec,
        cfg: ControllerConfig,
    ) -> Result<Self> {
        Ok(Self {
            model: ModelSet::singleton(a, b)?,
            noise,
            cfg,
            name: "rmpc-zono".into(),
        })
    }
}

impl Controller for ZpcController {
    fn name(&self) -> &str {
        &self.name
    }

    fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    fn step(&mut self, t: usize, y: &DVector<f64>) -> Result<(DVector<f64>, OcpSolution)> {
        zpc_step(y, t, &self.model, &self.noise, &self.cfg)
    }
}

pub struct NominalMpc {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub cfg: ControllerConfig,
}

impl Controller for NominalMpc {
    fn name(&self) -> &str {
        "mpc"
    }

    fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    fn step(&mut self, t: usize, y: &DVector<f64>) -> Result<(DVector<f64>, OcpSolution)> {
        nominal_mpc_step(y, t, &self.a, &self.b, &self.cfg)
    }
}

/// Measured outputs farther than this outside the output bounds count as
/// violations; it absorbs solver tolerance for runs that ride a constraint.
pub const VIOLATION_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub y: Vec<f64>,
    /// Absent when the controller found no feasible input.
    pub u: Option<Vec<f64>>,
    pub cost: Option<f64>,
    /// `‖y(t) − r_y(t)‖₂`.
    pub err_norm: f64,
    pub feasible: bool,
    pub status: Option<QpStatus>,
    pub predicted: Vec<Vec<f64>>,
    pub reach: Vec<IntervalVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub controller: String,
    pub entries: Vec<LogEntry>,
    /// Diagnostic of the infeasible step that ended the run, if any.
    pub terminated: Option<String>,
    pub output_bounds: IntervalVector,
    pub input_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub controller: String,
    pub steps: usize,
    pub feasible_steps: usize,
    pub terminated: Option<String>,
    /// Measured outputs outside the output bounds.
    pub constraint_violations: usize,
    pub mean_tracking_error: f64,
    /// Smallest margin between the enforced one-step reach bounds and the
    /// output bounds over the run; negative would mean an unsafe plan.
    pub worst_case_slack: Option<f64>,
}

/// Measure, solve and apply for `steps` steps. An infeasible controller step
/// is logged with `feasible = false` and ends the run; other errors abort.
pub fn closed_loop_run(
    plant: &mut dyn Plant,
    controller: &mut dyn Controller,
    steps: usize,
) -> Result<RunLog> {
    let cfg = controller.config().clone();
    let mut log = RunLog {
        controller: controller.name().to_string(),
        entries: Vec::with_capacity(steps),
        terminated: None,
        output_bounds: cfg.output_bounds.clone(),
        input_dim: cfg.input_dim(),
    };
    for t in 0..steps {
        let y = plant.measure();
        if y.len() != cfg.output_dim() {
            return Err(Error::dim("closed_loop_run", cfg.output_dim(), y.len()));
        }
        let err_norm = (&y - cfg.reference.ry(t)).norm();
        match controller.step(t, &y) {
            Ok((u, sol)) => {
                plant.apply(&u);
                log.entries.push(LogEntry {
                    step: t,
                    y: y.as_slice().to_vec(),
                    u: Some(u.as_slice().to_vec()),
                    cost: Some(sol.cost),
                    err_norm,
                    feasible: true,
                    status: Some(sol.status),
                    predicted: sol.y_seq,
                    reach: sol.reach_bounds,
                });
            }
            Err(e) if e.is_infeasible() => {
                let status = match &e {
                    Error::Infeasible { status, .. } => Some(*status),
                    _ => None,
                };
                log.entries.push(LogEntry {
                    step: t,
                    y: y.as_slice().to_vec(),
                    u: None,
                    cost: None,
                    err_norm,
                    feasible: false,
                    status,
                    predicted: Vec::new(),
                    reach: Vec::new(),
                });
                log.terminated = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(log)
}

impl RunLog {
    pub fn is_feasible(&self) -> bool {
        self.terminated.is_none()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.entries.iter().filter_map(|e| e.u.clone()).collect()
    }

    pub fn outputs(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.y.clone()).collect()
    }

    pub fn constraint_violations(&self) -> usize {
        let b = &self.output_bounds;
        self.entries
            .iter()
            .filter(|e| !b.contains(&DVector::from_column_slice(&e.y), VIOLATION_TOLERANCE))
            .count()
    }

    pub fn summary(&self) -> RunSummary {
        let n = self.entries.len();
        let mean = if n == 0 {
            0.0
        } else {
            self.entries.iter().map(|e| e.err_norm).sum::<f64>() / n as f64
        };
        let (lo, hi) = (self.output_bounds.lower(), self.output_bounds.upper());
        let mut worst: Option<f64> = None;
        for e in &self.entries {
            let Some(r) = e.reach.first() else { continue };
            for d in 0..r.dim() {
                for margin in [hi[d] - r.upper()[d], r.lower()[d] - lo[d]] {
                    if margin.is_finite() {
                        worst = Some(worst.map_or(margin, |w: f64| w.min(margin)));
                    }
                }
            }
        }
        RunSummary {
            controller: self.controller.clone(),
            steps: n,
            feasible_steps: self.entries.iter().filter(|e| e.feasible).count(),
            terminated: self.terminated.clone(),
            constraint_violations: self.constraint_violations(),
            mean_tracking_error: mean,
            worst_case_slack: worst,
        }
    }

    /// `step, y_*, u_*, cost, err_norm, feasible, reach_lower_*, reach_upper_*`
    /// with the one-step-ahead reach bounds. Missing values are empty fields.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.output_bounds.dim();
        let m = self.input_dim;
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["step".to_string()];
        header.extend((1..=n).map(|i| format!("y_{i}")));
        header.extend((1..=m).map(|i| format!("u_{i}")));
        header.extend(["cost", "err_norm", "feasible"].map(String::from));
        header.extend((1..=n).map(|i| format!("reach_lower_{i}")));
        header.extend((1..=n).map(|i| format!("reach_upper_{i}")));
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for e in &self.entries {
            let mut rec = vec![e.step.to_string()];
            rec.extend(e.y.iter().map(f64::to_string));
            match &e.u {
                Some(u) => rec.extend(u.iter().map(f64::to_string)),
                None => rec.extend(std::iter::repeat_n(String::new(), m)),
            }
            rec.push(opt(e.cost));
            rec.push(e.err_norm.to_string());
            rec.push(e.feasible.to_string());
            match e.reach.first() {
                Some(r) => {
                    rec.extend(r.lower().iter().map(f64::to_string));
                    rec.extend(r.upper().iter().map(f64::to_string));
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 2 * n)),
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// `step, k, dim, predicted, reach_lower, reach_upper` for every
    /// predicted step `k = 1..N` of every run step.
    pub fn write_predictions_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "step",
            "k",
            "dim",
            "predicted",
            "reach_lower",
            "reach_upper",
        ])?;
        for e in &self.entries {
            for (k, (y, r)) in e.predicted.iter().zip(&e.reach).enumerate() {
                for d in 0..y.len() {
                    w.write_record(&[
                        e.step.to_string(),
                        (k + 1).to_string(),
                        (d + 1).to_string(),
                        y[d].to_string(),
                        r.lower()[d].to_string(),
                        r.upper()[d].to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
