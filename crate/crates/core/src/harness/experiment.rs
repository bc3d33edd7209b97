use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    closed_loop_rng, collect_data, ExperimentConfig, NoiseRealization, SimulatedPlant, SystemModel,
};
use crate::control::{closed_loop_run, Controller, NominalMpc, RunLog, RunSummary, ZpcController};
use crate::datadriven::{
    build_model_set, is_persistently_exciting, load_manifest, save_manifest, stack_data, ModelSet,
    NoiseSpec, TrajectoryData,
};
use crate::linalg::hcat;
use crate::reach::{write_hulls_csv, CoefficientBound, FactoredReach};
use crate::setalg::IntervalVector;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Zpc,
    Mpc,
    RmpcZono,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [
        ControllerKind::Zpc,
        ControllerKind::Mpc,
        ControllerKind::RmpcZono,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Zpc => "zpc",
            ControllerKind::Mpc => "mpc",
            ControllerKind::RmpcZono => "rmpc-zono",
        }
    }

    fn stem(self) -> &'static str {
        match self {
            ControllerKind::Zpc => "zpc",
            ControllerKind::Mpc => "mpc",
            ControllerKind::RmpcZono => "rmpc_zono",
        }
    }
}

/// One experiment bound to its run directory. Each stage writes its own
/// artifacts and tags failures with its name.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub dir: PathBuf,
    noise: NoiseSpec,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `seed-<seed>-<unix seconds>`.
pub fn run_dir_name(seed: u64) -> String {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("seed-{seed}-{now}")
}

/// Creates and returns `root/name`, or `root/name-1`, `root/name-2`, … if taken.
pub fn fresh_dir(root: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    for i in 0.. {
        let dir = if i == 0 {
            root.join(name)
        } else {
            root.join(format!("{name}-{i}"))
        };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
    unreachable!("unbounded suffix search")
}

impl Experiment {
    /// Validates `cfg`, creates `dir` and writes the resolved `config.json`.
    pub fn in_dir(cfg: ExperimentConfig, dir: PathBuf) -> Result<Self> {
        cfg.validate().map_err(|e| e.at_stage("config"))?;
        let noise = cfg.noise_spec()?;
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_json(&dir.join("config.json"), &cfg)?;
        Ok(Self { cfg, dir, noise })
    }

    /// As [`Self::in_dir`] with a fresh directory under `cfg.output_dir`.
    pub fn create(cfg: ExperimentConfig) -> Result<Self> {
        let dir = fresh_dir(&cfg.output_dir, &run_dir_name(cfg.seed))?;
        Self::in_dir(cfg, dir)
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    fn system(&self, stage: &'static str) -> Result<&SystemModel> {
        self.cfg.system().ok_or_else(|| {
            Error::Config("needs a known system, not data-only".into()).at_stage(stage)
        })
    }

    /// Simulates or loads the data and writes it under `data/`. Returns the
    /// data and the order `n + 1` excitation check.
    pub fn collect(&self) -> Result<(TrajectoryData, bool)> {
        let run = || -> Result<(TrajectoryData, bool)> {
            let data = match (self.cfg.system(), &self.cfg.data) {
                (Some(sys), _) => {
                    let c = collect_data(
                        sys,
                        &self.noise,
                        self.cfg.data_count,
                        &self.cfg.input_zonotope,
                        self.cfg.seed,
                    )?;
                    c.data
                }
                (None, Some(path)) => load_manifest(path)?.0,
                (None, None) => return Err(Error::Config("no data source".into())),
            };
            let dm = stack_data(&data)?;
            let pe = is_persistently_exciting(&dm.u_minus, dm.output_dim() + 1).unwrap_or(false);
            save_manifest(&self.dir.join("data"), &data, &self.noise)?;
            Ok((data, pe))
        };
        run().map_err(|e| e.at_stage("collect"))
    }

    /// Builds the model set and writes `model_set.json`.
    pub fn model_set(&self, data: &TrajectoryData) -> Result<ModelSet> {
        let run = || -> Result<ModelSet> {
            let ms = build_model_set(&stack_data(data)?, &self.noise)?;
            write_json(&self.dir.join("model_set.json"), &ms)?;
            Ok(ms)
        };
        run().map_err(|e| e.at_stage("model-set"))
    }

    /// Reach hulls from `x0` under the input reference over one horizon,
    /// with exact coefficient norms; writes `reach_hulls.csv`.
    pub fn reach(&self, model: &ModelSet) -> Result<Vec<IntervalVector>> {
        let run = || -> Result<Vec<IntervalVector>> {
            let c = &self.cfg.controller;
            let y0 = DVector::from_column_slice(&self.cfg.x0);
            let fr = FactoredReach::new(&y0, c.horizon, model, &self.noise)?;
            let u = DVector::from_iterator(
                c.horizon * c.input_dim(),
                (0..c.horizon).flat_map(|k| c.reference.ru(k).as_slice().to_vec()),
            );
            let sigma = fr.sigma(&u, &CoefficientBound::Exact.matrix(model));
            let mut hulls = vec![IntervalVector::point(y0)];
            hulls.extend(fr.hulls(&u, &sigma));
            write_hulls_csv(&self.dir.join("reach_hulls.csv"), &hulls)?;
            Ok(hulls)
        };
        run().map_err(|e| e.at_stage("reach"))
    }

    /// The noise realization shared by all closed-loop runs.
    pub fn realization(&self) -> NoiseRealization {
        let mut rng = closed_loop_rng(self.cfg.seed);
        NoiseRealization::sample(&self.noise.zw, &self.noise.zv, self.cfg.steps, &mut rng)
    }

    pub fn controller(
        &self,
        kind: ControllerKind,
        model: Option<&ModelSet>,
    ) -> Result<Box<dyn Controller>> {
        let cfg = self.cfg.controller.clone();
        let ctl: Box<dyn Controller> = match kind {
            ControllerKind::Zpc => {
                let ms =
                    model.ok_or_else(|| Error::InvalidArgument("zpc needs a model set".into()))?;
                Box::new(ZpcController::new(ms.clone(), self.noise.clone(), cfg))
            }
            ControllerKind::Mpc => {
                let s = self.system(kind.name())?;
                Box::new(NominalMpc {
                    a: s.a.clone(),
                    b: s.b.clone(),
                    cfg,
                })
            }
            ControllerKind::RmpcZono => {
                let s = self.system(kind.name())?;
                Box::new(ZpcController::rmpc_zono(
                    &s.a,
                    &s.b,
                    self.noise.clone(),
                    cfg,
                )?)
            }
        };
        Ok(ctl)
    }

    /// Runs one controller on the true plant and writes `<name>_run.csv`,
    /// `<name>_predictions.csv` and `<name>_summary.json`.
    pub fn closed_loop(
        &self,
        kind: ControllerKind,
        model: Option<&ModelSet>,
        noise: &NoiseRealization,
    ) -> Result<RunLog> {
        let run = || -> Result<RunLog> {
            let sys = self.system(kind.name())?.clone();
            let mut ctl = self.controller(kind, model)?;
            let mut plant =
                SimulatedPlant::new(sys, DVector::from_column_slice(&self.cfg.x0), noise.clone());
            let log = closed_loop_run(&mut plant, ctl.as_mut(), self.cfg.steps)?;
            let stem = kind.stem();
            log.write_csv(&self.dir.join(format!("{stem}_run.csv")))?;
            log.write_predictions_csv(&self.dir.join(format!("{stem}_predictions.csv")))?;
            let summary = serde_json::json!({ "config": &self.cfg, "summary": log.summary() });
            write_json(&self.dir.join(format!("{stem}_summary.json")), &summary)?;
            Ok(log)
        };
        run().map_err(|e| e.at_stage(kind.name()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub run_dir: PathBuf,
    pub persistently_exciting: bool,
    pub model_set_generators: usize,
    /// Whether the true `[A|B]` lies in the model set, when it is known.
    pub true_model_contained: Option<bool>,
    pub reach_hulls: Vec<IntervalVector>,
    pub runs: Vec<RunSummary>,
    #[serde(skip)]
    pub logs: Vec<RunLog>,
}

impl ExperimentReport {
    /// True when every closed-loop run finished without an infeasible step.
    pub fn all_feasible(&self) -> bool {
        self.runs.iter().all(|r| r.terminated.is_none())
    }

    pub fn log(&self, name: &str) -> Option<&RunLog> {
        self.logs.iter().find(|l| l.controller == name)
    }
}

/// `step, err_<controller>...`: tracking-error norms side by side; empty
/// after a run ended.
fn write_comparison_csv(path: &Path, logs: &[RunLog]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["step".to_string()];
    header.extend(
        logs.iter()
            .map(|l| format!("err_{}", l.controller.replace('-', "_"))),
    );
    w.write_record(&header)?;
    let steps = logs.iter().map(|l| l.entries.len()).max().unwrap_or(0);
    for t in 0..steps {
        let mut rec = vec![t.to_string()];
        for l in logs {
            rec.push(
                l.entries
                    .get(t)
                    .map_or(String::new(), |e| e.err_norm.to_string()),
            );
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// collect → model set → reach → closed-loop ZPC, nominal MPC and RMPC-zono
/// on one noise realization → `comparison.csv` and `summary.json`.
///
/// Data-only experiments stop after the reach stage. An infeasible step ends
/// that controller's run and is reported in the summary, not as an error.
pub fn run_experiment_in(cfg: ExperimentConfig, dir: PathBuf) -> Result<ExperimentReport> {
    let exp = Experiment::in_dir(cfg, dir)?;
    let (data, pe) = exp.collect()?;
    let ms = exp.model_set(&data)?;
    let contained = exp
        .cfg
        .system()
        .map(|s| ms.contains(&hcat(s.state_dim(), &[&s.a, &s.b])));
    let hulls = exp.reach(&ms)?;
    let mut logs = Vec::new();
    if exp.cfg.system().is_some() {
        let noise = exp.realization();
        for kind in ControllerKind::ALL {
            logs.push(exp.closed_loop(kind, Some(&ms), &noise)?);
        }
        write_comparison_csv(&exp.dir.join("comparison.csv"), &logs)
            .map_err(|e| e.at_stage("compare"))?;
    }
    let report = ExperimentReport {
        config: exp.cfg.clone(),
        run_dir: exp.dir.clone(),
        persistently_exciting: pe,
        model_set_generators: ms.num_generators(),
        true_model_contained: contained,
        reach_hulls: hulls,
        runs: logs.iter().map(RunLog::summary).collect(),
        logs,
    };
    write_json(&exp.dir.join("summary.json"), &report)?;
    Ok(report)
}

/// [`run_experiment_in`] under a fresh `seed-<seed>-<unix>` directory.
pub fn run_experiment(cfg: ExperimentConfig) -> Result<ExperimentReport> {
    let dir = fresh_dir(&cfg.output_dir, &run_dir_name(cfg.seed))?;
    run_experiment_in(cfg, dir)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloEntry {
    pub seed: u64,
    pub true_model_contained: Option<bool>,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: ExperimentConfig,
    pub entries: Vec<MonteCarloEntry>,
    /// Measured constraint violations per controller, summed over seeds.
    pub violations: Vec<(String, usize)>,
    /// Runs per controller that ended on an infeasible step.
    pub infeasible_runs: Vec<(String, usize)>,
}

/// `count` experiments with seeds `cfg.seed, cfg.seed + 1, …`, in parallel,
/// each in `dir/seed-<seed>`; writes `montecarlo.json`.
pub fn montecarlo(cfg: &ExperimentConfig, count: usize, dir: &Path) -> Result<MonteCarloReport> {
    let entries = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(i);
            let seed = c.seed;
            let r = run_experiment_in(c, dir.join(format!("seed-{seed}")))?;
            Ok(MonteCarloEntry {
                seed,
                true_model_contained: r.true_model_contained,
                runs: r.runs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tally = |f: &dyn Fn(&RunSummary) -> usize| -> Vec<(String, usize)> {
        ControllerKind::ALL
            .iter()
            .map(|k| {
                let total = entries
                    .iter()
                    .flat_map(|e| e.runs.iter().filter(|r| r.controller == k.name()))
                    .map(f)
                    .sum();
                (k.name().to_string(), total)
            })
            .collect()
    };
    let report = MonteCarloReport {
        config: cfg.clone(),
        violations: tally(&|r| r.constraint_violations),
        infeasible_runs: tally(&|r| usize::from(r.terminated.is_some())),
        entries,
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("montecarlo.json"), &report)?;
    Ok(report)
}
