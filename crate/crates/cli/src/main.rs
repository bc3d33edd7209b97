use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use zpc::harness::{
    fresh_dir, montecarlo, run_dir_name, run_experiment, ControllerKind, Experiment,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "zpc",
    version,
    about = "Zonotopic data-driven predictive control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the data-collection campaign and write the trajectory.
    Collect(Common),
    /// Collect data and build the model set.
    ModelSet(Common),
    /// Reachable-set hulls from x0 under the input reference.
    Reach(Common),
    /// Closed-loop run of the data-driven controller.
    Zpc(Common),
    /// Closed-loop run of nominal MPC with the true model.
    Mpc(Common),
    /// Closed-loop run of the robust controller with the true model.
    RmpcZono(Common),
    /// Full experiment: all three controllers on one noise realization.
    Compare(Common),
    /// Repeated experiments over consecutive seeds.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        /// Number of seeds.
        #[arg(long, default_value_t = 20)]
        runs: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    data_count: Option<usize>,
    /// Data manifest for data-only configs.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
        if let Some(h) = self.horizon {
            cfg.controller.horizon = h;
        }
        if let Some(t) = self.data_count {
            cfg.data_count = t;
        }
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        if let Some(o) = &self.output_dir {
            cfg.output_dir = o.clone();
        }
        cfg.validate().context("config after overrides")?;
        Ok(cfg)
    }
}

/// Whether every closed-loop run stayed feasible.
type Feasible = bool;

fn single_run(common: &Common, kind: ControllerKind) -> Result<Feasible> {
    let exp = Experiment::create(common.resolve()?)?;
    let model = if kind == ControllerKind::Zpc {
        let (data, _) = exp.collect()?;
        Some(exp.model_set(&data)?)
    } else {
        None
    };
    let log = exp.closed_loop(kind, model.as_ref(), &exp.realization())?;
    let s = log.summary();
    println!("run directory: {}", exp.dir.display());
    println!(
        "{}: {} steps, {} constraint violations, mean tracking error {}",
        s.controller, s.steps, s.constraint_violations, s.mean_tracking_error
    );
    if let Some(t) = &s.terminated {
        eprintln!("infeasible: {t}");
    }
    Ok(s.terminated.is_none())
}

fn run(cli: Cli) -> Result<Feasible> {
    match cli.command {
        Command::Collect(c) => {
            let exp = Experiment::create(c.resolve()?)?;
            let (data, pe) = exp.collect()?;
            println!("run directory: {}", exp.dir.display());
            println!("{} samples, persistently exciting: {pe}", data.total_len());
            Ok(true)
        }
        Command::ModelSet(c) => {
            let exp = Experiment::create(c.resolve()?)?;
            let (data, _) = exp.collect()?;
            let ms = exp.model_set(&data)?;
            println!("run directory: {}", exp.dir.display());
            println!("model set with {} generators", ms.num_generators());
            Ok(true)
        }
        Command::Reach(c) => {
            let exp = Experiment::create(c.resolve()?)?;
            let (data, _) = exp.collect()?;
            let ms = exp.model_set(&data)?;
            let hulls = exp.reach(&ms)?;
            println!("run directory: {}", exp.dir.display());
            for (k, h) in hulls.iter().enumerate() {
                let w: Vec<String> = h.width().iter().map(|v| v.to_string()).collect();
                println!("step {k}: widths [{}]", w.join(", "));
            }
            Ok(true)
        }
        Command::Zpc(c) => single_run(&c, ControllerKind::Zpc),
        Command::Mpc(c) => single_run(&c, ControllerKind::Mpc),
        Command::RmpcZono(c) => single_run(&c, ControllerKind::RmpcZono),
        Command::Compare(c) => {
            let report = run_experiment(c.resolve()?)?;
            println!("run directory: {}", report.run_dir.display());
            for s in &report.runs {
                println!(
                    "{}: {} steps, {} constraint violations, mean tracking error {}",
                    s.controller, s.steps, s.constraint_violations, s.mean_tracking_error
                );
                if let Some(t) = &s.terminated {
                    eprintln!("{} infeasible: {t}", s.controller);
                }
            }
            Ok(report.all_feasible())
        }
        Command::Montecarlo { common, runs } => {
            let cfg = common.resolve()?;
            let dir = fresh_dir(
                &cfg.output_dir,
                &format!("montecarlo-{}", run_dir_name(cfg.seed)),
            )?;
            let report = montecarlo(&cfg, runs, &dir)?;
            println!("run directory: {}", dir.display());
            for ((name, v), (_, inf)) in report.violations.iter().zip(&report.infeasible_runs) {
                println!("{name}: {v} constraint violations, {inf} infeasible runs");
            }
            Ok(report.infeasible_runs.iter().all(|(_, n)| *n == 0))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
