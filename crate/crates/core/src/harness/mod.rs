//! Ground-truth simulation, data collection and the benchmark experiments.

mod config;
mod experiment;
mod system;

pub use config::{DataOnly, ExperimentConfig, NoiseConfig, SystemSpec};
pub use experiment::{
    fresh_dir, montecarlo, run_dir_name, run_experiment, run_experiment_in, ControllerKind,
    Experiment, ExperimentReport, MonteCarloEntry, MonteCarloReport,
};
pub use system::{
    closed_loop_rng, collect_data, collection_rng, simulate_plant, simulate_with, CollectedData,
    NoiseRealization, SimulatedPlant, Simulation, SystemModel,
};
