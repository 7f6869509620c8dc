//! Experiment orchestration, empirical checks and the command-line front end.

pub mod checks;
pub mod cli;
pub mod experiment;

use thiserror::Error;

pub use checks::{
    check_almost_independence, check_concentration, survival_predictions, ConcentrationReport, ConcentrationTolerances,
    IndependenceReport, TupleSpec,
};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, Task, Tolerances, TrialRecord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("invalid: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
}
