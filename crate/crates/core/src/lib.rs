//! Interacting reinforced stochastic processes on weighted networks:
//! graph structure, drift matrices and limit prediction, exact simulation,
//! and seeded Monte Carlo verification of the predicted limits.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod harness;
mod ser;
pub mod spectral;

pub use analysis::{analyze, Analysis, ClassAnalysis};
pub use config::{load_config, parse_config, ConfigError, ConfigErrors, ExperimentConfig};
pub use dynamics::{simulate, simulate_stream, Forcing, InteractionSystem, SimulationOptions, StepSchedule, Trajectory};
pub use error::{Error, Result};
pub use graph::{hierarchy_decomposition, validate_matrix, InteractionMatrix};
pub use harness::{run_ensemble, verify_against_prediction, EnsembleStats, Thresholds, VerificationReport};
pub use spectral::{Attitude, LimitKind, LimitPrediction};
