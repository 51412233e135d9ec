//! Evolutionary multiobjective clustering of temporal data.
//!
//! Each time step is clustered by NSGA-II over a variable-length centroid
//! genome. At the last generation the population is re-scored with fitness
//! accumulated from the previous time, weighted by a smoothness weight that
//! is inferred from the data.

pub mod baselines;
pub mod data;
pub mod engine;
pub mod error;
pub mod genome;
pub mod harness;
pub mod metrics;
pub mod objectives;
pub mod smoothness;

pub use data::{SampleId, Snapshot, TemporalDataset};
pub use engine::{run_ercot, run_penalty_ec, run_static_ec, EngineConfig, RunResult, StepResult, Strategy};
pub use error::{Error, Result};
pub use genome::{Genome, Partition};
pub use objectives::ObjectiveVector;
