//! Mutual-interference susceptible/infective epidemic model and the
//! machinery used to estimate its rate of spread from data.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration
//! parsing and the command line live in the `episim` companion crate.
//!
//! Modules, bottom-up:
//!
//! - [`model`]: the dynamical system, parameter admissibility, the rate of
//!   spread and the power-law change of variables.
//! - [`integrate`]: fixed-step RK4 trajectories of the model.
//! - [`clustering`]: z-score standardization, k-means and silhouette scores.
//! - [`neuralnet`]: the 1-5-1 tanh network trained by backpropagation with
//!   momentum.
//! - [`regression`]: polynomial least-squares baselines.
//! - [`pipeline`]: datasets, cooperative (cluster-wise) networks, evaluation
//!   and rate-of-spread estimation.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod clustering;
pub mod integrate;
pub mod model;
pub mod neuralnet;
pub mod pipeline;
pub mod regression;
pub mod seed;

mod math;

pub use clustering::{ClusterError, ClusterModel, StandardizationParams};
pub use integrate::{IntegrationConfig, IntegrationError, StopRule, Trajectory};
pub use model::{ControlSpec, ModelError, ModelParams, RecoverySpec, State, TransformedState};
pub use neuralnet::{MlpConfig, MlpModel, TrainConfig, TrainError};
pub use pipeline::{CooperativeModel, Dataset, EvalReport, PipelineError, RateReport};
pub use regression::{PolyModel, RegressionError};
