//! Dynamic data pruning: train on a per-checkpoint subset chosen from
//! running per-sample uncertainty statistics.

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod driver;
pub mod error;
pub mod exec;
pub mod learner;
pub mod policies;
pub mod report;
pub mod rng;
pub mod scoreboard;

pub use dataset::Dataset;
pub use driver::{run_experiment, RunConfig, RunRecord, Selector};
pub use error::{Error, Result};
pub use exec::Exec;
pub use learner::{Arch, LearnerConfig, LearnerState};
pub use policies::{PolicyKind, PolicySpec};
pub use scoreboard::Scoreboard;
