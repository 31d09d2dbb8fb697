//! Takagi-van der Waerden functions and the correlated random walks behind
//! their increments.
//!
//! * [`radix`]: exact points `u / r^D` and their digit structure.
//! * [`takagi`]: evaluation of `f_r`, its increments and their decomposition.
//! * [`erwvrp`]: the memory-one `±1` walk, its exact laws and simulation.
//! * [`stats`], [`experiments`], [`report`]: Monte Carlo limit-law checks.
//! * [`classify`]: differentiability class of weighted sums `f_{r,a}`.

pub mod classify;
pub mod error;
pub mod erwvrp;
pub mod experiments;
pub mod radix;
pub mod report;
pub mod sequence;
pub mod stats;
pub mod takagi;

pub use classify::{classify_sequence, DiffLabel, DifferentiabilityClass};
pub use error::{Error, Result};
pub use erwvrp::MemoryParameter;
pub use radix::RadixPoint;
pub use report::{ExperimentReport, ReportFormat, Statistic};
pub use sequence::StepSequence;
