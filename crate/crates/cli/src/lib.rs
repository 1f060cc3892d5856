//! Configuration, job planning, cached execution and the averaging chain
//! behind the `photofrag` command.

pub mod cache;
pub mod config;
pub mod engine;
pub mod error;
pub mod plan;
pub mod quantity;

pub use config::{RunConfig, Stage};
pub use engine::{execute, ExecOptions, JobStatus, Manifest};
pub use error::{EngineError, Result};
pub use plan::{plan, Job, RunPlan};
