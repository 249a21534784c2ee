//! Standard-library companion to `regret-design-core`: a rayon executor,
//! JSON problem configurations, CSV/JSON output and the `regret-design`
//! command-line tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod output;

pub use cli::{execute, run, Cli, Command, CompareMode, ProblemKind, RunConfig};
pub use error::CliError;
pub use exec::RayonExecutor;
pub use output::{Format, Report, Table};
