//! Command-line front end of `nsopt`: result records, single runs and the
//! benchmark harness.

pub mod bench;
pub mod record;
pub mod runner;

pub use record::{aggregate, gap_improvement, read_csv, write_csv, RunRecord};
pub use runner::{run_method, run_methods, Method, MethodRun, SolveOptions};
