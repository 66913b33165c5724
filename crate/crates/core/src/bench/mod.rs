//! Configuration, multi-seed solving, hyperparameter search and benchmark
//! suites.

mod config;
mod solve;
mod suites;
mod sweep;

pub use config::{parse_regular_spec, parse_seeds, GraphFormat, GraphSource, RunConfig, DEFAULT_LR};
pub use solve::{run_seeds, run_solve, summarize, thread_pool, SeedOutcome, SolveSummary};
pub use suites::{bundled_data_dir, loglog_slope, run_bench, BenchOptions, BenchReport, BenchRow, Suite};
pub use sweep::{run_sweep, LeaderboardRow, SweepResult, SweepSpec};
