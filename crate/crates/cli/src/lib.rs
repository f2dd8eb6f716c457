//! Problem files, solver reports and corpus runs for `achunify`.

pub mod bench;
pub mod parse;
pub mod run;

pub use bench::{bench_corpus, read_manifest, BenchReport, BenchRow, ManifestEntry};
pub use parse::{
    parse_problem, parse_term, ParseError, ParseErrorKind, ProblemFile, DEFAULT_BOUND,
};
pub use run::{run_solve, ReportStats, RunOptions, SolveReport, Status, Unverified};
