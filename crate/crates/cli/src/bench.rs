//! Runs a directory of problems against the outcomes recorded in its
//! `manifest.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::parse::parse_problem;
use crate::run::{run_solve, RunOptions, Status};

/// One manifest row: the problem file and its reference outcome.
#[derive(Clone, Debug, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub status: String,
    pub solutions: usize,
    /// Reference wall time, for information only.
    pub ms: u64,
    pub bound: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub file: String,
    pub problem: String,
    pub bound: u32,
    pub expected_status: String,
    pub status: String,
    pub status_match: bool,
    pub reference_solutions: usize,
    pub raw_solutions: usize,
    pub minimized_solutions: usize,
    pub reference_ms: u64,
    pub ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(|r| r.status_match)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>5} {:>12} {:>12} {:>4} {:>4} {:>4} {:>8} {:>8}",
            "file", "bound", "expected", "status", "ref", "raw", "min", "ref ms", "ms"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<24} {:>5} {:>12} {:>12} {:>4} {:>4} {:>4} {:>8} {:>8}{}",
                r.file,
                r.bound,
                r.expected_status,
                r.status,
                r.reference_solutions,
                r.raw_solutions,
                r.minimized_solutions,
                r.reference_ms,
                r.ms,
                if r.status_match { "" } else { "  MISMATCH" }
            );
        }
        out
    }
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Solves every problem of the manifest at its bound, in raw and minimized
/// mode.
pub fn bench_corpus(dir: &Path) -> Result<BenchReport> {
    let mut rows = Vec::new();
    for entry in read_manifest(dir)? {
        let path = dir.join(&entry.file);
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let file = parse_problem(&text).with_context(|| format!("parsing {}", path.display()))?;
        let opts = RunOptions {
            bound: Some(entry.bound),
            check: true,
            ..RunOptions::default()
        };
        let raw = run_solve(&file, &opts)?;
        let min = run_solve(
            &file,
            &RunOptions {
                minimize: true,
                ..opts
            },
        )?;
        let problem = file
            .equations
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        let status = if raw.status == Status::ResourceLimit {
            raw.status
        } else {
            min.status
        };
        rows.push(BenchRow {
            file: entry.file.clone(),
            problem,
            bound: entry.bound,
            status_match: status.name() == entry.status,
            expected_status: entry.status,
            status: status.name().to_string(),
            reference_solutions: entry.solutions,
            raw_solutions: raw.substitutions.len(),
            minimized_solutions: min.substitutions.len(),
            reference_ms: entry.ms,
            ms: raw.stats.ms,
        });
    }
    Ok(BenchReport { rows })
}
