use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use achunify_core::{solve, verify_unifier, Limit, Outcome, SolveOptions, Substitution};
use serde::Serialize;
use thiserror::Error;

use crate::parse::ProblemFile;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the bound given in the file.
    pub bound: Option<u32>,
    /// Verify every unifier before reporting it.
    pub check: bool,
    pub minimize: bool,
    pub max_branches: Option<usize>,
    pub timeout_ms: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unifiable,
    NoSolution,
    ResourceLimit,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Unifiable => "unifiable",
            Status::NoSolution => "no_solution",
            Status::ResourceLimit => "resource_limit",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Unifiable => 0,
            Status::NoSolution => 1,
            Status::ResourceLimit => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportStats {
    pub rules: BTreeMap<String, u64>,
    pub branches: u64,
    pub ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub status: Status,
    pub bound: u32,
    pub unifiers: Vec<BTreeMap<String, String>>,
    pub stats: ReportStats,
    /// The limit that stopped the search, if any.
    #[serde(skip)]
    pub limit: Option<Limit>,
    /// Unifier count before minimization.
    #[serde(skip)]
    pub raw_unifiers: usize,
    #[serde(skip)]
    pub substitutions: Vec<Substitution>,
}

#[derive(Clone, Debug, Error)]
#[error("internal error: solver produced {unifier}, which does not solve the problem")]
pub struct Unverified {
    pub unifier: String,
}

pub fn run_solve(file: &ProblemFile, opts: &RunOptions) -> Result<SolveReport, Unverified> {
    let bound = opts.bound.unwrap_or(file.bound);
    let mut so = SolveOptions {
        minimize: opts.minimize,
        ..SolveOptions::default()
    };
    if let Some(n) = opts.max_branches {
        so.max_branches = n;
    }
    so.timeout = opts.timeout_ms.map(Duration::from_millis);

    let sol = solve(&file.equations, bound, &so);
    let (status, limit, subs) = match sol.outcome {
        Outcome::Unifiers(u) => (Status::Unifiable, None, u),
        Outcome::NoSolution => (Status::NoSolution, None, Vec::new()),
        Outcome::ResourceLimit { limit, partial } => (Status::ResourceLimit, Some(limit), partial),
    };
    if opts.check {
        if let Some(bad) = subs
            .iter()
            .find(|s| !verify_unifier(&file.equations, s, bound))
        {
            return Err(Unverified {
                unifier: bad.to_string(),
            });
        }
    }
    let unifiers = subs
        .iter()
        .map(|s| {
            s.iter()
                .map(|(x, t)| (x.to_string(), t.to_string()))
                .collect()
        })
        .collect();
    Ok(SolveReport {
        status,
        bound,
        unifiers,
        stats: ReportStats {
            rules: sol
                .stats
                .rules
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            branches: sol.stats.branches,
            ms: sol.stats.elapsed.as_millis() as u64,
        },
        limit,
        raw_unifiers: sol.stats.raw_unifiers,
        substitutions: subs,
    })
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "status: {}", self.status.name());
        if let Some(l) = self.limit {
            let _ = writeln!(out, "limit: {}", l.name());
        }
        let _ = writeln!(out, "bound: {}", self.bound);
        let _ = writeln!(out, "unifiers: {}", self.substitutions.len());
        for (i, s) in self.substitutions.iter().enumerate() {
            let _ = writeln!(out, "  {:>2}. {s}", i + 1);
        }
        let applied: Vec<String> = self
            .stats
            .rules
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(k, n)| format!("{k}={n}"))
            .collect();
        let _ = writeln!(out, "rules: {}", applied.join(" "));
        let _ = writeln!(out, "branches: {}", self.stats.branches);
        let _ = writeln!(out, "time: {} ms", self.stats.ms);
        out
    }
}
