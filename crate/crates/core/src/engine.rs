//! The inference engine: rule application over triples `Γ || Δ || σ` with a
//! fixed rule priority, branching on AC unification.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use crate::ac::{get_eqs, unify_system_within, AcBudget, AcExhausted};
use crate::matching::minimize;
use crate::problem::{
    flat_vars, flatten, propagate_depths, DepthMap, FlatEq, FreshVarSource, Head,
};
use crate::subst::Substitution;
use crate::term::{ach_equal, equations_vars, normalize_r1, Equation, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Flatten,
    UpdateDepth,
    OccurCheck,
    BoundCheck,
    Trivial,
    Ve1,
    Orient,
    Clash,
    Decomposition,
    Splitting,
    AcUnification,
    Ve2,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::Flatten,
        Rule::UpdateDepth,
        Rule::OccurCheck,
        Rule::BoundCheck,
        Rule::Trivial,
        Rule::Ve1,
        Rule::Orient,
        Rule::Clash,
        Rule::Decomposition,
        Rule::Splitting,
        Rule::AcUnification,
        Rule::Ve2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Flatten => "flatten",
            Rule::UpdateDepth => "update_depth",
            Rule::OccurCheck => "occur_check",
            Rule::BoundCheck => "bound_check",
            Rule::Trivial => "trivial",
            Rule::Ve1 => "ve1",
            Rule::Orient => "orient",
            Rule::Clash => "clash",
            Rule::Decomposition => "decomposition",
            Rule::Splitting => "splitting",
            Rule::AcUnification => "ac_unification",
            Rule::Ve2 => "ve2",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BottomReason {
    Occur,
    Clash,
    Bound,
}

impl BottomReason {
    pub fn name(self) -> &'static str {
        match self {
            BottomReason::Occur => "occur",
            BottomReason::Clash => "clash",
            BottomReason::Bound => "bound",
        }
    }
}

/// Engine state `Γ || Δ || σ` of one branch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triple {
    pub gamma: Vec<FlatEq>,
    pub delta: DepthMap,
    pub sigma: Substitution,
    pub fresh: FreshVarSource,
    /// AC unification rounds so far on this branch.
    pub ac_rounds: u32,
}

impl Triple {
    pub fn new(gamma: Vec<FlatEq>, delta: DepthMap, fresh: FreshVarSource) -> Self {
        Triple {
            gamma,
            delta,
            sigma: Substitution::new(),
            fresh,
            ac_rounds: 0,
        }
    }

    /// Flattens `equations` into an initial triple.
    pub fn from_equations(equations: &[Equation]) -> Self {
        let vars = equations_vars(equations);
        let mut fresh = FreshVarSource::after(&vars);
        let (gamma, delta) = flatten(equations, &mut fresh);
        Triple::new(gamma, delta, fresh)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    /// One or more disjunctive successor states.
    Progress {
        rule: Rule,
        branches: Vec<Triple>,
    },
    /// No rule applies; only returned for an empty `Γ`.
    Stuck,
    Bottom {
        rule: Rule,
        reason: BottomReason,
    },
    /// `rule` applies but would exceed a limit.
    Exhausted {
        rule: Rule,
        limit: Limit,
    },
}

/// Limits checked inside a single step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepLimits {
    pub ac: AcBudget,
    /// AC unification is refused once a branch has done this many rounds.
    pub max_ac_rounds: Option<u32>,
}

/// Components of the termination measure. Multiset components are stored
/// sorted in descending order, so the derived lexicographic order is the
/// intended one: for a total order on elements the multiset extension
/// coincides with lexicographic comparison of descending sequences.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Measure {
    /// `κ + 1 - d(x)` for the left variable `x` of every sum equation.
    pub n: Vec<u32>,
    pub sym: usize,
    pub p: usize,
    pub m: usize,
    pub size: usize,
    /// `κ + 1 - d(x)` for every variable of `Γ`.
    pub hbar: Vec<u32>,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:?}, {}, {}, {}, {}, {:?})",
            self.n, self.sym, self.p, self.m, self.size, self.hbar
        )
    }
}

pub fn measure(t: &Triple, kappa: u32) -> Measure {
    let slack = |x: &Var| (kappa + 1).saturating_sub(t.delta.get(x));
    let mut n: Vec<u32> = t
        .gamma
        .iter()
        .filter(|e| matches!(e, FlatEq::SumEq(..)))
        .map(|e| slack(e.lhs()))
        .collect();
    n.sort_unstable_by(|a, b| b.cmp(a));
    let vars = flat_vars(&t.gamma);
    let mut hbar: Vec<u32> = vars.iter().map(slack).collect();
    hbar.sort_unstable_by(|a, b| b.cmp(a));
    Measure {
        n,
        sym: t.gamma.iter().map(FlatEq::symbol_count).sum(),
        p: vars.len(),
        m: 0,
        size: t.gamma.len(),
        hbar,
    }
}

/// Which variable of `x = y` VE1 eliminates: a fresh one over a user one,
/// the later of two fresh ones, and the left one of two user variables.
fn ve1_orientation<'a>(a: &'a Var, b: &'a Var) -> (&'a Var, &'a Var) {
    match (a.fresh_index(), b.fresh_index()) {
        (Some(i), Some(j)) if j > i => (b, a),
        (Some(_), _) => (a, b),
        (None, Some(_)) => (b, a),
        (None, None) => (a, b),
    }
}

fn progress(rule: Rule, t: Triple) -> StepResult {
    StepResult::Progress {
        rule,
        branches: vec![t],
    }
}

/// Applies the highest-priority applicable rule.
pub fn step(t: &Triple, kappa: u32) -> StepResult {
    step_within(t, kappa, &StepLimits::default())
}

pub fn step_within(t: &Triple, kappa: u32, limits: &StepLimits) -> StepResult {
    if t.gamma.is_empty() {
        return StepResult::Stuck;
    }

    // Occur check.
    for eq in &t.gamma {
        if !matches!(eq, FlatEq::VarVar(..)) && eq.rhs_vars().contains(eq.lhs()) {
            return StepResult::Bottom {
                rule: Rule::OccurCheck,
                reason: BottomReason::Occur,
            };
        }
    }

    // Depth propagation and bound check.
    match propagate_depths(&t.gamma, &t.delta, kappa) {
        Err(_) => {
            return StepResult::Bottom {
                rule: Rule::BoundCheck,
                reason: BottomReason::Bound,
            }
        }
        Ok(d) if d != t.delta => {
            return progress(
                Rule::UpdateDepth,
                Triple {
                    delta: d,
                    ..t.clone()
                },
            )
        }
        Ok(_) => {}
    }

    // Trivial: x = x, or an equation occurring twice.
    for (i, eq) in t.gamma.iter().enumerate() {
        let dup = matches!(eq, FlatEq::VarVar(a, b) if a == b) || t.gamma[..i].contains(eq);
        if dup {
            let mut next = t.clone();
            next.gamma.remove(i);
            return progress(Rule::Trivial, next);
        }
    }

    // VE1.
    if let Some(i) = t.gamma.iter().position(|e| matches!(e, FlatEq::VarVar(..))) {
        let FlatEq::VarVar(a, b) = &t.gamma[i] else {
            unreachable!()
        };
        return progress(Rule::Ve1, eliminate_var(t, i, a, b));
    }

    let mut by_lhs: BTreeMap<&Var, Vec<usize>> = BTreeMap::new();
    for (i, eq) in t.gamma.iter().enumerate() {
        by_lhs.entry(eq.lhs()).or_default().push(i);
    }

    // Clash.
    for idx in by_lhs.values() {
        for (p, &i) in idx.iter().enumerate() {
            for &j in &idx[p + 1..] {
                let (hi, hj) = (t.gamma[i].head().unwrap(), t.gamma[j].head().unwrap());
                let split_pair =
                    matches!((&hi, &hj), (Head::H, Head::Plus) | (Head::Plus, Head::H));
                if hi != hj && !split_pair {
                    return StepResult::Bottom {
                        rule: Rule::Clash,
                        reason: BottomReason::Clash,
                    };
                }
            }
        }
    }

    // Decomposition.
    let mut first_pair: Option<(usize, usize)> = None;
    for idx in by_lhs.values() {
        for (p, &i) in idx.iter().enumerate() {
            for &j in &idx[p + 1..] {
                let hi = t.gamma[i].head().unwrap();
                if hi != Head::Plus
                    && Some(&hi) == t.gamma[j].head().as_ref()
                    && first_pair.is_none_or(|f| (i, j) < f)
                {
                    first_pair = Some((i, j));
                }
            }
        }
    }
    if let Some((i, j)) = first_pair {
        return progress(Rule::Decomposition, decompose(t, i, j));
    }

    // Splitting.
    for idx in by_lhs.values() {
        let h = idx.iter().find(|&&i| matches!(t.gamma[i], FlatEq::HEq(..)));
        let s = idx
            .iter()
            .find(|&&i| matches!(t.gamma[i], FlatEq::SumEq(..)));
        if let (Some(&hi), Some(&si)) = (h, s) {
            return progress(Rule::Splitting, split(t, hi, si));
        }
    }

    // AC unification, once sum equations share a left side.
    let shared = by_lhs.values().any(|idx| {
        idx.iter()
            .filter(|&&i| matches!(t.gamma[i], FlatEq::SumEq(..)))
            .count()
            >= 2
    });
    if shared {
        if limits.max_ac_rounds.is_some_and(|m| t.ac_rounds >= m) {
            return StepResult::Exhausted {
                rule: Rule::AcUnification,
                limit: Limit::AcRounds,
            };
        }
        let branches = match ac_unify(t, &limits.ac) {
            Ok(b) => b,
            Err(e) => {
                let limit = match e {
                    AcExhausted::Unifiers => Limit::Branches,
                    AcExhausted::Deadline => Limit::Timeout,
                };
                return StepResult::Exhausted {
                    rule: Rule::AcUnification,
                    limit,
                };
            }
        };
        if branches.is_empty() {
            return StepResult::Bottom {
                rule: Rule::AcUnification,
                reason: BottomReason::Occur,
            };
        }
        return StepResult::Progress {
            rule: Rule::AcUnification,
            branches,
        };
    }

    // VE2 on a variable that occurs nowhere else.
    let mut occurrences: BTreeMap<&Var, usize> = BTreeMap::new();
    for eq in &t.gamma {
        for v in eq.vars() {
            *occurrences.entry(v).or_default() += 1;
        }
    }
    if let Some(i) = t.gamma.iter().position(|e| occurrences[e.lhs()] == 1) {
        let eq = &t.gamma[i];
        let mut next = t.clone();
        next.sigma = t
            .sigma
            .compose(eq.lhs(), &eq.rhs_term())
            .expect("eliminated variables leave Γ");
        next.delta.remove(eq.lhs());
        next.gamma.remove(i);
        return progress(Rule::Ve2, next);
    }

    // Every left variable occurs on some right side: a cycle.
    StepResult::Bottom {
        rule: Rule::OccurCheck,
        reason: BottomReason::Occur,
    }
}

fn eliminate_var(t: &Triple, i: usize, a: &Var, b: &Var) -> Triple {
    let (elim, keep) = ve1_orientation(a, b);
    let mut next = t.clone();
    next.gamma.remove(i);
    next.gamma = next.gamma.iter().map(|e| e.rename(elim, keep)).collect();
    let d = t.delta.get(elim).max(t.delta.get(keep));
    next.delta.remove(elim);
    next.delta.set(keep.clone(), d);
    next.sigma = t
        .sigma
        .compose(elim, &Term::Var(keep.clone()))
        .expect("eliminated variables leave Γ");
    next
}

/// Decomposes `x = f(s...)` (position `i`) against `x = f(t...)` (position
/// `j`): the first is dropped and `sₖ = tₖ` added.
pub fn decompose(t: &Triple, i: usize, j: usize) -> Triple {
    let mut next = t.clone();
    let new: Vec<FlatEq> = t.gamma[i]
        .rhs_vars()
        .iter()
        .zip(t.gamma[j].rhs_vars())
        .map(|(s, u)| FlatEq::VarVar(s.clone(), u.clone()))
        .collect();
    next.gamma.remove(i);
    next.gamma.extend(new);
    next
}

/// Splits `x = x1 + ... + xn` (position `si`) against `x = h(y)` (position
/// `hi`) into `y = v1 + ... + vn` and `xk = h(vk)`.
pub fn split(t: &Triple, hi: usize, si: usize) -> Triple {
    let FlatEq::HEq(_, y) = &t.gamma[hi] else {
        panic!("split needs an h-equation")
    };
    let FlatEq::SumEq(_, xs) = &t.gamma[si] else {
        panic!("split needs a sum equation")
    };
    let mut next = t.clone();
    let vs: Vec<Var> = xs.iter().map(|_| next.fresh.fresh()).collect();
    next.gamma.remove(si);
    next.gamma.push(FlatEq::sum(y.clone(), vs.clone()));
    for (xk, vk) in xs.iter().zip(&vs) {
        next.gamma.push(FlatEq::HEq(xk.clone(), vk.clone()));
        next.delta.set(vk.clone(), 0);
    }
    next
}

fn ac_unify(t: &Triple, budget: &AcBudget) -> Result<Vec<Triple>, AcExhausted> {
    let psi: Vec<(Var, Vec<Var>)> = t
        .gamma
        .iter()
        .filter_map(|e| match e {
            FlatEq::SumEq(x, ys) => Some((x.clone(), ys.clone())),
            _ => None,
        })
        .collect();
    let rest: Vec<FlatEq> = t
        .gamma
        .iter()
        .filter(|e| !matches!(e, FlatEq::SumEq(..)))
        .cloned()
        .collect();
    let mut fresh = t.fresh.clone();
    let thetas = unify_system_within(&psi, &mut fresh, budget)?;
    Ok(thetas
        .iter()
        .map(|theta| {
            let mut gamma = rest.clone();
            for eq in get_eqs(theta) {
                let x = eq.lhs.as_var().expect("bindings have variable left sides");
                gamma.push(
                    FlatEq::from_var_binding(x, &eq.rhs)
                        .expect("AC unifiers bind to variable sums"),
                );
            }
            let mut delta = t.delta.clone();
            for v in flat_vars(&gamma) {
                delta.ensure(&v);
            }
            Triple {
                gamma,
                delta,
                sigma: t.sigma.clone(),
                fresh: fresh.clone(),
                ac_rounds: t.ac_rounds + 1,
            }
        })
        .collect())
}

/// `σ` restricted to `xs`, with R1-normal range terms and canonically
/// numbered fresh variables.
pub fn present(sigma: &Substitution, xs: &BTreeSet<Var>) -> Substitution {
    sigma
        .restrict(xs)
        .iter()
        .map(|(x, t)| (x.clone(), normalize_r1(t)))
        .collect::<Substitution>()
        .canonical_fresh()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchOrder {
    DepthFirst,
    BreadthFirst,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Maximum number of live branches.
    pub max_branches: usize,
    pub timeout: Option<Duration>,
    /// AC unification rounds allowed per branch lineage.
    pub max_ac_rounds: u32,
    pub record_trace: bool,
    /// Remove unifiers that are instances of others.
    pub minimize: bool,
    pub order: BranchOrder,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_branches: 100_000,
            timeout: None,
            max_ac_rounds: 4,
            record_trace: false,
            minimize: false,
            order: BranchOrder::DepthFirst,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    Branches,
    Timeout,
    AcRounds,
}

impl Limit {
    pub fn name(self) -> &'static str {
        match self {
            Limit::Branches => "branches",
            Limit::Timeout => "timeout",
            Limit::AcRounds => "ac_rounds",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Unifiers(Vec<Substitution>),
    NoSolution,
    /// A limit tripped; `partial` holds the unifiers found before that.
    ResourceLimit {
        limit: Limit,
        partial: Vec<Substitution>,
    },
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub rules: BTreeMap<&'static str, u64>,
    /// Branches that reached an empty `Γ` or ⊥.
    pub branches: u64,
    pub failures: BTreeMap<&'static str, u64>,
    /// Distinct unifiers before minimization.
    pub raw_unifiers: usize,
    pub elapsed: Duration,
}

impl SolveStats {
    fn new() -> Self {
        let mut s = SolveStats::default();
        for r in Rule::ALL {
            s.rules.insert(r.name(), 0);
        }
        s
    }

    fn bump(&mut self, rule: Rule, by: u64) {
        *self.rules.entry(rule.name()).or_default() += by;
    }
}

/// One rule application with the measure before and after it. `after` has
/// one entry per successor branch and is empty for ⊥.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub rule: Rule,
    pub before: Measure,
    pub after: Vec<Measure>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub outcome: Outcome,
    pub stats: SolveStats,
    pub trace: Vec<TraceStep>,
}

/// Computes a complete set of κ-bounded unifiers of `equations`, restricted
/// to their variables.
pub fn solve(equations: &[Equation], kappa: u32, opts: &SolveOptions) -> Solution {
    let start = Instant::now();
    let mut stats = SolveStats::new();
    let mut trace = Vec::new();
    let xs: BTreeSet<Var> = equations_vars(equations);

    let finish = |outcome: Outcome, mut stats: SolveStats, trace: Vec<TraceStep>| {
        stats.elapsed = start.elapsed();
        Solution {
            outcome,
            stats,
            trace,
        }
    };

    // Equations that hold identically are dropped; a variable equated to a
    // proper term containing it has no solution.
    let mut remaining = Vec::new();
    for eq in equations {
        let eq = Equation::new(eq.lhs.canonical(), eq.rhs.canonical());
        if ach_equal(&eq.lhs, &eq.rhs) {
            stats.bump(Rule::Trivial, 1);
            continue;
        }
        let cyclic = match (&eq.lhs, &eq.rhs) {
            (Term::Var(x), t) | (t, Term::Var(x)) => !t.is_var() && t.occurs(x),
            _ => false,
        };
        if cyclic {
            stats.bump(Rule::OccurCheck, 1);
            stats.branches = 1;
            *stats
                .failures
                .entry(BottomReason::Occur.name())
                .or_default() += 1;
            return finish(Outcome::NoSolution, stats, trace);
        }
        if !eq.lhs.is_var() && eq.rhs.is_var() {
            stats.bump(Rule::Orient, 1);
        }
        remaining.push(eq);
    }

    let initial = Triple::from_equations(&remaining);
    stats.bump(
        Rule::Flatten,
        u64::from(initial.fresh.peek() - FreshVarSource::after(&xs).peek()),
    );

    let mut work = VecDeque::from([initial]);
    let mut found: Vec<Substitution> = Vec::new();
    let mut limit = None;
    while let Some(t) = match opts.order {
        BranchOrder::DepthFirst => work.pop_back(),
        BranchOrder::BreadthFirst => work.pop_front(),
    } {
        if opts.timeout.is_some_and(|d| start.elapsed() > d) {
            limit = Some(Limit::Timeout);
            break;
        }
        if t.gamma.is_empty() {
            stats.branches += 1;
            found.push(present(&t.sigma, &xs));
            continue;
        }
        let limits = StepLimits {
            ac: AcBudget {
                max_unifiers: Some(opts.max_branches.saturating_sub(work.len())),
                deadline: opts.timeout.map(|d| start + d),
            },
            max_ac_rounds: Some(opts.max_ac_rounds),
        };
        let result = step_within(&t, kappa, &limits);
        if opts.record_trace {
            let after = match &result {
                StepResult::Progress { branches, .. } => {
                    branches.iter().map(|b| measure(b, kappa)).collect()
                }
                _ => Vec::new(),
            };
            if let StepResult::Progress { rule, .. } | StepResult::Bottom { rule, .. } = &result {
                trace.push(TraceStep {
                    rule: *rule,
                    before: measure(&t, kappa),
                    after,
                });
            }
        }
        match result {
            StepResult::Progress { rule, branches } => {
                stats.bump(rule, 1);
                match opts.order {
                    BranchOrder::DepthFirst => work.extend(branches.into_iter().rev()),
                    BranchOrder::BreadthFirst => work.extend(branches),
                }
                if work.len() > opts.max_branches {
                    limit = Some(Limit::Branches);
                    break;
                }
            }
            StepResult::Bottom { rule, reason } => {
                stats.bump(rule, 1);
                stats.branches += 1;
                *stats.failures.entry(reason.name()).or_default() += 1;
            }
            StepResult::Exhausted { limit: l, .. } => {
                limit = Some(l);
                break;
            }
            StepResult::Stuck => unreachable!("step only stalls on an empty problem"),
        }
    }

    found.sort();
    found.dedup();
    stats.raw_unifiers = found.len();
    if opts.minimize {
        found = minimize(&found, &xs);
    }
    let outcome = match limit {
        Some(limit) => Outcome::ResourceLimit {
            limit,
            partial: found,
        },
        None if found.is_empty() => Outcome::NoSolution,
        None => Outcome::Unifiers(found),
    };
    finish(outcome, stats, trace)
}
