//! Brute-force checks over a finite universe of ground terms: soundness of
//! claimed unifiers, enumeration of ground unifiers, instance checking and
//! completeness of a unifier set.
//!
//! Nothing here uses the inference engine or the matcher. Equality modulo
//! ACh is decided by comparing R1-normal forms.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::subst::Substitution;
use crate::term::{
    equations_vars, h_height, leading_h, normalize_r1, strip_h, wrap_h, Equation, Name, Term, Var,
};

/// Default cap on search nodes.
pub const NODE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search space too large: more than {0} nodes")]
    TooLarge(u64),
}

/// A finite set of ground terms in R1-normal form: sums of at most
/// `max_summands` atoms, where an atom is `h^k(c)` with `k <= max_h_height`
/// or, if free symbols are given, `f(a1, ..., an)` over atoms of the first
/// kind. Terms larger than `max_term_size` are left out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniverseSpec {
    pub constants: Vec<Name>,
    pub max_h_height: u32,
    pub max_summands: usize,
    pub free_symbols: Vec<(Name, usize)>,
    pub max_term_size: usize,
}

impl UniverseSpec {
    pub fn new(constants: &[&str], max_h_height: u32, max_summands: usize) -> Self {
        UniverseSpec {
            constants: constants.iter().map(|c| Name::new(c)).collect(),
            max_h_height,
            max_summands,
            free_symbols: Vec::new(),
            max_term_size: usize::MAX,
        }
    }

    pub fn atoms(&self) -> Vec<Term> {
        let mut base = Vec::new();
        for c in &self.constants {
            for k in 0..=self.max_h_height {
                base.push(wrap_h(Term::Const(c.clone()), k));
            }
        }
        let mut atoms = base.clone();
        for (f, arity) in &self.free_symbols {
            let mut tuples: Vec<Vec<Term>> = vec![Vec::new()];
            for _ in 0..*arity {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        base.iter().map(move |a| {
                            let mut t = t.clone();
                            t.push(a.clone());
                            t
                        })
                    })
                    .collect();
            }
            atoms.extend(tuples.into_iter().map(|args| Term::app(f.clone(), args)));
        }
        atoms.sort();
        atoms
    }

    /// All universe terms, by size and then by the term order.
    pub fn terms(&self) -> Vec<Term> {
        let atoms = self.atoms();
        let mut out = Vec::new();
        let mut pick = Vec::new();
        multisets(&atoms, 0, self.max_summands, &mut pick, &mut out);
        out.retain(|t| t.size() <= self.max_term_size);
        out.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
        out
    }
}

fn multisets(atoms: &[Term], from: usize, room: usize, pick: &mut Vec<Term>, out: &mut Vec<Term>) {
    if !pick.is_empty() {
        out.push(Term::sum(pick.iter().cloned()));
    }
    if room == 0 {
        return;
    }
    for i in from..atoms.len() {
        pick.push(atoms[i].clone());
        multisets(atoms, i, room - 1, pick, out);
        pick.pop();
    }
}

/// Whether `σ` solves every equation modulo ACh with both instantiated
/// sides of h-height at most `κ`.
pub fn verify_unifier(equations: &[Equation], sigma: &Substitution, kappa: u32) -> bool {
    equations.iter().all(|eq| {
        let l = normalize_r1(&sigma.apply(&eq.lhs));
        let r = normalize_r1(&sigma.apply(&eq.rhs));
        l == r && h_height(&l) <= kappa && h_height(&r) <= kappa
    })
}

/// Every ground substitution over `Var(equations)` with values in the
/// universe that passes [`verify_unifier`], sorted.
pub fn enumerate_ground_unifiers(
    equations: &[Equation],
    universe: &UniverseSpec,
    kappa: u32,
) -> Result<Vec<Substitution>, OracleError> {
    let terms = universe.terms();
    let members: BTreeSet<Term> = terms.iter().cloned().collect();
    let eqs: Vec<(Term, Term)> = equations
        .iter()
        .map(|e| (e.lhs.clone(), e.rhs.clone()))
        .collect();
    let mut search = Search {
        eqs: &eqs,
        vars: equations_vars(equations).into_iter().collect(),
        universe: Some((&terms, &members)),
        nodes: 0,
        limit: NODE_LIMIT,
        first_only: false,
        found: Vec::new(),
    };
    search.run(&mut BTreeMap::new())?;
    let mut out: Vec<Substitution> = search
        .found
        .into_iter()
        .map(|a| a.into_iter().collect())
        .filter(|s| verify_unifier(equations, s, kappa))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Whether some `σ'` has `xθ =ACh xσσ'` for every `x ∈ xs`. `θ` must be
/// ground on `xs`.
pub fn is_instance(
    sigma: &Substitution,
    theta: &Substitution,
    xs: &BTreeSet<Var>,
) -> Result<bool, OracleError> {
    let eqs: Vec<(Term, Term)> = xs
        .iter()
        .map(|x| (sigma.lookup(x), theta.lookup(x)))
        .collect();
    debug_assert!(
        eqs.iter().all(|(_, t)| t.is_ground()),
        "instance target must be ground"
    );
    let mut vars = BTreeSet::new();
    for (p, _) in &eqs {
        p.collect_vars(&mut vars);
    }
    let mut search = Search {
        eqs: &eqs,
        vars: vars.into_iter().collect(),
        universe: None,
        nodes: 0,
        limit: NODE_LIMIT,
        first_only: true,
        found: Vec::new(),
    };
    search.run(&mut BTreeMap::new())?;
    Ok(!search.found.is_empty())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompletenessReport {
    /// Number of ground unifiers examined.
    pub ground_unifiers: u64,
    /// Ground unifiers that are an instance of no member of the set.
    pub uncovered: Vec<Substitution>,
}

impl CompletenessReport {
    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Checks that every ground unifier over the universe is an instance of
/// some member of `sigmas` on `Var(equations)`.
///
/// Variable-disjoint groups of equations are enumerated separately; a
/// combined ground unifier is covered when one member of the set covers
/// each of its parts.
pub fn check_completeness(
    equations: &[Equation],
    sigmas: &[Substitution],
    universe: &UniverseSpec,
    kappa: u32,
) -> Result<CompletenessReport, OracleError> {
    let mut groups = components(equations);
    if groups.len() > 1 && shares_fresh_across(&groups, sigmas) {
        groups = vec![equations.to_vec()];
    }

    // Per group: distinct coverage masks, each with one witness.
    let mut per_group: Vec<Vec<(Vec<bool>, Substitution)>> = Vec::new();
    let mut total: u64 = 1;
    for group in &groups {
        let xs = equations_vars(group);
        let thetas = enumerate_ground_unifiers(group, universe, kappa)?;
        total = total.saturating_mul(thetas.len() as u64);
        let mut masks: BTreeMap<Vec<bool>, Substitution> = BTreeMap::new();
        for theta in thetas {
            let mut mask = Vec::with_capacity(sigmas.len());
            for s in sigmas {
                mask.push(is_instance(&s.restrict(&xs), &theta, &xs)?);
            }
            masks.entry(mask).or_insert(theta);
        }
        per_group.push(masks.into_iter().collect());
    }

    let mut report = CompletenessReport {
        ground_unifiers: total,
        uncovered: Vec::new(),
    };
    if total == 0 {
        return Ok(report);
    }
    let mut choice = vec![0usize; per_group.len()];
    loop {
        let covered =
            (0..sigmas.len()).any(|i| per_group.iter().zip(&choice).all(|(g, &c)| g[c].0[i]));
        if !covered {
            let mut witness = Substitution::new();
            for (g, &c) in per_group.iter().zip(&choice) {
                for (x, t) in g[c].1.iter() {
                    witness.insert(x.clone(), t.clone());
                }
            }
            report.uncovered.push(witness);
        }
        // Advance the mixed-radix counter.
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < per_group[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    Ok(report)
}

/// Splits equations into groups that share no variables.
fn components(equations: &[Equation]) -> Vec<Vec<Equation>> {
    let mut groups: Vec<(BTreeSet<Var>, Vec<Equation>)> = Vec::new();
    for eq in equations {
        let vars = eq.vars();
        let mut merged = (vars.clone(), vec![eq.clone()]);
        let mut keep = Vec::new();
        for g in groups {
            if g.0.is_disjoint(&vars) {
                keep.push(g);
            } else {
                merged.0.extend(g.0);
                let mut eqs = g.1;
                eqs.extend(merged.1);
                merged.1 = eqs;
            }
        }
        keep.push(merged);
        groups = keep;
    }
    groups.into_iter().map(|g| g.1).collect()
}

fn shares_fresh_across(groups: &[Vec<Equation>], sigmas: &[Substitution]) -> bool {
    sigmas.iter().any(|s| {
        let ranges: Vec<BTreeSet<Var>> = groups
            .iter()
            .map(|g| {
                let mut out = BTreeSet::new();
                for x in equations_vars(g) {
                    s.lookup(&x).collect_vars(&mut out);
                }
                out
            })
            .collect();
        (0..ranges.len()).any(|i| (i + 1..ranges.len()).any(|j| !ranges[i].is_disjoint(&ranges[j])))
    })
}

struct Search<'a> {
    eqs: &'a [(Term, Term)],
    vars: Vec<Var>,
    /// Candidate values are restricted to this set when present.
    universe: Option<(&'a [Term], &'a BTreeSet<Term>)>,
    nodes: u64,
    limit: u64,
    first_only: bool,
    found: Vec<BTreeMap<Var, Term>>,
}

impl Search<'_> {
    fn run(&mut self, assign: &mut BTreeMap<Var, Term>) -> Result<(), OracleError> {
        if self.first_only && !self.found.is_empty() {
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(OracleError::TooLarge(self.limit));
        }
        let sub: Substitution = assign.iter().map(|(x, t)| (x.clone(), t.clone())).collect();
        let mut pending: Vec<(Term, Term)> = self
            .eqs
            .iter()
            .map(|(l, r)| (normalize_r1(&sub.apply(l)), normalize_r1(&sub.apply(r))))
            .collect();

        let mut best: Option<(Var, BTreeSet<Term>)> = None;
        // Smallest variable set of a side whose grounding would constrain
        // the other side.
        let mut nearest: Option<BTreeSet<Var>> = None;
        while let Some((l, r)) = pending.pop() {
            let (l, r) = cancel(&l, &r);
            if l.is_empty() || r.is_empty() {
                if l.is_empty() && r.is_empty() {
                    continue;
                }
                return Ok(());
            }
            // A single rigid atom on each side: compare heads, decompose.
            if let ([a], [b]) = (l.as_slice(), r.as_slice()) {
                let ((ka, ca), (kb, cb)) = (core(a), core(b));
                if !matches!(ca, Term::Var(_)) && !matches!(cb, Term::Var(_)) {
                    match (ca, cb) {
                        (Term::App(f, xs), Term::App(g, ys))
                            if ka == kb && f == g && xs.len() == ys.len() =>
                        {
                            pending.extend(xs.iter().cloned().zip(ys.iter().cloned()));
                            continue;
                        }
                        _ => return Ok(()),
                    }
                }
            }
            let lg = l.iter().all(Term::is_ground);
            let rg = r.iter().all(Term::is_ground);
            if lg && rg {
                return Ok(());
            }
            if !lg && !rg {
                for side in [&l, &r] {
                    let mut vs = BTreeSet::new();
                    for a in side.iter() {
                        a.collect_vars(&mut vs);
                    }
                    if nearest.as_ref().is_none_or(|n| vs.len() < n.len()) {
                        nearest = Some(vs);
                    }
                }
                continue;
            }
            let (g, p) = if lg { (l, r) } else { (r, l) };
            match candidates(&p, &g) {
                None => return Ok(()),
                Some((u, cands)) => {
                    if cands.is_empty() {
                        return Ok(());
                    }
                    if best.as_ref().is_none_or(|(_, c)| cands.len() < c.len()) {
                        best = Some((u, cands));
                    }
                }
            }
        }

        let open: Vec<&Var> = self
            .vars
            .iter()
            .filter(|v| !assign.contains_key(*v))
            .collect();
        if open.is_empty() {
            self.found.push(assign.clone());
            return Ok(());
        }

        let (u, cands): (Var, Vec<Term>) = if let Some((u, c)) = best {
            (u, c.into_iter().collect())
        } else if let Some((terms, _)) = self.universe {
            let u = nearest
                .and_then(|n| n.into_iter().next())
                .unwrap_or_else(|| open[0].clone());
            (u, terms.to_vec())
        } else {
            // Every open variable of an instance check sits under some
            // equation with a ground side, so this is unreachable there.
            return Ok(());
        };
        for val in cands {
            if let Some((_, members)) = self.universe {
                if !members.contains(&val) {
                    continue;
                }
            }
            assign.insert(u.clone(), val);
            self.run(assign)?;
            assign.remove(&u);
            if self.first_only && !self.found.is_empty() {
                break;
            }
        }
        Ok(())
    }
}

fn core(atom: &Term) -> (u32, &Term) {
    let k = leading_h(atom);
    (k, strip_h(atom, k))
}

/// Summands of two normal terms with common atoms removed.
fn cancel(l: &Term, r: &Term) -> (Vec<Term>, Vec<Term>) {
    let mut right: Vec<Term> = r.summands().to_vec();
    let mut left = Vec::new();
    for a in l.summands() {
        match right.iter().position(|b| b == a) {
            Some(i) => {
                right.remove(i);
            }
            None => left.push(a.clone()),
        }
    }
    (left, right)
}

/// Picks a variable of the partial side `p` and the values it may take
/// given that `p` must equal the ground atoms `g` (common atoms already
/// cancelled). `None` means no assignment can work.
fn candidates(p: &[Term], g: &[Term]) -> Option<(Var, BTreeSet<Term>)> {
    let flex: Vec<(u32, &Var)> = p
        .iter()
        .filter_map(|a| match core(a) {
            (k, Term::Var(u)) => Some((k, u)),
            _ => None,
        })
        .collect();
    let rigid = p.len() - flex.len();
    if p.iter().any(Term::is_ground) || p.len() > g.len() {
        return None;
    }
    if let Some(&(k, u)) = flex.first() {
        // Room left for this atom once every other atom takes at least one.
        let room = g.len() - (p.len() - 1);
        let mut eligible: Vec<Term> = g
            .iter()
            .filter(|a| leading_h(a) >= k)
            .map(|a| strip_h(a, k).clone())
            .collect();
        eligible.sort();
        let mut out = BTreeSet::new();
        if flex.len() == 1 && rigid == 0 {
            if eligible.len() != g.len() {
                return None;
            }
            out.insert(Term::sum(eligible));
        } else {
            sub_multisets(&eligible, &mut out);
            out.retain(|t| t.summands().len() <= room);
        }
        return Some((u.clone(), out));
    }
    // Only rigid atoms with variables inside free symbols remain.
    let mut vars = BTreeSet::new();
    for a in p {
        a.collect_vars(&mut vars);
    }
    let u = vars.into_iter().next()?;
    let mut out = BTreeSet::new();
    for a in g {
        out.extend(pieces(a));
    }
    Some((u, out))
}

/// Every value a variable occurring in a term equal to the ground `g` can
/// take: a nonempty sub-multiset of some atom list of `g` (its top-level
/// summands, or the summands of an argument of a free symbol anywhere
/// inside), with the same number `k` of leading h removed from each.
fn pieces(g: &Term) -> BTreeSet<Term> {
    let mut lists = Vec::new();
    atom_lists(g, &mut lists);
    let mut out = BTreeSet::new();
    for list in lists {
        let top = list.iter().map(leading_h).max().unwrap_or(0);
        for k in 0..=top {
            let mut eligible: Vec<Term> = list
                .iter()
                .filter(|a| leading_h(a) >= k)
                .map(|a| strip_h(a, k).clone())
                .collect();
            eligible.sort();
            sub_multisets(&eligible, &mut out);
        }
    }
    out
}

fn atom_lists(g: &Term, out: &mut Vec<Vec<Term>>) {
    let atoms = g.summands().to_vec();
    for a in &atoms {
        if let Term::App(_, args) = strip_h(a, leading_h(a)) {
            for arg in args {
                atom_lists(arg, out);
            }
        }
    }
    out.push(atoms);
}

/// Nonempty sub-multisets of a sorted list, as sums.
fn sub_multisets(sorted: &[Term], out: &mut BTreeSet<Term>) {
    let mut groups: Vec<(&Term, usize)> = Vec::new();
    for t in sorted {
        match groups.last_mut() {
            Some((u, n)) if *u == t => *n += 1,
            _ => groups.push((t, 1)),
        }
    }
    let mut counts = vec![0usize; groups.len()];
    loop {
        let mut i = 0;
        while i < counts.len() && counts[i] == groups[i].1 {
            counts[i] = 0;
            i += 1;
        }
        if i == counts.len() {
            return;
        }
        counts[i] += 1;
        let parts = groups
            .iter()
            .zip(&counts)
            .flat_map(|((t, _), &c)| std::iter::repeat_n((*t).clone(), c));
        out.insert(Term::sum(parts));
    }
}
