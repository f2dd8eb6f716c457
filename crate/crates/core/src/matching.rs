//! Matching modulo ACh and the more-general ordering on substitutions.
//!
//! Terms are compared in R1-normal form, where every sum is a multiset of
//! atoms `h^k(c)`, `h^k(f(...))` or `h^k(x)`. Pattern variables are flexible;
//! every variable of the target is rigid.

use std::collections::{BTreeMap, BTreeSet};

use crate::subst::Substitution;
use crate::term::{leading_h, normalize_r1, strip_h, wrap_h, Term, Var};

type Binding = BTreeMap<Var, Term>;

/// All matchers of `pattern` onto `target` extending nothing, up to the
/// choices the search distinguishes. Inputs need not be normalized.
pub fn match_term(pattern: &Term, target: &Term) -> Vec<Substitution> {
    match_all(&[(pattern.clone(), target.clone())])
        .into_iter()
        .map(|b| b.into_iter().collect())
        .collect()
}

/// Simultaneous matchers for a list of `(pattern, target)` pairs.
fn match_all(pairs: &[(Term, Term)]) -> Vec<Binding> {
    let mut sols = vec![Binding::new()];
    for (p, t) in pairs {
        let (p, t) = (normalize_r1(p), normalize_r1(t));
        let mut next = Vec::new();
        for b in &sols {
            next.extend(match_sum(
                p.summands().to_vec(),
                t.summands().to_vec(),
                b.clone(),
            ));
        }
        sols = dedup(next);
        if sols.is_empty() {
            break;
        }
    }
    sols
}

fn dedup(v: Vec<Binding>) -> Vec<Binding> {
    let mut seen = BTreeSet::new();
    v.into_iter().filter(|b| seen.insert(b.clone())).collect()
}

fn core(atom: &Term) -> (u32, &Term) {
    let k = leading_h(atom);
    (k, strip_h(atom, k))
}

/// Atoms of the R1-normal form of `h^k(t)` for normal `t`.
fn lifted_atoms(t: &Term, k: u32) -> Vec<Term> {
    t.summands().iter().map(|a| wrap_h(a.clone(), k)).collect()
}

fn remove_all(target: &mut Vec<Term>, atoms: &[Term]) -> bool {
    for a in atoms {
        match target.iter().position(|t| t == a) {
            Some(i) => {
                target.remove(i);
            }
            None => return false,
        }
    }
    true
}

fn match_sum(pattern: Vec<Term>, mut target: Vec<Term>, b: Binding) -> Vec<Binding> {
    if pattern.len() > target.len() {
        return Vec::new();
    }
    if pattern.is_empty() {
        return if target.is_empty() {
            vec![b]
        } else {
            Vec::new()
        };
    }

    // Bound flexible atoms are plain subtraction.
    let mut rest = Vec::new();
    for atom in &pattern {
        let (k, c) = core(atom);
        if let Term::Var(u) = c {
            if let Some(val) = b.get(u) {
                if !remove_all(&mut target, &lifted_atoms(val, k)) {
                    return Vec::new();
                }
                continue;
            }
        }
        rest.push(atom.clone());
    }
    if rest.len() != pattern.len() {
        return match_sum(rest, target, b);
    }

    // Rigid atoms are matched one to one.
    if let Some(i) = pattern
        .iter()
        .position(|a| !matches!(core(a).1, Term::Var(_)))
    {
        let mut others = pattern.clone();
        let atom = others.remove(i);
        let (k, c) = core(&atom);
        let mut out = Vec::new();
        let mut tried = BTreeSet::new();
        for (j, t) in target.iter().enumerate() {
            if !tried.insert(t.clone()) {
                continue;
            }
            let (tk, tc) = core(t);
            if tk != k {
                continue;
            }
            let inner = match (c, tc) {
                (Term::Const(a), Term::Const(bn)) if a == bn => vec![b.clone()],
                (Term::App(f, ps), Term::App(g, ts)) if f == g && ps.len() == ts.len() => {
                    let mut sols = vec![b.clone()];
                    for (p, t) in ps.iter().zip(ts) {
                        let mut next = Vec::new();
                        for s in sols {
                            next.extend(match_sum(p.summands().to_vec(), t.summands().to_vec(), s));
                        }
                        sols = dedup(next);
                    }
                    sols
                }
                _ => Vec::new(),
            };
            let mut remaining = target.clone();
            remaining.remove(j);
            for s in inner {
                out.extend(match_sum(others.clone(), remaining.clone(), s));
            }
        }
        return dedup(out);
    }

    // Only unbound flexible atoms `h^k(u)` remain. The first one takes a
    // nonempty sub-multiset of target atoms carrying at least k h's.
    let mut others = pattern.clone();
    let atom = others.remove(0);
    let (k, c) = core(&atom);
    let u = match c {
        Term::Var(u) => u.clone(),
        _ => unreachable!(),
    };
    let eligible: Vec<usize> = (0..target.len())
        .filter(|&j| leading_h(&target[j]) >= k)
        .collect();
    let mut out = Vec::new();
    let mut seen_values = BTreeSet::new();
    for mask in 1u64..(1u64 << eligible.len()) {
        let chosen: Vec<usize> = eligible
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask >> bit & 1 == 1)
            .map(|(_, &j)| j)
            .collect();
        if others.is_empty() && chosen.len() != target.len() {
            continue;
        }
        let value = Term::sum(chosen.iter().map(|&j| strip_h(&target[j], k).clone()));
        if !seen_values.insert(value.clone()) {
            continue;
        }
        let remaining: Vec<Term> = target
            .iter()
            .enumerate()
            .filter(|(j, _)| !chosen.contains(j))
            .map(|(_, t)| t.clone())
            .collect();
        let mut nb = b.clone();
        nb.insert(u.clone(), value);
        out.extend(match_sum(others.clone(), remaining, nb));
    }
    dedup(out)
}

/// `σ ≲ θ` on `xs`: some `ρ` has `xθ =ACh xσρ` for every `x ∈ xs`.
pub fn more_general(sigma: &Substitution, theta: &Substitution, xs: &BTreeSet<Var>) -> bool {
    let pairs: Vec<(Term, Term)> = xs
        .iter()
        .map(|x| (sigma.lookup(x), theta.lookup(x)))
        .collect();
    match_all(&pairs).into_iter().any(|b| {
        let rho: Substitution = b.into_iter().collect();
        pairs
            .iter()
            .all(|(p, t)| normalize_r1(&rho.apply(p)) == normalize_r1(t))
    })
}

/// Drops every substitution that is an instance of another one on `xs`.
/// Among equivalent ones the earliest is kept.
pub fn minimize(sigmas: &[Substitution], xs: &BTreeSet<Var>) -> Vec<Substitution> {
    let n = sigmas.len();
    let mut geq = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                geq[i][j] = more_general(&sigmas[i], &sigmas[j], xs);
            }
        }
    }
    (0..n)
        .filter(|&i| !(0..n).any(|j| j != i && geq[j][i] && (!geq[i][j] || j < i)))
        .map(|i| sigmas[i].clone())
        .collect()
}
