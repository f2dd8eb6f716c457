//! Substitutions: finite maps from variables to canonical terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{Term, TermError, Var};

#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(x: Var, t: Term) -> Self {
        let mut s = Self::new();
        s.insert(x, t);
        s
    }

    /// Inserts a binding without any idempotence bookkeeping. Identity
    /// bindings are dropped.
    pub fn insert(&mut self, x: Var, t: Term) {
        if t.as_var() == Some(&x) {
            self.map.remove(&x);
        } else {
            self.map.insert(x, t);
        }
    }

    pub fn get(&self, x: &Var) -> Option<&Term> {
        self.map.get(x)
    }

    pub fn contains(&self, x: &Var) -> bool {
        self.map.contains_key(x)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    pub fn range_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for t in self.map.values() {
            t.collect_vars(&mut out);
        }
        out
    }

    /// Value of `x`, or `x` itself when unbound.
    pub fn lookup(&self, x: &Var) -> Term {
        self.map
            .get(x)
            .cloned()
            .unwrap_or_else(|| Term::Var(x.clone()))
    }

    /// Homomorphic application followed by re-canonicalization.
    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(x) => self.lookup(x),
            Term::Const(_) => t.clone(),
            Term::H(inner) => Term::h(self.apply(inner)),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
            Term::Sum(args) => Term::sum(args.iter().map(|a| self.apply(a))),
        }
    }

    /// `σ{x ↦ t} ∪ {x ↦ t}`. The caller guarantees `x ∉ Var(t)`.
    pub fn compose(&self, x: &Var, t: &Term) -> Result<Substitution, TermError> {
        if self.map.contains_key(x) {
            return Err(TermError::AlreadyBound(x.clone()));
        }
        let step = Substitution::singleton(x.clone(), t.clone());
        let mut out = Substitution::new();
        for (k, v) in &self.map {
            out.insert(k.clone(), step.apply(v));
        }
        out.insert(x.clone(), t.clone());
        Ok(out)
    }

    /// Sequential composition: apply `self`, then `next`.
    pub fn then(&self, next: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (k, v) in &self.map {
            out.insert(k.clone(), next.apply(v));
        }
        for (k, v) in &next.map {
            if !self.map.contains_key(k) {
                out.insert(k.clone(), v.clone());
            }
        }
        out
    }

    pub fn restrict(&self, vars: &BTreeSet<Var>) -> Substitution {
        Substitution {
            map: self
                .map
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn is_idempotent(&self) -> bool {
        self.range_vars().iter().all(|v| !self.map.contains_key(v))
    }

    /// Renames variables in both domain and range.
    pub fn rename(&self, renaming: &BTreeMap<Var, Var>) -> Substitution {
        let mut out = Substitution::new();
        for (k, v) in &self.map {
            let k = renaming.get(k).cloned().unwrap_or_else(|| k.clone());
            out.insert(k, rename_term(v, renaming));
        }
        out
    }

    /// Renames fresh variables to `_v1, _v2, ...` in an order that depends
    /// only on the structure of the substitution, so two substitutions that
    /// differ by a bijective renaming of fresh variables map to the same
    /// result.
    pub fn canonical_fresh(&self) -> Substitution {
        self.canonical_fresh_fixing(&BTreeSet::new())
    }

    /// As [`Substitution::canonical_fresh`], leaving the fresh variables in
    /// `fixed` untouched. The renamed ones are numbered after every
    /// variable in `fixed`.
    pub fn canonical_fresh_fixing(&self, fixed: &BTreeSet<Var>) -> Substitution {
        let renamable = |x: &Var| x.is_fresh() && !fixed.contains(x);
        let mut fresh = BTreeSet::new();
        for (k, v) in &self.map {
            if renamable(k) {
                fresh.insert(k.clone());
            }
            for x in v.vars() {
                if renamable(&x) {
                    fresh.insert(x);
                }
            }
        }
        if fresh.is_empty() {
            return self.clone();
        }
        let mut keyed: Vec<(Vec<(Term, Term)>, Var)> = fresh
            .into_iter()
            .map(|u| (self.fresh_signature(&u, &renamable), u))
            .collect();
        keyed.sort();

        // Variables with equal signatures are interchangeable as far as the
        // signature can tell; try every order inside such groups.
        let mut groups: Vec<Vec<Var>> = Vec::new();
        for (i, (sig, u)) in keyed.iter().enumerate() {
            if i > 0 && keyed[i - 1].0 == *sig {
                groups.last_mut().unwrap().push(u.clone());
            } else {
                groups.push(vec![u.clone()]);
            }
        }
        let base = fixed.iter().filter_map(Var::fresh_index).max().unwrap_or(0);
        let combos: usize = groups.iter().map(|g| factorial(g.len())).product();
        let orders: Vec<Vec<Var>> = if combos <= 720 {
            group_orders(&groups)
        } else {
            vec![keyed.into_iter().map(|(_, u)| u).collect()]
        };
        orders
            .into_iter()
            .map(|order| {
                let renaming: BTreeMap<Var, Var> = order
                    .into_iter()
                    .enumerate()
                    .map(|(i, u)| (u, Var::Fresh(base + i as u32 + 1)))
                    .collect();
                self.rename(&renaming)
            })
            .min()
            .unwrap()
    }

    fn fresh_signature(&self, u: &Var, renamable: &dyn Fn(&Var) -> bool) -> Vec<(Term, Term)> {
        let mask = |x: &Var| -> Var {
            if x == u {
                Var::user("#")
            } else if renamable(x) {
                Var::user("*")
            } else {
                x.clone()
            }
        };
        let mut sig: Vec<(Term, Term)> = self
            .map
            .iter()
            .filter(|(k, v)| *k == u || v.occurs(u))
            .map(|(k, v)| (Term::Var(mask(k)), map_vars(v, &mask)))
            .collect();
        sig.sort();
        sig
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

fn permutations(items: &[Var]) -> Vec<Vec<Var>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn group_orders(groups: &[Vec<Var>]) -> Vec<Vec<Var>> {
    let mut acc: Vec<Vec<Var>> = vec![Vec::new()];
    for g in groups {
        let perms = permutations(g);
        let mut next = Vec::with_capacity(acc.len() * perms.len());
        for prefix in &acc {
            for p in &perms {
                let mut o = prefix.clone();
                o.extend(p.iter().cloned());
                next.push(o);
            }
        }
        acc = next;
    }
    acc
}

fn map_vars(t: &Term, f: &dyn Fn(&Var) -> Var) -> Term {
    match t {
        Term::Var(x) => Term::Var(f(x)),
        Term::Const(_) => t.clone(),
        Term::H(inner) => Term::h(map_vars(inner, f)),
        Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| map_vars(a, f)).collect()),
        Term::Sum(args) => Term::sum(args.iter().map(|a| map_vars(a, f))),
    }
}

pub fn rename_term(t: &Term, renaming: &BTreeMap<Var, Var>) -> Term {
    map_vars(t, &|x| {
        renaming.get(x).cloned().unwrap_or_else(|| x.clone())
    })
}

pub fn apply(sigma: &Substitution, t: &Term) -> Term {
    sigma.apply(t)
}

impl FromIterator<(Var, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (k, v) in iter {
            s.insert(k, v);
        }
        s
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
