//! Flattened equations, the dependency graph over their variables, and the
//! h-depth map with its propagation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{Equation, Name, Term, Var};

/// Head symbol of the right-hand side of a non-variable flat equation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    H,
    Plus,
    /// Free symbol; constants are free symbols of arity zero.
    Free(Name),
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Head::H => f.write_str("h"),
            Head::Plus => f.write_str("+"),
            Head::Free(name) => write!(f, "{name}"),
        }
    }
}

/// An equation in flattened form. Every participant is a variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlatEq {
    VarVar(Var, Var),
    /// `x = h(y)`
    HEq(Var, Var),
    /// `x = y1 + ... + yn`, right side sorted, n >= 2.
    SumEq(Var, Vec<Var>),
    /// `x = f(x1, ..., xn)`; constants have no arguments.
    FreeEq(Var, Name, Vec<Var>),
}

impl FlatEq {
    /// Builds a sum equation, sorting the summands.
    pub fn sum(x: Var, mut ys: Vec<Var>) -> FlatEq {
        assert!(ys.len() >= 2, "sum equation needs two summands");
        ys.sort();
        FlatEq::SumEq(x, ys)
    }

    pub fn lhs(&self) -> &Var {
        match self {
            FlatEq::VarVar(x, _)
            | FlatEq::HEq(x, _)
            | FlatEq::SumEq(x, _)
            | FlatEq::FreeEq(x, _, _) => x,
        }
    }

    pub fn rhs_vars(&self) -> &[Var] {
        match self {
            FlatEq::VarVar(_, y) | FlatEq::HEq(_, y) => std::slice::from_ref(y),
            FlatEq::SumEq(_, ys) | FlatEq::FreeEq(_, _, ys) => ys,
        }
    }

    pub fn head(&self) -> Option<Head> {
        match self {
            FlatEq::VarVar(..) => None,
            FlatEq::HEq(..) => Some(Head::H),
            FlatEq::SumEq(..) => Some(Head::Plus),
            FlatEq::FreeEq(_, f, _) => Some(Head::Free(f.clone())),
        }
    }

    pub fn rhs_term(&self) -> Term {
        match self {
            FlatEq::VarVar(_, y) => Term::Var(y.clone()),
            FlatEq::HEq(_, y) => Term::h(Term::Var(y.clone())),
            FlatEq::SumEq(_, ys) => Term::var_sum(ys),
            FlatEq::FreeEq(_, f, ys) => {
                Term::app(f.clone(), ys.iter().cloned().map(Term::Var).collect())
            }
        }
    }

    pub fn to_equation(&self) -> Equation {
        Equation::new(Term::Var(self.lhs().clone()), self.rhs_term())
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        std::iter::once(self.lhs()).chain(self.rhs_vars().iter())
    }

    /// Number of function symbols on the right side, an n-ary sum counting
    /// as n-1 binary ones.
    pub fn symbol_count(&self) -> usize {
        match self {
            FlatEq::VarVar(..) => 0,
            FlatEq::HEq(..) | FlatEq::FreeEq(..) => 1,
            FlatEq::SumEq(_, ys) => ys.len() - 1,
        }
    }

    /// Replaces every occurrence of `from` by `to`.
    pub fn rename(&self, from: &Var, to: &Var) -> FlatEq {
        let r = |v: &Var| if v == from { to.clone() } else { v.clone() };
        match self {
            FlatEq::VarVar(x, y) => FlatEq::VarVar(r(x), r(y)),
            FlatEq::HEq(x, y) => FlatEq::HEq(r(x), r(y)),
            FlatEq::SumEq(x, ys) => FlatEq::sum(r(x), ys.iter().map(r).collect()),
            FlatEq::FreeEq(x, f, ys) => FlatEq::FreeEq(r(x), f.clone(), ys.iter().map(r).collect()),
        }
    }

    /// Converts `x = t` back to flat form when `t` is a variable or a sum of
    /// variables. Returns `None` for anything else.
    pub fn from_var_binding(x: &Var, t: &Term) -> Option<FlatEq> {
        match t {
            Term::Var(y) => Some(FlatEq::VarVar(x.clone(), y.clone())),
            Term::Sum(args) => {
                let ys = args
                    .iter()
                    .map(|a| a.as_var().cloned())
                    .collect::<Option<Vec<_>>>()?;
                Some(FlatEq::sum(x.clone(), ys))
            }
            _ => None,
        }
    }
}

impl fmt::Display for FlatEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =? {}", self.lhs(), self.rhs_term())
    }
}

impl fmt::Debug for FlatEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn flat_vars(gamma: &[FlatEq]) -> BTreeSet<Var> {
    gamma.iter().flat_map(|e| e.vars().cloned()).collect()
}

/// Generator of fresh variables, copied (never shared) when the search
/// branches.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreshVarSource {
    next: u32,
}

impl FreshVarSource {
    pub fn new() -> Self {
        FreshVarSource { next: 1 }
    }

    /// A source whose variables are distinct from every fresh variable in
    /// `vars`.
    pub fn after<'a, I: IntoIterator<Item = &'a Var>>(vars: I) -> Self {
        let max = vars
            .into_iter()
            .filter_map(Var::fresh_index)
            .max()
            .unwrap_or(0);
        FreshVarSource { next: max + 1 }
    }

    pub fn fresh(&mut self) -> Var {
        let v = Var::Fresh(self.next.max(1));
        self.next = self.next.max(1) + 1;
        v
    }

    pub fn peek(&self) -> u32 {
        self.next.max(1)
    }
}

/// h-depth of every variable of a problem.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DepthMap {
    entries: BTreeMap<Var, u32>,
}

impl DepthMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Depth of `x`; absent variables have depth 0.
    pub fn get(&self, x: &Var) -> u32 {
        self.entries.get(x).copied().unwrap_or(0)
    }

    pub fn set(&mut self, x: Var, d: u32) {
        self.entries.insert(x, d);
    }

    /// Adds `x` with depth 0 unless already present.
    pub fn ensure(&mut self, x: &Var) {
        if !self.entries.contains_key(x) {
            self.entries.insert(x.clone(), 0);
        }
    }

    pub fn remove(&mut self, x: &Var) -> Option<u32> {
        self.entries.remove(x)
    }

    pub fn contains(&self, x: &Var) -> bool {
        self.entries.contains_key(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, u32)> {
        self.entries.iter().map(|(v, d)| (v, *d))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FromIterator<(Var, u32)> for DepthMap {
    fn from_iter<I: IntoIterator<Item = (Var, u32)>>(iter: I) -> Self {
        DepthMap {
            entries: iter.into_iter().collect(),
        }
    }
}

impl fmt::Debug for DepthMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

/// Largest depth in the map, 0 when empty.
pub fn max_val(delta: &DepthMap) -> u32 {
    delta.entries.values().copied().max().unwrap_or(0)
}

/// Flattens canonical equations. Every fresh variable, and every original
/// variable, enters the returned depth map with value 0.
pub fn flatten(equations: &[Equation], fresh: &mut FreshVarSource) -> (Vec<FlatEq>, DepthMap) {
    let mut out = Vec::new();
    for eq in equations {
        match (&eq.lhs, &eq.rhs) {
            (Term::Var(x), Term::Var(y)) => out.push(FlatEq::VarVar(x.clone(), y.clone())),
            (Term::Var(x), t) | (t, Term::Var(x)) => flatten_into(x, t, fresh, &mut out),
            (s, t) => {
                let v = fresh.fresh();
                flatten_into(&v, s, fresh, &mut out);
                flatten_into(&v, t, fresh, &mut out);
            }
        }
    }
    let mut delta = DepthMap::new();
    for v in flat_vars(&out) {
        delta.ensure(&v);
    }
    for eq in equations {
        for v in eq.vars() {
            delta.ensure(&v);
        }
    }
    (out, delta)
}

fn flatten_into(x: &Var, t: &Term, fresh: &mut FreshVarSource, out: &mut Vec<FlatEq>) {
    match t {
        Term::Var(y) => out.push(FlatEq::VarVar(x.clone(), y.clone())),
        Term::Const(c) => out.push(FlatEq::FreeEq(x.clone(), c.clone(), Vec::new())),
        Term::H(inner) => {
            let y = name_of(inner, fresh, out);
            out.push(FlatEq::HEq(x.clone(), y));
        }
        Term::App(f, args) => {
            let ys = args.iter().map(|a| name_of(a, fresh, out)).collect();
            out.push(FlatEq::FreeEq(x.clone(), f.clone(), ys));
        }
        Term::Sum(args) => {
            let ys = args.iter().map(|a| name_of(a, fresh, out)).collect();
            out.push(FlatEq::sum(x.clone(), ys));
        }
    }
}

fn name_of(t: &Term, fresh: &mut FreshVarSource, out: &mut Vec<FlatEq>) -> Var {
    match t {
        Term::Var(y) => y.clone(),
        _ => {
            let v = fresh.fresh();
            flatten_into(&v, t, fresh, out);
            v
        }
    }
}

/// Edge label in the dependency graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    H,
    Plus,
    Free(Name),
}

impl EdgeLabel {
    /// Depth increment along the edge.
    pub fn weight(&self) -> u32 {
        match self {
            EdgeLabel::H => 1,
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DepGraph {
    pub nodes: BTreeSet<Var>,
    /// `(from, label, to)`, one entry per occurrence, so sums with repeated
    /// summands yield parallel edges.
    pub edges: Vec<(Var, EdgeLabel, Var)>,
}

impl DepGraph {
    pub fn out_edges<'a>(
        &'a self,
        x: &'a Var,
    ) -> impl Iterator<Item = &'a (Var, EdgeLabel, Var)> + 'a {
        self.edges.iter().filter(move |(from, _, _)| from == x)
    }

    pub fn count_edges(&self, from: &Var, label: &EdgeLabel, to: &Var) -> usize {
        self.edges
            .iter()
            .filter(|(a, l, b)| a == from && l == label && b == to)
            .count()
    }
}

pub fn build_graph(gamma: &[FlatEq]) -> DepGraph {
    let mut g = DepGraph {
        nodes: flat_vars(gamma),
        edges: Vec::new(),
    };
    for eq in gamma {
        let label = match eq {
            FlatEq::VarVar(..) => continue,
            FlatEq::HEq(..) => EdgeLabel::H,
            FlatEq::SumEq(..) => EdgeLabel::Plus,
            FlatEq::FreeEq(_, f, _) => EdgeLabel::Free(f.clone()),
        };
        for y in eq.rhs_vars() {
            g.edges.push((eq.lhs().clone(), label.clone(), y.clone()));
        }
    }
    g
}

/// Raised when some depth exceeds the bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundExceeded {
    pub var: Var,
    pub depth: u32,
}

fn constraints(gamma: &[FlatEq]) -> Vec<(Var, Var, u32)> {
    build_graph(gamma)
        .edges
        .into_iter()
        .map(|(x, l, y)| (x, y, l.weight()))
        .collect()
}

/// Least fixpoint of the depth update rules above `delta`, checking the
/// bound after every update.
pub fn propagate_depths(
    gamma: &[FlatEq],
    delta: &DepthMap,
    kappa: u32,
) -> Result<DepthMap, BoundExceeded> {
    let edges = constraints(gamma);
    let mut d = delta.clone();
    for v in flat_vars(gamma) {
        d.ensure(&v);
    }
    check_bound(&d, kappa)?;
    loop {
        let mut changed = false;
        for (x, y, w) in &edges {
            let want = d.get(x) + w;
            if d.get(y) < want {
                d.set(y.clone(), want);
                if want > kappa {
                    return Err(BoundExceeded {
                        var: y.clone(),
                        depth: want,
                    });
                }
                changed = true;
            }
        }
        if !changed {
            return Ok(d);
        }
    }
}

/// As [`propagate_depths`], but the next violated constraint is chosen by
/// `pick(n)`, which must return an index below `n`. Any choice sequence
/// reaches the same fixpoint.
pub fn propagate_depths_with(
    gamma: &[FlatEq],
    delta: &DepthMap,
    kappa: u32,
    pick: &mut dyn FnMut(usize) -> usize,
) -> Result<DepthMap, BoundExceeded> {
    let edges = constraints(gamma);
    let mut d = delta.clone();
    for v in flat_vars(gamma) {
        d.ensure(&v);
    }
    check_bound(&d, kappa)?;
    loop {
        let violated: Vec<&(Var, Var, u32)> = edges
            .iter()
            .filter(|(x, y, w)| d.get(y) < d.get(x) + w)
            .collect();
        if violated.is_empty() {
            return Ok(d);
        }
        let (x, y, w) = violated[pick(violated.len())];
        let want = d.get(x) + w;
        d.set(y.clone(), want);
        if want > kappa {
            return Err(BoundExceeded {
                var: y.clone(),
                depth: want,
            });
        }
    }
}

fn check_bound(d: &DepthMap, kappa: u32) -> Result<(), BoundExceeded> {
    match d.iter().find(|(_, v)| *v > kappa) {
        Some((x, depth)) => Err(BoundExceeded {
            var: x.clone(),
            depth,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: &str) -> Var {
        Var::user(n)
    }
    fn v(n: &str) -> Term {
        Term::user_var(n)
    }
    fn heq(a: &str, b: &str) -> FlatEq {
        FlatEq::HEq(x(a), x(b))
    }
    fn sumeq(a: &str, bs: &[&str]) -> FlatEq {
        FlatEq::sum(x(a), bs.iter().map(|b| x(b)).collect())
    }
    fn zeros(gamma: &[FlatEq]) -> DepthMap {
        flat_vars(gamma).into_iter().map(|v| (v, 0)).collect()
    }
    fn depths(pairs: &[(&str, u32)]) -> DepthMap {
        pairs.iter().map(|(n, d)| (x(n), *d)).collect()
    }

    #[test]
    fn flatten_nested_sum_and_h() {
        // h(h(x)) = (s + w) + (y + z)
        let eq = Equation::new(
            Term::h(Term::h(v("x"))),
            Term::plus(Term::plus(v("s"), v("w")), Term::plus(v("y"), v("z"))),
        );
        let mut fresh = FreshVarSource::new();
        let (flat, delta) = flatten(&[eq], &mut fresh);
        let root = Var::Fresh(1);
        let heqs: Vec<_> = flat
            .iter()
            .filter(|e| matches!(e, FlatEq::HEq(..)))
            .collect();
        assert_eq!(heqs.len(), 2);
        assert!(flat.contains(&FlatEq::sum(
            root.clone(),
            vec![x("s"), x("w"), x("y"), x("z")]
        )));
        assert!(flat
            .iter()
            .any(|e| matches!(e, FlatEq::HEq(l, _) if *l == root)));
        assert!(flat.contains(&FlatEq::HEq(Var::Fresh(2), x("x"))));
        assert_eq!(max_val(&delta), 0);
        assert_eq!(delta.len(), 7);
    }

    #[test]
    fn flatten_var_var_untouched() {
        let mut fresh = FreshVarSource::new();
        let (flat, _) = flatten(&[Equation::new(v("x"), v("y"))], &mut fresh);
        assert_eq!(flat, vec![FlatEq::VarVar(x("x"), x("y"))]);
        assert_eq!(fresh.peek(), 1);
    }

    #[test]
    fn flatten_orients() {
        let mut fresh = FreshVarSource::new();
        let (flat, _) = flatten(&[Equation::new(Term::h(v("z")), v("x"))], &mut fresh);
        assert_eq!(flat, vec![heq("x", "z")]);
    }

    #[test]
    fn graph_edges() {
        let g = build_graph(&[heq("x", "y")]);
        assert_eq!(g.edges, vec![(x("x"), EdgeLabel::H, x("y"))]);
        // x = h(h(h(y)))
        let g = build_graph(&[heq("x", "v"), heq("v", "v1"), heq("v1", "y")]);
        assert_eq!(g.edges.iter().filter(|e| e.1 == EdgeLabel::H).count(), 3);
        let g = build_graph(&[FlatEq::VarVar(x("a"), x("b"))]);
        assert!(g.edges.is_empty());
        assert_eq!(g.nodes.len(), 2);
    }

    #[test]
    fn three_h_chain_depths() {
        let gamma = [heq("x", "v"), heq("v", "v1"), heq("v1", "y")];
        let d = propagate_depths(&gamma, &zeros(&gamma), 10).unwrap();
        assert_eq!(d, depths(&[("x", 0), ("y", 3), ("v", 1), ("v1", 2)]));
    }

    #[test]
    fn sum_children_inherit_depth() {
        let gamma = [sumeq("z", &["x", "y"]), heq("x1", "v"), heq("v", "z")];
        let d = propagate_depths(&gamma, &zeros(&gamma), 10).unwrap();
        assert_eq!(
            d,
            depths(&[("x", 2), ("y", 2), ("z", 2), ("x1", 0), ("v", 1)])
        );
    }

    #[test]
    fn bound_exceeded_after_second_split() {
        let gamma = [
            heq("v", "y"),
            sumeq("v11", &["v13", "v14"]),
            heq("v11", "v13"),
            heq("v12", "v14"),
            heq("y", "v11"),
            heq("x", "v12"),
        ];
        let err = propagate_depths(&gamma, &zeros(&gamma), 2).unwrap_err();
        assert_eq!(
            err,
            BoundExceeded {
                var: x("v13"),
                depth: 3
            }
        );
        assert!(propagate_depths(&gamma, &zeros(&gamma), 3).is_ok());
    }

    #[test]
    fn h_cycle_always_exceeds() {
        let gamma = [heq("x", "y"), heq("y", "x")];
        for k in [0, 1, 5, 40] {
            assert!(propagate_depths(&gamma, &zeros(&gamma), k).is_err());
        }
    }

    #[test]
    fn free_edges_carry_depth() {
        let gamma = [
            heq("x", "y"),
            FlatEq::FreeEq(x("y"), Name::new("f"), vec![x("a"), x("b")]),
        ];
        let d = propagate_depths(&gamma, &zeros(&gamma), 10).unwrap();
        assert_eq!(d.get(&x("a")), 1);
        assert_eq!(d.get(&x("b")), 1);
    }

    #[test]
    fn max_val_cases() {
        assert_eq!(max_val(&depths(&[("x", 0), ("y", 3)])), 3);
        assert_eq!(max_val(&depths(&[("x", 0), ("y", 0)])), 0);
        assert_eq!(max_val(&DepthMap::new()), 0);
        let d = depths(&[
            ("x", 2),
            ("v", 0),
            ("v1", 1),
            ("v11", 1),
            ("v12", 1),
            ("v13", 2),
            ("v14", 2),
        ]);
        assert_eq!(max_val(&d), 2);
    }

    #[test]
    fn fresh_source_skips_existing() {
        let mut f = FreshVarSource::after(&[Var::Fresh(4), x("a")]);
        assert_eq!(f.fresh(), Var::Fresh(5));
        assert_eq!(f.fresh(), Var::Fresh(6));
        assert_eq!(FreshVarSource::default().clone().fresh(), Var::Fresh(1));
    }
}
