//! Terms over a signature containing an associative-commutative `+`, a unary
//! homomorphism `h` distributing over `+`, and uninterpreted free symbols.
//!
//! A [`Term`] built through the smart constructors is always in AC-canonical
//! form: sums are a single n-ary node with at least two arguments, no sum has a
//! sum child, and sum arguments are sorted by the derived total order. With
//! this representation equality modulo AC is plain structural equality.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Prefix reserved for solver-generated variables.
pub const FRESH_PREFIX: &str = "_v";

/// Name of the homomorphism symbol.
pub const H_SYMBOL: &str = "h";

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl std::borrow::Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A variable. User variables come from the input problem; fresh variables
/// are generated by the solver and print as `_v<n>`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    User(Name),
    Fresh(u32),
}

impl Var {
    pub fn user(name: &str) -> Self {
        Var::User(Name::new(name))
    }

    /// Parses a printed variable name, recognising the fresh-variable prefix.
    pub fn parse(s: &str) -> Self {
        match s
            .strip_prefix(FRESH_PREFIX)
            .and_then(|rest| rest.parse().ok())
        {
            Some(index) => Var::Fresh(index),
            None => Var::user(s),
        }
    }

    pub fn is_fresh(&self) -> bool {
        matches!(self, Var::Fresh(_))
    }

    pub fn fresh_index(&self) -> Option<u32> {
        match self {
            Var::Fresh(i) => Some(*i),
            Var::User(_) => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::User(name) => write!(f, "{name}"),
            Var::Fresh(i) => write!(f, "{FRESH_PREFIX}{i}"),
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A term in AC-canonical form.
///
/// The variant order doubles as the head-kind component of the total order
/// used to sort sum arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const(Name),
    /// Free symbol applied to at least one argument.
    App(Name, Vec<Term>),
    H(Box<Term>),
    /// At least two arguments, none of them a sum, sorted.
    Sum(Vec<Term>),
}

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn user_var(name: &str) -> Term {
        Term::Var(Var::user(name))
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(Name::new(name))
    }

    /// Free-symbol application. An empty argument list yields a constant.
    pub fn app(f: Name, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Const(f)
        } else {
            Term::App(f, args)
        }
    }

    pub fn h(t: Term) -> Term {
        Term::H(Box::new(t))
    }

    /// Builds the canonical sum of the given terms, flattening nested sums.
    ///
    /// A single summand is returned unchanged. Panics on an empty iterator:
    /// `+` has no unit, so there is no empty sum.
    pub fn sum<I: IntoIterator<Item = Term>>(items: I) -> Term {
        let mut args = Vec::new();
        for t in items {
            match t {
                Term::Sum(inner) => args.extend(inner),
                other => args.push(other),
            }
        }
        match args.len() {
            0 => panic!("empty sum"),
            1 => args.pop().unwrap(),
            _ => {
                args.sort();
                Term::Sum(args)
            }
        }
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::sum([a, b])
    }

    /// Sum of variables, with repetition.
    pub fn var_sum<'a, I: IntoIterator<Item = &'a Var>>(vars: I) -> Term {
        Term::sum(vars.into_iter().cloned().map(Term::Var))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) => true,
            Term::H(t) => t.is_ground(),
            Term::App(_, args) | Term::Sum(args) => args.iter().all(Term::is_ground),
        }
    }

    /// The summands of a sum, or the term itself.
    pub fn summands(&self) -> &[Term] {
        match self {
            Term::Sum(args) => args,
            other => std::slice::from_ref(other),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::H(t) => t.collect_vars(out),
            Term::App(_, args) | Term::Sum(args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn occurs(&self, x: &Var) -> bool {
        match self {
            Term::Var(v) => v == x,
            Term::Const(_) => false,
            Term::H(t) => t.occurs(x),
            Term::App(_, args) | Term::Sum(args) => args.iter().any(|a| a.occurs(x)),
        }
    }

    /// Number of symbol occurrences, counting an n-ary sum as n-1 binary `+`.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::H(t) => 1 + t.size(),
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Term::Sum(args) => args.len() - 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Re-establishes canonical form for a term assembled by hand.
    pub fn canonical(&self) -> Term {
        match self {
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::H(t) => Term::h(t.canonical()),
            Term::App(f, args) => Term::app(f.clone(), args.iter().map(Term::canonical).collect()),
            Term::Sum(args) => Term::sum(args.iter().map(Term::canonical)),
        }
    }

    pub fn is_canonical(&self) -> bool {
        match self {
            Term::Var(_) | Term::Const(_) => true,
            Term::H(t) => t.is_canonical(),
            Term::App(_, args) => !args.is_empty() && args.iter().all(Term::is_canonical),
            Term::Sum(args) => {
                args.len() >= 2
                    && args
                        .iter()
                        .all(|a| !matches!(a, Term::Sum(_)) && a.is_canonical())
                    && args.windows(2).all(|w| w[0] <= w[1])
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::H(t) => write!(f, "{H_SYMBOL}({t})"),
            Term::App(g, args) => {
                write!(f, "{g}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::Sum(args) => {
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{a}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An equation `lhs =? rhs` of the input problem.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Equation {
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Equation { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.lhs.vars();
        self.rhs.collect_vars(&mut out);
        out
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =? {}", self.lhs, self.rhs)
    }
}

impl fmt::Debug for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All variables of a list of equations.
pub fn equations_vars(eqs: &[Equation]) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    for eq in eqs {
        eq.lhs.collect_vars(&mut out);
        eq.rhs.collect_vars(&mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("symbol `{name}` used with arity {found}, expected {expected}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("free symbol `{0}` is not declared")]
    UnknownSymbol(String),
    #[error("symbol `{0}` is reserved")]
    Reserved(String),
    #[error("a sum needs at least two summands")]
    ShortSum,
    #[error("variable {0} is already bound")]
    AlreadyBound(Var),
}

/// Arity table for free symbols. Constants are free symbols of arity zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    free: BTreeMap<Name, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `name/arity`, rejecting a second arity for the same name.
    pub fn declare(&mut self, name: &str, arity: usize) -> Result<(), TermError> {
        if name == H_SYMBOL {
            return Err(TermError::Reserved(name.to_string()));
        }
        match self.free.get(name) {
            Some(&expected) if expected != arity => Err(TermError::Arity {
                name: name.to_string(),
                expected,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.free.insert(Name::new(name), arity);
                Ok(())
            }
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.free.get(name).copied()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.free.iter().map(|(n, a)| (n, *a))
    }
}

/// An arbitrarily associated, unsorted term tree, as produced by a parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTerm {
    Var(Var),
    Const(String),
    /// Application of `h` or of a free symbol.
    Apply(String, Vec<RawTerm>),
    Plus(Vec<RawTerm>),
}

/// Converts a raw tree into its unique AC-canonical form.
pub fn canonicalize(raw: &RawTerm, sig: &Signature) -> Result<Term, TermError> {
    match raw {
        RawTerm::Var(v) => Ok(Term::Var(v.clone())),
        RawTerm::Const(c) => match sig.arity(c) {
            Some(0) | None => Ok(Term::constant(c)),
            Some(n) => Err(TermError::Arity {
                name: c.clone(),
                expected: n,
                found: 0,
            }),
        },
        RawTerm::Apply(f, args) if f == H_SYMBOL => {
            if args.len() != 1 {
                return Err(TermError::Arity {
                    name: f.clone(),
                    expected: 1,
                    found: args.len(),
                });
            }
            Ok(Term::h(canonicalize(&args[0], sig)?))
        }
        RawTerm::Apply(f, args) => {
            let expected = sig
                .arity(f)
                .ok_or_else(|| TermError::UnknownSymbol(f.clone()))?;
            if expected != args.len() || args.is_empty() {
                return Err(TermError::Arity {
                    name: f.clone(),
                    expected,
                    found: args.len(),
                });
            }
            let args = args
                .iter()
                .map(|a| canonicalize(a, sig))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::App(Name::new(f), args))
        }
        RawTerm::Plus(args) => {
            if args.len() < 2 {
                return Err(TermError::ShortSum);
            }
            let args = args
                .iter()
                .map(|a| canonicalize(a, sig))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::sum(args))
        }
    }
}

/// Equality modulo associativity and commutativity of `+`.
pub fn ac_equal(s: &Term, t: &Term) -> bool {
    s.canonical() == t.canonical()
}

/// Normal form under `h(x + y) -> h(x) + h(y)`: no `h` sits directly above
/// a sum.
pub fn normalize_r1(t: &Term) -> Term {
    match t {
        Term::Var(_) | Term::Const(_) => t.clone(),
        Term::H(inner) => push_h(normalize_r1(inner)),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(normalize_r1).collect()),
        Term::Sum(args) => Term::sum(args.iter().map(normalize_r1)),
    }
}

// `t` is already R1-normal, so its summands are not sums.
fn push_h(t: Term) -> Term {
    match t {
        Term::Sum(args) => Term::sum(args.into_iter().map(Term::h)),
        other => Term::h(other),
    }
}

/// Equality modulo the full ACh theory.
pub fn ach_equal(s: &Term, t: &Term) -> bool {
    normalize_r1(s) == normalize_r1(t)
}

/// Maximum nesting of `h` along any root-to-leaf path.
pub fn h_height(t: &Term) -> u32 {
    match t {
        Term::Var(_) | Term::Const(_) => 0,
        Term::H(inner) => 1 + h_height(inner),
        Term::App(_, args) | Term::Sum(args) => args.iter().map(h_height).max().unwrap_or(0),
    }
}

/// Number of `h` symbols directly stacked on top of `t`.
pub fn leading_h(t: &Term) -> u32 {
    match t {
        Term::H(inner) => 1 + leading_h(inner),
        _ => 0,
    }
}

/// Removes `k` leading `h` symbols. Panics if `t` has fewer.
pub fn strip_h(t: &Term, k: u32) -> &Term {
    let mut cur = t;
    for _ in 0..k {
        match cur {
            Term::H(inner) => cur = inner,
            _ => panic!("strip_h: {t} has fewer than {k} leading h"),
        }
    }
    cur
}

pub fn wrap_h(mut t: Term, k: u32) -> Term {
    for _ in 0..k {
        t = Term::h(t);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::user_var(n)
    }
    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    #[test]
    fn sums_flatten_and_sort() {
        let t = Term::plus(Term::plus(c("b"), c("a")), c("c"));
        assert_eq!(t, Term::Sum(vec![c("a"), c("b"), c("c")]));
        assert_eq!(Term::plus(c("b"), c("a")), Term::Sum(vec![c("a"), c("b")]));
        assert!(t.is_canonical());
    }

    #[test]
    fn canonicalize_checks_arity() {
        let mut sig = Signature::new();
        sig.declare("f", 2).unwrap();
        let bad = RawTerm::Apply("f".into(), vec![RawTerm::Const("a".into())]);
        assert!(matches!(
            canonicalize(&bad, &sig),
            Err(TermError::Arity { .. })
        ));
        let bad_h = RawTerm::Apply("h".into(), vec![]);
        assert!(canonicalize(&bad_h, &sig).is_err());
        let short = RawTerm::Plus(vec![RawTerm::Const("a".into())]);
        assert_eq!(canonicalize(&short, &sig), Err(TermError::ShortSum));
        assert!(sig.declare("f", 3).is_err());
        assert!(sig.declare("h", 1).is_err());
    }

    #[test]
    fn raw_plus_is_reassociated() {
        let sig = Signature::new();
        let a = RawTerm::Const("a".into());
        let b = RawTerm::Const("b".into());
        let cc = RawTerm::Const("c".into());
        let left = RawTerm::Plus(vec![RawTerm::Plus(vec![a.clone(), b.clone()]), cc.clone()]);
        let right = RawTerm::Plus(vec![cc, RawTerm::Plus(vec![b, a])]);
        assert_eq!(
            canonicalize(&left, &sig).unwrap(),
            canonicalize(&right, &sig).unwrap()
        );
    }

    #[test]
    fn ac_equality() {
        assert!(ac_equal(
            &Term::plus(v("x"), v("y")),
            &Term::plus(v("y"), v("x"))
        ));
        let xxy = Term::sum([v("x"), v("x"), v("y")]);
        assert!(!ac_equal(&xxy, &Term::plus(v("x"), v("y"))));
        let hh = Term::plus(Term::h(v("x")), Term::h(v("y")));
        assert!(!ac_equal(&hh, &Term::h(Term::plus(v("x"), v("y")))));
    }

    #[test]
    fn r1_normalization() {
        let t = Term::h(Term::plus(v("x"), v("y")));
        assert_eq!(
            normalize_r1(&t),
            Term::plus(Term::h(v("x")), Term::h(v("y")))
        );
        let hha = Term::h(Term::h(c("a")));
        assert_eq!(normalize_r1(&hha), hha);
        let t3 = Term::h(Term::sum([c("a"), c("b"), c("c")]));
        assert_eq!(
            normalize_r1(&t3),
            Term::sum([Term::h(c("a")), Term::h(c("b")), Term::h(c("c"))])
        );
    }

    #[test]
    fn ach_equality() {
        let l = Term::h(Term::plus(v("x"), v("y")));
        let r = Term::plus(Term::h(v("x")), Term::h(v("y")));
        assert!(ach_equal(&l, &r));
        let fa = Term::app(Name::new("f"), vec![c("a")]);
        let ga = Term::app(Name::new("g"), vec![c("a")]);
        assert!(!ach_equal(&fa, &ga));
        let l = Term::h(Term::h(Term::plus(c("a"), c("b"))));
        let r = Term::plus(Term::h(Term::h(c("a"))), Term::h(Term::h(c("b"))));
        assert!(ach_equal(&l, &r));
    }

    #[test]
    fn heights() {
        assert_eq!(h_height(&Term::h(Term::h(v("x")))), 2);
        assert_eq!(h_height(&v("x")), 0);
        assert_eq!(h_height(&c("a")), 0);
        let t = Term::plus(Term::h(c("a")), Term::h(Term::h(c("b"))));
        assert_eq!(h_height(&t), 2);
    }

    #[test]
    fn var_parse_round_trip() {
        assert_eq!(Var::parse("_v12"), Var::Fresh(12));
        assert_eq!(Var::parse("x"), Var::user("x"));
        assert_eq!(Var::Fresh(3).to_string(), "_v3");
    }

    #[test]
    fn display_sums() {
        let t = Term::plus(Term::h(Term::plus(v("x"), v("y"))), c("a"));
        assert_eq!(t.to_string(), "a + h(x + y)");
    }
}
