//! Problem families used by the benchmarks.

use achunify_core::{Equation, Term};

fn v(name: &str) -> Term {
    Term::user_var(name)
}

/// `h(y) =? x + y`, which has no solution at any bound. The solver has to
/// walk every depth up to the bound before giving up.
pub fn self_sum() -> Vec<Equation> {
    vec![Equation::new(Term::h(v("y")), Term::plus(v("x"), v("y")))]
}

/// `x1 + ... + xn =? y1 + ... + yn`.
pub fn two_sums(n: usize) -> Vec<Equation> {
    let side = |p: &str| Term::sum((1..=n).map(|i| v(&format!("{p}{i}"))));
    vec![Equation::new(side("x"), side("y"))]
}

/// A tower `h^n(x) =? y` together with `y =? z + w`.
pub fn h_tower(n: usize) -> Vec<Equation> {
    let mut t = v("x");
    for _ in 0..n {
        t = Term::h(t);
    }
    vec![
        Equation::new(t, v("y")),
        Equation::new(v("y"), Term::plus(v("z"), v("w"))),
    ]
}
