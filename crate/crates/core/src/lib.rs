//! Bounded unification modulo an associative-commutative `+` with a
//! homomorphism `h` distributing over it.

pub mod ac;
pub mod engine;
pub mod matching;
pub mod oracle;
pub mod problem;
pub mod subst;
pub mod term;

pub use ac::{
    dioph_minimal_basis, get_eqs, unify_multiset_eq, unify_multiset_eq_within, unify_system,
    unify_system_within, AcBudget, AcExhausted, DiophSolution, MultisetEquation,
};
pub use engine::{
    measure, solve, step, step_within, BottomReason, BranchOrder, Limit, Measure, Outcome, Rule,
    Solution, SolveOptions, SolveStats, StepLimits, StepResult, TraceStep, Triple,
};
pub use matching::{minimize, more_general};
pub use oracle::{
    check_completeness, enumerate_ground_unifiers, is_instance, verify_unifier, CompletenessReport,
    OracleError, UniverseSpec,
};
pub use problem::{
    build_graph, flatten, max_val, propagate_depths, propagate_depths_with, BoundExceeded,
    DepGraph, DepthMap, EdgeLabel, FlatEq, FreshVarSource, Head,
};
pub use subst::Substitution;
pub use term::{
    ac_equal, ach_equal, canonicalize, equations_vars, h_height, normalize_r1, Equation, Name,
    RawTerm, Signature, Term, TermError, Var,
};
