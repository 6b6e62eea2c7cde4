//! Top-down operational semantics.
//!
//! A query runs as a transition system over states carrying a goal list,
//! a substitution and truth slots. Selecting a fuzzy atom tries, in
//! order: matching fuzzy facts (rule 1), fuzzy clauses whose body replaces
//! the atom and aggregates on completion (rule 2), and, only when no fact
//! or clause head unifies at all, the predicate default (rule 3). Crisp
//! atoms run by ordinary SLD resolution; inside fuzzy bodies a crisp
//! predicate `p` is reached through its fuzzified form `f_p`, which
//! behaves as the set of facts `f_p(args) :~ 1` for every provable
//! `p(args)` and closes the world with default 0 elsewhere.

use std::fmt;

use thiserror::Error;

use crate::syntax::Term;
use crate::truth::BorelSet;

mod machine;
pub mod subst;

pub use machine::{eval_piecewise, solve_crisp, Solutions};
pub use subst::{mgu, Subst};

/// Search order over the transition system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    DepthFirst,
    BreadthFirst,
}

/// Per-call solver knobs. `trace` receives one line per rule transition.
#[derive(Default)]
pub struct SolveOptions<'a> {
    pub strategy: Strategy,
    pub depth_limit: Option<usize>,
    pub trace: Option<Box<dyn FnMut(String) + 'a>>,
}

/// Transitions allowed along one derivation before it is reported as
/// divergent.
pub const DEFAULT_DEPTH_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown predicate {0}")]
    Existence(String),
    #[error("depth limit of {limit} transitions exceeded while solving `{goal}`")]
    DepthLimit { goal: String, limit: usize },
    #[error("goal `{0}` is not a predicate call")]
    BadGoal(String),
    #[error("the final argument of `{atom}` receives the truth value and must be a fresh variable")]
    TruthSlot { atom: String },
    #[error("truth variable {0} is bound by more than one goal")]
    TruthVarReuse(String),
    #[error("`{var}` in a truth bound is not a truth variable of the query")]
    BoundTarget { var: String },
    #[error("piecewise predicate {pred} needs a numeric argument, found `{arg}`")]
    PiecewiseType { pred: String, arg: String },
    #[error("arithmetic on insufficiently instantiated expression `{0}`")]
    Instantiation(String),
    #[error("`{0}` is not evaluable as arithmetic")]
    ArithType(String),
    #[error("division by zero in `{0}`")]
    ZeroDivisor(String),
}

/// One derivation's result: query variable bindings in source order,
/// truth variables carrying the derived truth sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub terms: Vec<(String, Term)>,
    pub truths: Vec<(String, BorelSet)>,
}

impl Answer {
    /// Key identifying the (possibly non-ground) term bindings, used to
    /// group derivations of the same instance.
    pub fn group_key(&self) -> String {
        let mut key = String::new();
        for (name, term) in &self.terms {
            key.push_str(name);
            key.push('=');
            key.push_str(&render_term(term));
            key.push(';');
        }
        key
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() && self.truths.is_empty() {
            return write!(f, "true");
        }
        let mut first = true;
        for (name, term) in &self.terms {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{name} = {}", render_term(term))?;
        }
        for (name, set) in &self.truths {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{name} = {set}")?;
        }
        Ok(())
    }
}

/// Render a term for answers and traces: unbound variables (which carry
/// machine-generated names) print as `_`.
pub fn render_term(term: &Term) -> String {
    fn anonymize(term: &Term) -> Term {
        match term {
            Term::Var(_) => Term::Const("_".to_string()),
            Term::Compound(name, args) => {
                Term::Compound(name.clone(), args.iter().map(anonymize).collect())
            }
            other => other.clone(),
        }
    }
    anonymize(term).to_string()
}

/// Enumerate every derivation of `query`, restricted and filtered by the
/// query's truth bounds, then group answers that bind the query variables
/// identically and union their truth sets.
pub fn success_set(
    program: &crate::syntax::Program,
    query: &crate::syntax::Query,
    options: SolveOptions<'_>,
) -> Result<Vec<Answer>, EngineError> {
    let solutions = machine::solve(program, query, options)?;
    let mut groups: Vec<Answer> = Vec::new();
    for answer in solutions {
        let answer = answer?;
        let key = answer.group_key();
        match groups.iter_mut().find(|g| g.group_key() == key) {
            Some(group) => {
                for ((_, acc), (_, new)) in group.truths.iter_mut().zip(&answer.truths) {
                    *acc = acc.union(new);
                }
            }
            None => groups.push(answer),
        }
    }
    Ok(groups)
}

/// Enumerate derivations lazily; see [`success_set`] for the grouped form.
pub fn solve<'p>(
    program: &'p crate::syntax::Program,
    query: &crate::syntax::Query,
    options: SolveOptions<'p>,
) -> Result<Solutions<'p>, EngineError> {
    machine::solve(program, query, options)
}
