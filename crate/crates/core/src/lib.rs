//! Fuzzy Prolog with default knowledge.
//!
//! Programs mix crisp Prolog clauses with fuzzy facts and clauses whose truth
//! values are finite unions of closed subintervals of [0,1]. Truth propagates
//! through aggregation operators (min, max, prod, luka, mean by default), and
//! every fuzzy predicate carries a default truth value for atoms the program
//! cannot derive. Two evaluators are provided: a top-down transition-system
//! solver ([`engine`]) and a bottom-up fixpoint oracle ([`fixpoint`]); on
//! terminating programs they agree.

pub mod aggregate;
pub mod engine;
pub mod fixpoint;
pub mod syntax;
pub mod truth;
