//! Schemas, database states, safe-range relational-calculus formulas,
//! query and constraint evaluation, views, and tuple-level updates.

mod db;
mod eval;
mod formula;
mod normalize;
mod schema;
mod views;

pub use db::{apply_update, violated, DatabaseState, Tuple, UpdateOp};
pub use eval::{adom, eval, eval_over, eval_query, eval_query_over, Assignment, ViewEnv};
pub use formula::{Formula, Query, Term, Var};
pub use normalize::{is_allowed, normalize, push_negation};
pub use schema::{Constraint, ConstraintKind, Mode, Name, Schema, Value, View};
pub use views::{check_acyclic, eliminate_activator_views, inline_step, inline_views};

use thiserror::Error;

/// Errors raised by the relational-calculus layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RcError {
    #[error("arity mismatch for {0}: expected {1}, got {2}")]
    ArityMismatch(Name, usize, usize),
    #[error("unknown predicate {0}")]
    UnknownPredicate(Name),
    #[error("unbound free variable {0}")]
    UnboundVariable(Var),
    #[error("cyclic view definitions involving {0}")]
    CyclicViews(Name),
    #[error("formula is not allowed (unsafe range)")]
    NotAllowed,
    #[error("query head does not match free variables of the body")]
    HeadMismatch,
    #[error("value {0} is not in the declared domain")]
    ValueOutsideDomain(Value),
}
