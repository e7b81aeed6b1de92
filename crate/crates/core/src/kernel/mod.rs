//! The labelled transition system: system states with contexts, the step
//! relation for every command and trigger, revoke with cascade, trigger
//! scheduling, and rollback.

mod action;
mod context;
mod revoke;
mod state;
mod step;
#[cfg(test)]
mod tests;

pub use action::{
    trigger_var, Action, GrantOp, Label, Privilege, TplTerm, TriggerDef, TriggerEvent, TriggerStmt,
};
pub use context::{ActionEffect, Context, Effect, PendingTx, TriggerEffect};
pub use revoke::{chains, revoke_cascade, surviving_grants, Grant};
pub use state::{PartialState, Run, SystemConfig, SystemState, ADMIN};
pub use step::{
    actual_user, applicable_rules, execute, get_action, safe, scheduled,
    step, AllowAll, Decision, Pdp, RuleName, StepError,
};
