use thiserror::Error;

use crate::rc::{
    apply_update, check_acyclic, eval, violated, Assignment, Formula, Mode, Name, RcError,
    UpdateOp, Value,
};

use super::action::{Action, Label, TriggerDef, TriggerEvent, TriggerStmt};
use super::context::{ActionEffect, Effect, PendingTx, TriggerEffect};
use super::revoke::revoke_cascade;
use super::state::{admin, Run, SystemState};

/// An access-control decision with a human-readable reason for traces.
#[derive(Debug, Clone)]
pub struct Decision {
    pub permit: bool,
    pub reason: String,
}

impl Decision {
    pub fn permit(reason: impl Into<String>) -> Self {
        Decision {
            permit: true,
            reason: reason.into(),
        }
    }

    pub fn deny(reason: impl Into<String>) -> Self {
        Decision {
            permit: false,
            reason: reason.into(),
        }
    }
}

/// A policy decision point: a total function from states and actions to
/// permit/deny.
pub trait Pdp {
    fn name(&self) -> &'static str;
    fn decide(&self, state: &SystemState, action: &Action) -> Decision;
}

/// Permits everything; the baseline under which the attacks succeed.
pub struct AllowAll;

impl Pdp for AllowAll {
    fn name(&self) -> &'static str {
        "allow-all"
    }

    fn decide(&self, _state: &SystemState, _action: &Action) -> Decision {
        Decision::permit("allow-all")
    }
}

/// The transition rule that fired a step, for traces and determinism
/// checks.
pub type RuleName = &'static str;

#[derive(Debug, Clone, Error)]
pub enum StepError {
    #[error("a trigger transaction is pending; user actions are not applicable")]
    PendingTransaction,
    #[error("no trigger is scheduled")]
    NoPendingTrigger,
    #[error("label does not match the scheduled trigger")]
    WrongTrigger,
    #[error("unknown user {0}")]
    UnknownUser(Name),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error(transparent)]
    Rc(#[from] RcError),
}

/// Whether no trigger's update action can fire another trigger in the set.
pub fn safe(triggers: &[TriggerDef]) -> bool {
    triggers.iter().all(|watcher| {
        triggers.iter().all(|t| match (&watcher.event, &t.stmt) {
            (TriggerEvent::Insert, TriggerStmt::Insert { table, .. }) => table != &watcher.table,
            (TriggerEvent::Delete, TriggerStmt::Delete { table, .. }) => table != &watcher.table,
            _ => true,
        })
    })
}

/// The triggers watching `(event, table)` in execution order.
pub fn scheduled(triggers: &[TriggerDef], event: TriggerEvent, table: &Name) -> Vec<TriggerDef> {
    let mut out: Vec<TriggerDef> = triggers
        .iter()
        .filter(|t| t.event == event && &t.table == table)
        .cloned()
        .collect();
    out.sort_by_key(|t| t.seq);
    out
}

/// Instantiates a trigger's statement template into the concrete action
/// executed on behalf of `user` for the firing tuple.
pub fn get_action(stmt: &TriggerStmt, user: &Name, fired: &[Value]) -> Action {
    match stmt {
        TriggerStmt::Insert { table, tuple } => Action::Insert {
            user: user.clone(),
            table: table.clone(),
            tuple: tuple.iter().map(|t| t.instantiate(fired)).collect(),
        },
        TriggerStmt::Delete { table, tuple } => Action::Delete {
            user: user.clone(),
            table: table.clone(),
            tuple: tuple.iter().map(|t| t.instantiate(fired)).collect(),
        },
        TriggerStmt::Grant {
            op,
            grantee,
            privilege,
        } => Action::Grant {
            op: *op,
            grantee: grantee.clone(),
            privilege: privilege.clone(),
            grantor: user.clone(),
        },
        TriggerStmt::Revoke { grantee, privilege } => Action::Revoke {
            grantee: grantee.clone(),
            privilege: privilege.clone(),
            revoker: user.clone(),
        },
    }
}

/// The user under whose privileges a trigger runs.
pub fn actual_user(t: &TriggerDef, invoker: &Name) -> Name {
    match t.mode {
        Mode::Activator => invoker.clone(),
        Mode::Owner => t.owner.clone(),
    }
}

fn act_effect(action: &Action, decision: bool, result: bool, violations: Vec<Name>) -> Effect {
    Effect::Act(ActionEffect {
        action: action.clone(),
        decision,
        result,
        violations,
    })
}

/// Checks that every predicate of a formula is a table or view of the
/// state with the right arity.
fn check_defined(state: &SystemState, phi: &Formula) -> Result<(), StepError> {
    fn walk(state: &SystemState, phi: &Formula) -> Result<(), RcError> {
        match phi {
            Formula::Pred(name, args) => match state.object_arity(name) {
                Some(a) if a == args.len() => Ok(()),
                Some(a) => Err(RcError::ArityMismatch(name.clone(), a, args.len())),
                None => Err(RcError::UnknownPredicate(name.clone())),
            },
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => walk(state, f),
            Formula::And(a, b) | Formula::Or(a, b) => {
                walk(state, a)?;
                walk(state, b)
            }
            _ => Ok(()),
        }
    }
    walk(state, phi).map_err(StepError::Rc)
}

fn check_trigger_stmt(state: &SystemState, stmt: &TriggerStmt) -> Result<(), StepError> {
    match stmt {
        TriggerStmt::Insert { table, tuple } | TriggerStmt::Delete { table, tuple } => {
            match state.config.schema.arity(table) {
                Some(a) if a == tuple.len() => Ok(()),
                Some(a) => Err(StepError::Rc(RcError::ArityMismatch(
                    table.clone(),
                    a,
                    tuple.len(),
                ))),
                None => Err(StepError::Rc(RcError::UnknownPredicate(table.clone()))),
            }
        }
        TriggerStmt::Grant {
            grantee, privilege, ..
        }
        | TriggerStmt::Revoke {
            grantee, privilege, ..
        } => {
            if !state.users.contains(grantee) {
                return Err(StepError::UnknownUser(grantee.clone()));
            }
            check_privilege(state, privilege)
        }
    }
}

fn check_privilege(
    state: &SystemState,
    privilege: &super::action::Privilege,
) -> Result<(), StepError> {
    use super::action::Privilege;
    match privilege {
        Privilege::Select(o) => {
            if state.object_arity(o).is_none() {
                return Err(StepError::Rc(RcError::UnknownPredicate(o.clone())));
            }
            Ok(())
        }
        Privilege::Insert(t) | Privilege::Delete(t) | Privilege::CreateTrigger(t) => {
            if !state.config.schema.has_table(t) {
                return Err(StepError::Rc(RcError::UnknownPredicate(t.clone())));
            }
            Ok(())
        }
        Privilege::CreateView => Ok(()),
    }
}

/// One transition of the labelled transition system. Exactly one rule
/// applies to an applicable label; inapplicable labels (a user action
/// during a pending transaction, a trigger label when none is scheduled,
/// or a structurally invalid label) are harness errors, distinct from the
/// in-model deny and exception outcomes.
pub fn step(
    state: &SystemState,
    label: &Label,
    pdp: &dyn Pdp,
) -> Result<(RuleName, SystemState), StepError> {
    match label {
        Label::Act(action) => {
            if !state.ctx.pending.is_empty() {
                return Err(StepError::PendingTransaction);
            }
            step_action(state, action, pdp)
        }
        Label::Trig(t) => {
            let Some(head) = state.trigger() else {
                return Err(StepError::NoPendingTrigger);
            };
            if head.id != t.id {
                return Err(StepError::WrongTrigger);
            }
            let head = head.clone();
            step_trigger(state, &head, pdp)
        }
    }
}

fn step_action(
    state: &SystemState,
    action: &Action,
    pdp: &dyn Pdp,
) -> Result<(RuleName, SystemState), StepError> {
    let issuer = action.issuer().clone();
    if !state.users.contains(&issuer) {
        return Err(StepError::UnknownUser(issuer));
    }
    match action {
        Action::AddUser { user, .. } => {
            if user.as_str() == super::state::ADMIN {
                return Err(StepError::InvalidLabel("cannot re-add admin".into()));
            }
            let permit = pdp.decide(state, action).permit;
            let mut next = state.clone();
            if permit {
                next.users.insert(user.clone());
            }
            next.ctx = state.ctx.push(
                act_effect(action, permit, permit, vec![]),
                PendingTx::empty(),
            );
            Ok(if permit {
                ("add-user-success", next)
            } else {
                ("add-user-deny", next)
            })
        }
        Action::Select { query, .. } => {
            check_defined(state, query)?;
            let permit = pdp.decide(state, action).permit;
            let mut next = state.clone();
            if permit {
                let value = eval(&state.db, query, &Assignment::new(), &state.view_env())?;
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, value, vec![]), PendingTx::empty());
                Ok(("select-success", next))
            } else {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, false, false, vec![]), PendingTx::empty());
                Ok(("select-deny", next))
            }
        }
        Action::Insert { user, table, tuple } | Action::Delete { user, table, tuple } => {
            let is_insert = matches!(action, Action::Insert { .. });
            let arity = state
                .config
                .schema
                .arity(table)
                .ok_or_else(|| StepError::Rc(RcError::UnknownPredicate(table.clone())))?;
            if tuple.len() != arity {
                return Err(StepError::Rc(RcError::ArityMismatch(
                    table.clone(),
                    arity,
                    tuple.len(),
                )));
            }
            let permit = pdp.decide(state, action).permit;
            if !permit {
                let mut next = state.clone();
                next.ctx = state
                    .ctx
                    .push(act_effect(action, false, false, vec![]), PendingTx::empty());
                return Ok(if is_insert {
                    ("insert-deny", next)
                } else {
                    ("delete-deny", next)
                });
            }
            let op = if is_insert {
                UpdateOp::Insert
            } else {
                UpdateOp::Delete
            };
            let new_db = apply_update(&state.config.schema, &state.db, op, table, tuple)?;
            let broken = violated(&new_db, &state.config.constraints);
            if !broken.is_empty() {
                let ids = broken.iter().map(|c| c.id.clone()).collect();
                let mut next = state.clone();
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, false, ids), PendingTx::empty());
                return Ok(if is_insert {
                    ("insert-exception", next)
                } else {
                    ("delete-exception", next)
                });
            }
            let event = if is_insert {
                TriggerEvent::Insert
            } else {
                TriggerEvent::Delete
            };
            let queue = scheduled(&state.triggers, event, table);
            // An insert of a present tuple (or delete of an absent one)
            // leaves the state unchanged and fires no triggers.
            let vacuous = if is_insert {
                state.db.contains(table, tuple)
            } else {
                !state.db.contains(table, tuple)
            };
            let mut next = state.clone();
            next.db = new_db;
            if queue.is_empty() || vacuous {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, true, vec![]), PendingTx::empty());
                Ok(if is_insert {
                    ("insert-success", next)
                } else {
                    ("delete-success", next)
                })
            } else {
                let pending = PendingTx {
                    rollback: Some(state.partial()),
                    fired: Some(tuple.clone()),
                    invoker: Some(user.clone()),
                    queue,
                };
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, true, vec![]), pending);
                Ok(if is_insert {
                    ("insert-success-firing", next)
                } else {
                    ("delete-success-firing", next)
                })
            }
        }
        Action::Grant {
            grantee, privilege, ..
        } => {
            if !state.users.contains(grantee) {
                return Err(StepError::UnknownUser(grantee.clone()));
            }
            check_privilege(state, privilege)?;
            let permit = pdp.decide(state, action).permit;
            let mut next = state.clone();
            if permit {
                next.sec.insert(action.grant_of().expect("grant action"));
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, true, vec![]), PendingTx::empty());
                Ok(("grant-success", next))
            } else {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, false, false, vec![]), PendingTx::empty());
                Ok(("grant-deny", next))
            }
        }
        Action::Revoke {
            grantee,
            privilege,
            revoker,
        } => {
            if !state.users.contains(grantee) {
                return Err(StepError::UnknownUser(grantee.clone()));
            }
            check_privilege(state, privilege)?;
            let permit = pdp.decide(state, action).permit;
            let mut next = state.clone();
            if permit {
                next.sec = revoke_cascade(
                    &state.sec,
                    grantee,
                    privilege,
                    revoker,
                    &state.views,
                    &admin(),
                );
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, true, vec![]), PendingTx::empty());
                Ok(("revoke-success", next))
            } else {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, false, false, vec![]), PendingTx::empty());
                Ok(("revoke-deny", next))
            }
        }
        Action::CreateTrigger { issuer, trigger } => {
            if trigger.owner != *issuer {
                return Err(StepError::InvalidLabel(
                    "trigger owner must be its creator".into(),
                ));
            }
            if !state.config.schema.has_table(&trigger.table) {
                return Err(StepError::Rc(RcError::UnknownPredicate(
                    trigger.table.clone(),
                )));
            }
            check_defined(state, &trigger.condition)?;
            check_trigger_stmt(state, &trigger.stmt)?;
            let mut with_new: Vec<TriggerDef> = state.triggers.clone();
            let mut stored = trigger.clone();
            stored.seq = state.next_trigger_seq();
            with_new.push(stored.clone());
            if !safe(&with_new) {
                return Err(StepError::InvalidLabel(
                    "trigger set would not be safe".into(),
                ));
            }
            let permit = pdp.decide(state, action).permit;
            let mut next = state.clone();
            if !permit {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, false, false, vec![]), PendingTx::empty());
                return Ok(("create-deny", next));
            }
            if state.triggers.iter().any(|t| t.id == trigger.id) {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, false, vec![]), PendingTx::empty());
                return Ok(("create-trigger-duplicate", next));
            }
            next.triggers = with_new;
            next.ctx = state
                .ctx
                .push(act_effect(action, true, true, vec![]), PendingTx::empty());
            Ok(("create-trigger-success", next))
        }
        Action::CreateView { issuer, view } => {
            if view.owner != *issuer {
                return Err(StepError::InvalidLabel(
                    "view owner must be its creator".into(),
                ));
            }
            check_defined(state, &view.query.body)?;
            let mut with_new = state.views.clone();
            with_new.push(view.clone());
            check_acyclic(with_new.iter())?;
            let permit = pdp.decide(state, action).permit;
            let mut next = state.clone();
            if !permit {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, false, false, vec![]), PendingTx::empty());
                return Ok(("create-deny", next));
            }
            if state.views.iter().any(|v| v.id == view.id) {
                next.ctx = state
                    .ctx
                    .push(act_effect(action, true, false, vec![]), PendingTx::empty());
                return Ok(("create-view-duplicate", next));
            }
            next.views = with_new;
            next.ctx = state
                .ctx
                .push(act_effect(action, true, true, vec![]), PendingTx::empty());
            Ok(("create-view-success", next))
        }
    }
}

fn step_trigger(
    state: &SystemState,
    t: &TriggerDef,
    pdp: &dyn Pdp,
) -> Result<(RuleName, SystemState), StepError> {
    let invoker = state
        .invoker()
        .cloned()
        .ok_or(StepError::NoPendingTrigger)?;
    let fired = state.tpl().cloned().ok_or(StepError::NoPendingTrigger)?;
    let user = actual_user(t, &invoker);
    let cond_instance = t.condition_instance(&fired);
    let cond_action = Action::Select {
        user: user.clone(),
        query: cond_instance.clone(),
    };
    let rollback = state
        .ctx
        .pending
        .rollback
        .clone()
        .ok_or(StepError::NoPendingTrigger)?;
    let rest: Vec<TriggerDef> = state.ctx.pending.queue[1..].to_vec();

    // Condition authorization.
    if !pdp.decide(state, &cond_action).permit {
        let effect = Effect::Trig(TriggerEffect {
            trigger: t.clone(),
            condition: ActionEffect {
                action: cond_action,
                decision: false,
                result: false,
                violations: vec![],
            },
            statement: None,
        });
        let ctx = state.ctx.push(effect, PendingTx::empty());
        return Ok(("trigger-deny-condition", state.with_partial(rollback, ctx)));
    }
    let cond_value = eval(
        &state.db,
        &cond_instance,
        &Assignment::new(),
        &state.view_env(),
    )?;
    let cond_effect = ActionEffect {
        action: cond_action,
        decision: true,
        result: cond_value,
        violations: vec![],
    };
    if !cond_value {
        // Disabled: the transaction continues with the remaining triggers.
        let effect = Effect::Trig(TriggerEffect {
            trigger: t.clone(),
            condition: cond_effect,
            statement: None,
        });
        let pending = PendingTx {
            rollback: Some(rollback),
            fired: Some(fired),
            invoker: Some(invoker),
            queue: rest,
        };
        let mut next = state.clone();
        next.ctx = state.ctx.push(effect, pending);
        return Ok(("trigger-disabled", next));
    }

    // Action authorization, consulted in the intermediate state where the
    // condition's effect is already recorded.
    let concrete = get_action(&t.stmt, &user, &fired);
    let mut mid = state.clone();
    mid.ctx = state
        .ctx
        .push(Effect::Act(cond_effect.clone()), state.ctx.pending.clone());
    if !pdp.decide(&mid, &concrete).permit {
        let effect = Effect::Trig(TriggerEffect {
            trigger: t.clone(),
            condition: cond_effect,
            statement: Some(ActionEffect {
                action: concrete,
                decision: false,
                result: false,
                violations: vec![],
            }),
        });
        let ctx = state.ctx.push(effect, PendingTx::empty());
        return Ok(("trigger-deny-action", state.with_partial(rollback, ctx)));
    }

    match &concrete {
        Action::Insert { table, tuple, .. } | Action::Delete { table, tuple, .. } => {
            let op = if matches!(concrete, Action::Insert { .. }) {
                UpdateOp::Insert
            } else {
                UpdateOp::Delete
            };
            let new_db = apply_update(&state.config.schema, &state.db, op, table, tuple)?;
            let broken = violated(&new_db, &state.config.constraints);
            if !broken.is_empty() {
                let ids = broken.iter().map(|c| c.id.clone()).collect();
                let effect = Effect::Trig(TriggerEffect {
                    trigger: t.clone(),
                    condition: cond_effect,
                    statement: Some(ActionEffect {
                        action: concrete.clone(),
                        decision: true,
                        result: false,
                        violations: ids,
                    }),
                });
                let ctx = state.ctx.push(effect, PendingTx::empty());
                return Ok(("trigger-exception", state.with_partial(rollback, ctx)));
            }
            let effect = Effect::Trig(TriggerEffect {
                trigger: t.clone(),
                condition: cond_effect,
                statement: Some(ActionEffect {
                    action: concrete.clone(),
                    decision: true,
                    result: true,
                    violations: vec![],
                }),
            });
            let pending = PendingTx {
                rollback: Some(rollback),
                fired: Some(fired),
                invoker: Some(invoker),
                queue: rest,
            };
            let mut next = state.clone();
            next.db = new_db;
            next.ctx = state.ctx.push(effect, pending);
            Ok(("trigger-update-success", next))
        }
        Action::Grant {
            grantee, privilege, ..
        } => {
            check_privilege(state, privilege)?;
            if !state.users.contains(grantee) {
                return Err(StepError::UnknownUser(grantee.clone()));
            }
            let effect = Effect::Trig(TriggerEffect {
                trigger: t.clone(),
                condition: cond_effect,
                statement: Some(ActionEffect {
                    action: concrete.clone(),
                    decision: true,
                    result: true,
                    violations: vec![],
                }),
            });
            let pending = PendingTx {
                rollback: Some(rollback),
                fired: Some(fired),
                invoker: Some(invoker),
                queue: rest,
            };
            let mut next = state.clone();
            next.sec.insert(concrete.grant_of().expect("grant action"));
            next.ctx = state.ctx.push(effect, pending);
            Ok(("trigger-grant-success", next))
        }
        Action::Revoke {
            grantee,
            privilege,
            revoker,
        } => {
            check_privilege(state, privilege)?;
            let effect = Effect::Trig(TriggerEffect {
                trigger: t.clone(),
                condition: cond_effect,
                statement: Some(ActionEffect {
                    action: concrete.clone(),
                    decision: true,
                    result: true,
                    violations: vec![],
                }),
            });
            let pending = PendingTx {
                rollback: Some(rollback),
                fired: Some(fired),
                invoker: Some(invoker),
                queue: rest,
            };
            let mut next = state.clone();
            next.sec = revoke_cascade(
                &state.sec,
                grantee,
                privilege,
                revoker,
                &state.views,
                &admin(),
            );
            next.ctx = state.ctx.push(effect, pending);
            Ok(("trigger-revoke-success", next))
        }
        _ => Err(StepError::InvalidLabel(
            "trigger statements are updates, grants, or revokes".into(),
        )),
    }
}

/// Folds the labels into a run, automatically firing every scheduled
/// trigger to quiescence after each user action.
pub fn execute(
    initial: SystemState,
    labels: impl IntoIterator<Item = Action>,
    pdp: &dyn Pdp,
) -> Result<Run, StepError> {
    let mut run = Run::new(initial);
    for action in labels {
        let (_, next) = step(run.last(), &Label::Act(action.clone()), pdp)?;
        run.push(Label::Act(action), next);
        while let Some(t) = run.last().trigger().cloned() {
            let (_, next) = step(run.last(), &Label::Trig(t.clone()), pdp)?;
            run.push(Label::Trig(t), next);
        }
    }
    Ok(run)
}

/// All rules whose full guard sets hold for the pair, evaluated
/// independently (not as a decision cascade). Used by the rule-determinism
/// check: along a legal run exactly one rule must apply.
pub fn applicable_rules(state: &SystemState, label: &Label, pdp: &dyn Pdp) -> Vec<RuleName> {
    let mut out = Vec::new();
    match label {
        Label::Act(action) => {
            if !state.ctx.pending.is_empty() || !state.users.contains(action.issuer()) {
                return out;
            }
            let permit = pdp.decide(state, action).permit;
            match action {
                Action::AddUser { .. } => {
                    if permit {
                        out.push("add-user-success");
                    }
                    if !permit {
                        out.push("add-user-deny");
                    }
                }
                Action::Select { .. } => {
                    if permit {
                        out.push("select-success");
                    }
                    if !permit {
                        out.push("select-deny");
                    }
                }
                Action::Insert {
                    user: _,
                    table,
                    tuple,
                }
                | Action::Delete {
                    user: _,
                    table,
                    tuple,
                } => {
                    let is_insert = matches!(action, Action::Insert { .. });
                    let (op, event, suffix) = if is_insert {
                        (UpdateOp::Insert, TriggerEvent::Insert, "insert")
                    } else {
                        (UpdateOp::Delete, TriggerEvent::Delete, "delete")
                    };
                    if !permit {
                        out.push(if is_insert {
                            "insert-deny"
                        } else {
                            "delete-deny"
                        });
                    }
                    if permit {
                        let Ok(new_db) =
                            apply_update(&state.config.schema, &state.db, op, table, tuple)
                        else {
                            return out;
                        };
                        let ok = violated(&new_db, &state.config.constraints).is_empty();
                        let queue = scheduled(&state.triggers, event, table);
                        let vacuous = if is_insert {
                            state.db.contains(table, tuple)
                        } else {
                            !state.db.contains(table, tuple)
                        };
                        if !ok {
                            out.push(if is_insert {
                                "insert-exception"
                            } else {
                                "delete-exception"
                            });
                        }
                        if ok && (queue.is_empty() || vacuous) {
                            out.push(if is_insert {
                                "insert-success"
                            } else {
                                "delete-success"
                            });
                        }
                        if ok && !queue.is_empty() && !vacuous {
                            out.push(if is_insert {
                                "insert-success-firing"
                            } else {
                                "delete-success-firing"
                            });
                        }
                        let _ = suffix;
                    }
                }
                Action::Grant { .. } => {
                    if permit {
                        out.push("grant-success");
                    }
                    if !permit {
                        out.push("grant-deny");
                    }
                }
                Action::Revoke { .. } => {
                    if permit {
                        out.push("revoke-success");
                    }
                    if !permit {
                        out.push("revoke-deny");
                    }
                }
                Action::CreateTrigger { trigger, .. } => {
                    let dup = state.triggers.iter().any(|t| t.id == trigger.id);
                    if !permit {
                        out.push("create-deny");
                    }
                    if permit && dup {
                        out.push("create-trigger-duplicate");
                    }
                    if permit && !dup {
                        out.push("create-trigger-success");
                    }
                }
                Action::CreateView { view, .. } => {
                    let dup = state.views.iter().any(|v| v.id == view.id);
                    if !permit {
                        out.push("create-deny");
                    }
                    if permit && dup {
                        out.push("create-view-duplicate");
                    }
                    if permit && !dup {
                        out.push("create-view-success");
                    }
                }
            }
            out
        }
        Label::Trig(t) => {
            let Some(head) = state.trigger() else {
                return out;
            };
            if head.id != t.id {
                return out;
            }
            let (Some(invoker), Some(fired)) = (state.invoker(), state.tpl()) else {
                return out;
            };
            let user = actual_user(head, invoker);
            let cond_instance = head.condition_instance(fired);
            let cond_action = Action::Select {
                user: user.clone(),
                query: cond_instance.clone(),
            };
            let cond_permit = pdp.decide(state, &cond_action).permit;
            if !cond_permit {
                out.push("trigger-deny-condition");
                return out;
            }
            let Ok(cond_value) = eval(
                &state.db,
                &cond_instance,
                &Assignment::new(),
                &state.view_env(),
            ) else {
                return out;
            };
            if !cond_value {
                out.push("trigger-disabled");
                return out;
            }
            let concrete = get_action(&head.stmt, &user, fired);
            let mut mid = state.clone();
            mid.ctx = state.ctx.push(
                Effect::Act(ActionEffect {
                    action: cond_action,
                    decision: true,
                    result: true,
                    violations: vec![],
                }),
                state.ctx.pending.clone(),
            );
            let act_permit = pdp.decide(&mid, &concrete).permit;
            if !act_permit {
                out.push("trigger-deny-action");
                return out;
            }
            match &concrete {
                Action::Insert { table, tuple, .. } | Action::Delete { table, tuple, .. } => {
                    let op = if matches!(concrete, Action::Insert { .. }) {
                        UpdateOp::Insert
                    } else {
                        UpdateOp::Delete
                    };
                    let Ok(new_db) =
                        apply_update(&state.config.schema, &state.db, op, table, tuple)
                    else {
                        return out;
                    };
                    if violated(&new_db, &state.config.constraints).is_empty() {
                        out.push("trigger-update-success");
                    } else {
                        out.push("trigger-exception");
                    }
                }
                Action::Grant { .. } => out.push("trigger-grant-success"),
                Action::Revoke { .. } => out.push("trigger-revoke-success"),
                _ => {}
            }
            out
        }
    }
}

