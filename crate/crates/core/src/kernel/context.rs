use crate::rc::{Name, Value};

use super::action::{Action, TriggerDef};
use super::state::PartialState;

/// The effect of one action: the action itself, the access-control
/// decision, the result, and the integrity constraints it violated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionEffect {
    pub action: Action,
    pub decision: bool,
    pub result: bool,
    pub violations: Vec<Name>,
}

/// The effect of one trigger firing: the condition's effect and, when the
/// trigger was enabled and its action attempted, the action's effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerEffect {
    pub trigger: TriggerDef,
    pub condition: ActionEffect,
    pub statement: Option<ActionEffect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Act(ActionEffect),
    Trig(TriggerEffect),
}

/// The pending trigger transaction: the partial state to restore on
/// rollback, the firing tuple, the invoker, and the remaining scheduled
/// triggers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PendingTx {
    pub rollback: Option<PartialState>,
    pub fired: Option<Vec<Value>>,
    pub invoker: Option<Name>,
    pub queue: Vec<TriggerDef>,
}

impl PendingTx {
    pub fn empty() -> Self {
        PendingTx::default()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

/// The context of a system state: the history, the last effect, and the
/// pending trigger transaction. The empty context has all three empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Context {
    pub history: Vec<Effect>,
    pub last: Option<Effect>,
    pub pending: PendingTx,
}

impl Context {
    pub fn empty() -> Self {
        Context::default()
    }

    /// The new context after an effect: the previous last effect moves into
    /// the history.
    pub fn push(&self, effect: Effect, pending: PendingTx) -> Context {
        let mut history = self.history.clone();
        if let Some(prev) = &self.last {
            history.push(prev.clone());
        }
        Context {
            history,
            last: Some(effect),
            pending,
        }
    }

    /// Whether the last action caused a security exception.
    pub fn sec_ex(&self) -> bool {
        match &self.last {
            Some(Effect::Act(a)) => !a.decision,
            Some(Effect::Trig(t)) => {
                !t.condition.decision || t.statement.as_ref().map(|s| !s.decision).unwrap_or(false)
            }
            None => false,
        }
    }

    /// The integrity constraints violated by the last action.
    pub fn ex(&self) -> Vec<Name> {
        match &self.last {
            Some(Effect::Act(a)) => a.violations.clone(),
            Some(Effect::Trig(t)) => t
                .statement
                .as_ref()
                .map(|s| s.violations.clone())
                .unwrap_or_default(),
            None => Vec::new(),
        }
    }

    /// The last action's result, per the case analysis on effects.
    pub fn res(&self) -> bool {
        match &self.last {
            Some(Effect::Act(a)) => a.result,
            Some(Effect::Trig(t)) => match &t.statement {
                None => t.condition.decision,
                Some(s) => t.condition.decision && s.decision && s.result,
            },
            None => false,
        }
    }

    /// The access-control decision for the last trigger's action.
    pub fn ac_action(&self) -> bool {
        match &self.last {
            Some(Effect::Trig(TriggerEffect {
                statement: Some(s), ..
            })) => s.decision,
            _ => false,
        }
    }

    /// The access-control decision for the last trigger's condition.
    pub fn ac_condition(&self) -> bool {
        match &self.last {
            Some(Effect::Trig(t)) => t.condition.decision,
            _ => false,
        }
    }

    pub fn invoker(&self) -> Option<&Name> {
        self.pending.invoker.as_ref()
    }

    pub fn tpl(&self) -> Option<&Vec<Value>> {
        self.pending.fired.as_ref()
    }

    pub fn triggers(&self) -> &[TriggerDef] {
        &self.pending.queue
    }

    /// The first trigger in the scheduled sequence, if any.
    pub fn trigger(&self) -> Option<&TriggerDef> {
        self.pending.queue.first()
    }
}
