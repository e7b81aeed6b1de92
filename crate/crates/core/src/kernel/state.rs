use std::collections::BTreeSet;
use std::sync::Arc;

use crate::rc::{check_acyclic, Constraint, DatabaseState, Name, Schema, View, ViewEnv};

use super::action::{Label, TriggerDef};
use super::context::Context;
use super::revoke::Grant;

/// The distinguished administrator account.
pub const ADMIN: &str = "admin";

pub fn admin() -> Name {
    ADMIN.into()
}

/// A system configuration: the schema and the integrity constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemConfig {
    pub schema: Schema,
    pub constraints: Vec<Constraint>,
}

impl SystemConfig {
    pub fn new(schema: Schema, constraints: Vec<Constraint>) -> Result<Self, crate::rc::RcError> {
        for c in &constraints {
            c.validate(&schema)?;
        }
        Ok(SystemConfig {
            schema,
            constraints,
        })
    }

    pub fn constraint(&self, id: &Name) -> Option<&Constraint> {
        self.constraints.iter().find(|c| &c.id == id)
    }
}

/// A state without its context: what rollback restores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialState {
    pub db: DatabaseState,
    pub users: BTreeSet<Name>,
    pub sec: BTreeSet<Grant>,
    pub triggers: Vec<TriggerDef>,
    pub views: Vec<View>,
}

/// A full system state `⟨db, U, sec, T, V, c⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemState {
    pub config: Arc<SystemConfig>,
    pub db: DatabaseState,
    pub users: BTreeSet<Name>,
    pub sec: BTreeSet<Grant>,
    pub triggers: Vec<TriggerDef>,
    pub views: Vec<View>,
    pub ctx: Context,
}

impl SystemState {
    /// An initial state: empty context; the caller provides a database
    /// satisfying the constraints, admin-issued grants, and admin-owned
    /// triggers and views.
    pub fn initial(
        config: Arc<SystemConfig>,
        db: DatabaseState,
        users: BTreeSet<Name>,
        sec: BTreeSet<Grant>,
        triggers: Vec<TriggerDef>,
        views: Vec<View>,
    ) -> Result<Self, String> {
        let adm = admin();
        if !users.contains(&adm) {
            return Err("initial state must contain the admin user".to_string());
        }
        if !crate::rc::violated(&db, &config.constraints).is_empty() {
            return Err("initial database violates the integrity constraints".to_string());
        }
        for g in &sec {
            if g.grantor != adm {
                return Err(format!("initial grant {g} not issued by admin"));
            }
            if !users.contains(&g.grantee) {
                return Err(format!("initial grant {g} to unknown user"));
            }
        }
        for t in &triggers {
            if t.owner != adm {
                return Err(format!("initial trigger {} not owned by admin", t.id));
            }
        }
        for v in &views {
            if v.owner != adm {
                return Err(format!("initial view {} not owned by admin", v.id));
            }
        }
        check_acyclic(views.iter()).map_err(|e| e.to_string())?;
        if !super::step::safe(&triggers) {
            return Err("initial trigger set is not safe".to_string());
        }
        Ok(SystemState {
            config,
            db,
            users,
            sec,
            triggers,
            views,
            ctx: Context::empty(),
        })
    }

    pub fn partial(&self) -> PartialState {
        PartialState {
            db: self.db.clone(),
            users: self.users.clone(),
            sec: self.sec.clone(),
            triggers: self.triggers.clone(),
            views: self.views.clone(),
        }
    }

    /// Restores a partial state, keeping the configuration.
    pub fn with_partial(&self, p: PartialState, ctx: Context) -> SystemState {
        SystemState {
            config: self.config.clone(),
            db: p.db,
            users: p.users,
            sec: p.sec,
            triggers: p.triggers,
            views: p.views,
            ctx,
        }
    }

    pub fn view(&self, id: &Name) -> Option<&View> {
        self.views.iter().find(|v| &v.id == id)
    }

    pub fn view_env(&self) -> ViewEnv {
        ViewEnv::of(self.views.iter())
    }

    /// The arity of a table or view.
    pub fn object_arity(&self, name: &Name) -> Option<usize> {
        self.config
            .schema
            .arity(name)
            .or_else(|| self.view(name).map(|v| v.arity()))
    }

    pub fn sec_ex(&self) -> bool {
        self.ctx.sec_ex()
    }

    pub fn ex(&self) -> Vec<Name> {
        self.ctx.ex()
    }

    pub fn res(&self) -> bool {
        self.ctx.res()
    }

    pub fn invoker(&self) -> Option<&Name> {
        self.ctx.invoker()
    }

    pub fn tpl(&self) -> Option<&Vec<crate::rc::Value>> {
        self.ctx.tpl()
    }

    pub fn trigger(&self) -> Option<&TriggerDef> {
        self.ctx.trigger()
    }

    /// The next unused trigger creation sequence number.
    pub fn next_trigger_seq(&self) -> u64 {
        self.triggers.iter().map(|t| t.seq + 1).max().unwrap_or(0)
    }
}

/// A run: an alternating sequence of states and labels, starting at an
/// initial state.
#[derive(Debug, Clone)]
pub struct Run {
    pub states: Vec<SystemState>,
    pub labels: Vec<Label>,
}

impl Run {
    pub fn new(initial: SystemState) -> Self {
        Run {
            states: vec![initial],
            labels: Vec::new(),
        }
    }

    /// The number of states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> &SystemState {
        self.states.last().expect("runs are non-empty")
    }

    /// The state at 1-based position `i`.
    pub fn state(&self, i: usize) -> &SystemState {
        &self.states[i - 1]
    }

    /// The label between positions `i` and `i+1` (1-based).
    pub fn label(&self, i: usize) -> &Label {
        &self.labels[i - 1]
    }

    pub fn push(&mut self, label: Label, state: SystemState) {
        self.labels.push(label);
        self.states.push(state);
    }
}
