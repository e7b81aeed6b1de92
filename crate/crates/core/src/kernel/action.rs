use std::fmt;

use crate::rc::{Formula, Name, Term, Value, Var};

use super::revoke::Grant;

/// The reserved variable bound, at run time, to the `i`-th value (0-based)
/// of the tuple that fired a trigger. The `.` prefix keeps these names out
/// of the parseable variable space.
pub fn trigger_var(i: usize) -> Var {
    Var::new(&format!(".t{}", i + 1))
}

/// A grantable privilege.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Privilege {
    /// `SELECT` on a table or view.
    Select(Name),
    Insert(Name),
    Delete(Name),
    CreateTrigger(Name),
    CreateView,
}

impl Privilege {
    pub fn object(&self) -> Option<&Name> {
        match self {
            Privilege::Select(o)
            | Privilege::Insert(o)
            | Privilege::Delete(o)
            | Privilege::CreateTrigger(o) => Some(o),
            Privilege::CreateView => None,
        }
    }
}

impl fmt::Display for Privilege {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Privilege::Select(o) => write!(f, "SELECT ON {o}"),
            Privilege::Insert(o) => write!(f, "INSERT ON {o}"),
            Privilege::Delete(o) => write!(f, "DELETE ON {o}"),
            Privilege::CreateTrigger(o) => write!(f, "CREATE TRIGGER ON {o}"),
            Privilege::CreateView => f.write_str("CREATE VIEW"),
        }
    }
}

/// Grant without (`⊕`) or with (`⊕*`) the grant option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GrantOp {
    Plain,
    WithGrantOption,
}

impl fmt::Display for GrantOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrantOp::Plain => f.write_str("GRANT"),
            GrantOp::WithGrantOption => f.write_str("GRANT*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerEvent {
    Insert,
    Delete,
}

impl fmt::Display for TriggerEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TriggerEvent::Insert => f.write_str("INSERT"),
            TriggerEvent::Delete => f.write_str("DELETE"),
        }
    }
}

/// A template argument of a trigger action: a constant or a positional
/// reference to the firing tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TplTerm {
    Const(Value),
    Fired(usize),
}

impl TplTerm {
    pub fn instantiate(&self, fired: &[Value]) -> Value {
        match self {
            TplTerm::Const(c) => c.clone(),
            TplTerm::Fired(i) => fired[*i].clone(),
        }
    }
}

impl fmt::Display for TplTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TplTerm::Const(c) => write!(f, "{c}"),
            TplTerm::Fired(i) => write!(f, "NEW.{}", i + 1),
        }
    }
}

/// The statement in a trigger's body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerStmt {
    Insert {
        table: Name,
        tuple: Vec<TplTerm>,
    },
    Delete {
        table: Name,
        tuple: Vec<TplTerm>,
    },
    Grant {
        op: GrantOp,
        grantee: Name,
        privilege: Privilege,
    },
    Revoke {
        grantee: Name,
        privilege: Privilege,
    },
}

/// A trigger definition. The condition's free variables are drawn from
/// `trigger_var(0..arity(table))`. `seq` is the creation sequence number
/// realizing the total execution order `⪯_T`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriggerDef {
    pub id: Name,
    pub owner: Name,
    pub event: TriggerEvent,
    pub table: Name,
    pub condition: Formula,
    pub stmt: TriggerStmt,
    pub mode: crate::rc::Mode,
    pub seq: u64,
}

impl TriggerDef {
    /// The condition with the firing tuple substituted in.
    pub fn condition_instance(&self, fired: &[Value]) -> Formula {
        let map: std::collections::BTreeMap<Var, Term> = (0..fired.len())
            .map(|i| (trigger_var(i), Term::Const(fired[i].clone())))
            .collect();
        self.condition.substitute(&map)
    }
}

/// A user command: the labels of the transition system together with
/// trigger firings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    AddUser {
        issuer: Name,
        user: Name,
    },
    Select {
        user: Name,
        query: Formula,
    },
    Insert {
        user: Name,
        table: Name,
        tuple: Vec<Value>,
    },
    Delete {
        user: Name,
        table: Name,
        tuple: Vec<Value>,
    },
    Grant {
        op: GrantOp,
        grantee: Name,
        privilege: Privilege,
        grantor: Name,
    },
    Revoke {
        grantee: Name,
        privilege: Privilege,
        revoker: Name,
    },
    CreateTrigger {
        issuer: Name,
        trigger: TriggerDef,
    },
    CreateView {
        issuer: Name,
        view: crate::rc::View,
    },
}

impl Action {
    /// The user issuing the action (for grants and revokes, the grantor or
    /// revoker).
    pub fn issuer(&self) -> &Name {
        match self {
            Action::AddUser { issuer, .. } => issuer,
            Action::Select { user, .. } => user,
            Action::Insert { user, .. } | Action::Delete { user, .. } => user,
            Action::Grant { grantor, .. } => grantor,
            Action::Revoke { revoker, .. } => revoker,
            Action::CreateTrigger { issuer, .. } => issuer,
            Action::CreateView { issuer, .. } => issuer,
        }
    }

    pub fn grant_of(&self) -> Option<Grant> {
        match self {
            Action::Grant {
                op,
                grantee,
                privilege,
                grantor,
            } => Some(Grant {
                op: *op,
                grantee: grantee.clone(),
                privilege: privilege.clone(),
                grantor: grantor.clone(),
            }),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::AddUser { issuer, user } => write!(f, "<{issuer}, ADD USER, {user}>"),
            Action::Select { user, query } => write!(f, "<{user}, SELECT, {query}>"),
            Action::Insert { user, table, tuple } => {
                write!(f, "<{user}, INSERT, {table}, {}>", fmt_tuple(tuple))
            }
            Action::Delete { user, table, tuple } => {
                write!(f, "<{user}, DELETE, {table}, {}>", fmt_tuple(tuple))
            }
            Action::Grant {
                op,
                grantee,
                privilege,
                grantor,
            } => write!(f, "<{op}, {grantee}, {privilege}, {grantor}>"),
            Action::Revoke {
                grantee,
                privilege,
                revoker,
            } => write!(f, "<REVOKE, {grantee}, {privilege}, {revoker}>"),
            Action::CreateTrigger { issuer, trigger } => {
                write!(f, "<{issuer}, CREATE TRIGGER, {}>", trigger.id)
            }
            Action::CreateView { issuer, view } => {
                write!(f, "<{issuer}, CREATE VIEW, {}>", view.id)
            }
        }
    }
}

fn fmt_tuple(tuple: &[Value]) -> String {
    let inner: Vec<String> = tuple.iter().map(|v| v.to_string()).collect();
    format!("({})", inner.join(", "))
}

/// A transition label: a user action or a scheduled trigger firing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Act(Action),
    Trig(TriggerDef),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Act(a) => write!(f, "{a}"),
            Label::Trig(t) => write!(f, "TRIGGER {}", t.id),
        }
    }
}
