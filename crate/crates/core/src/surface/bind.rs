use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::kernel::{
    trigger_var, Action, GrantOp, Privilege, SystemState, TplTerm, TriggerDef, TriggerEvent,
    TriggerStmt,
};
use crate::rc::{
    is_allowed, normalize, Formula, Mode, Name, Query, Schema, Term, Value, Var, View,
};

use super::ast::*;

#[derive(Debug, Clone, Error)]
pub enum BindError {
    #[error("unknown table or view {0}")]
    UnknownObject(String),
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("arity mismatch for {0}: expected {1}, got {2}")]
    Arity(String, usize, usize),
    #[error("NEW.{0} is only meaningful inside a trigger")]
    NewOutsideTrigger(usize),
    #[error("NEW.{0} exceeds the trigger table's arity {1}")]
    NewOutOfRange(usize, usize),
    #[error("formula is not safe-range")]
    NotAllowed,
    #[error("value {0} is not in the declared domain")]
    OutsideDomain(Value),
    #[error("variable {0} is unbound in this statement")]
    Unbound(String),
    #[error("{0}")]
    Other(String),
}

/// Name-resolution context: the schema, the known views with arities, and
/// the known users.
pub struct Catalog<'a> {
    pub schema: &'a Schema,
    pub views: BTreeMap<Name, usize>,
    pub users: BTreeSet<Name>,
}

impl<'a> Catalog<'a> {
    pub fn of_state(state: &'a SystemState) -> Self {
        Catalog {
            schema: &state.config.schema,
            views: state
                .views
                .iter()
                .map(|v| (v.id.clone(), v.arity()))
                .collect(),
            users: state.users.clone(),
        }
    }

    fn object_arity(&self, name: &Name) -> Option<usize> {
        self.schema
            .arity(name)
            .or_else(|| self.views.get(name).copied())
    }
}

/// A bound statement: a kernel action, or a non-boolean SELECT that the
/// harness evaluates and submits via its boolean encoding.
#[derive(Debug, Clone)]
pub enum Bound {
    Act(Action),
    SelectRows { user: Name, query: Query },
}

/// Resolves a parsed statement against the catalog, attaching the issuer.
pub fn bind(stmt: &Statement, issuer: &Name, cat: &Catalog) -> Result<Bound, BindError> {
    if !cat.users.contains(issuer) {
        return Err(BindError::UnknownUser(issuer.to_string()));
    }
    match stmt {
        Statement::Select(form) => {
            let (head, body) = compile_select(form, cat, None)?;
            for v in body.free_vars() {
                if !head.contains(&v) {
                    return Err(BindError::Unbound(v.to_string()));
                }
            }
            if !is_allowed(&body) {
                return Err(BindError::NotAllowed);
            }
            if head.is_empty() {
                let sentence =
                    normalize(&body, cat.schema).map_err(|e| BindError::Other(e.to_string()))?;
                Ok(Bound::Act(Action::Select {
                    user: issuer.clone(),
                    query: sentence,
                }))
            } else {
                let query = Query::new(head, body).map_err(|e| BindError::Other(e.to_string()))?;
                Ok(Bound::SelectRows {
                    user: issuer.clone(),
                    query,
                })
            }
        }
        Statement::Basic(b) => Ok(Bound::Act(bind_basic(b, issuer, cat)?)),
        Statement::CreateTrigger {
            id,
            event,
            table,
            mode,
            condition,
            body,
        } => {
            let table: Name = table.as_str().into();
            let arity = cat
                .schema
                .arity(&table)
                .ok_or_else(|| BindError::UnknownTable(table.to_string()))?;
            let cond = match condition {
                None => Formula::True,
                Some(sf) => {
                    let f = compile_formula(sf, cat, Some(arity))?;
                    let f = map_positional_frees(&f, arity)?;
                    check_condition_allowed(&f, cat.schema)?;
                    f
                }
            };
            let stmt = bind_trigger_stmt(body, cat, arity)?;
            Ok(Bound::Act(Action::CreateTrigger {
                issuer: issuer.clone(),
                trigger: TriggerDef {
                    id: id.as_str().into(),
                    owner: issuer.clone(),
                    event: match event {
                        EventAst::Insert => TriggerEvent::Insert,
                        EventAst::Delete => TriggerEvent::Delete,
                    },
                    table,
                    condition: cond,
                    stmt,
                    mode: bind_mode(*mode),
                    seq: 0,
                },
            }))
        }
        Statement::CreateView { id, mode, def } => {
            let (head, body) = compile_select(def, cat, None)?;
            if head.is_empty() {
                return Err(BindError::Other(
                    "view definitions must be non-boolean queries".into(),
                ));
            }
            for v in body.free_vars() {
                if !head.contains(&v) {
                    return Err(BindError::Unbound(v.to_string()));
                }
            }
            if !is_allowed(&body) {
                return Err(BindError::NotAllowed);
            }
            let query = Query::new(head, body).map_err(|e| BindError::Other(e.to_string()))?;
            Ok(Bound::Act(Action::CreateView {
                issuer: issuer.clone(),
                view: View {
                    id: id.as_str().into(),
                    owner: issuer.clone(),
                    query,
                    mode: bind_mode(*mode),
                },
            }))
        }
        Statement::AddUser { user } => {
            if user == crate::kernel::ADMIN {
                return Err(BindError::Other("cannot add the admin account".into()));
            }
            Ok(Bound::Act(Action::AddUser {
                issuer: issuer.clone(),
                user: user.as_str().into(),
            }))
        }
    }
}

fn bind_mode(m: ModeAst) -> Mode {
    match m {
        ModeAst::Invoker => Mode::Activator,
        ModeAst::Definer => Mode::Owner,
    }
}

fn bind_basic(b: &BasicStmt, issuer: &Name, cat: &Catalog) -> Result<Action, BindError> {
    match b {
        BasicStmt::Insert { table, values } => {
            let (table, tuple) = bind_update(table, values, cat)?;
            Ok(Action::Insert {
                user: issuer.clone(),
                table,
                tuple,
            })
        }
        BasicStmt::Delete { table, eqs } => {
            let values = delete_values(table, eqs, cat)?;
            let (table, tuple) = bind_update(table, &values, cat)?;
            Ok(Action::Delete {
                user: issuer.clone(),
                table,
                tuple,
            })
        }
        BasicStmt::Grant {
            privilege,
            grantee,
            grant_option,
        } => Ok(Action::Grant {
            op: if *grant_option {
                GrantOp::WithGrantOption
            } else {
                GrantOp::Plain
            },
            grantee: bind_user(grantee, cat)?,
            privilege: bind_privilege(privilege, cat)?,
            grantor: issuer.clone(),
        }),
        BasicStmt::Revoke { privilege, grantee } => Ok(Action::Revoke {
            grantee: bind_user(grantee, cat)?,
            privilege: bind_privilege(privilege, cat)?,
            revoker: issuer.clone(),
        }),
    }
}

fn bind_user(u: &str, cat: &Catalog) -> Result<Name, BindError> {
    let name: Name = u.into();
    if cat.users.contains(&name) {
        Ok(name)
    } else {
        Err(BindError::UnknownUser(u.to_string()))
    }
}

fn bind_privilege(p: &PrivilegeAst, cat: &Catalog) -> Result<Privilege, BindError> {
    match p {
        PrivilegeAst::Select(o) => {
            let name: Name = o.as_str().into();
            if cat.object_arity(&name).is_none() {
                return Err(BindError::UnknownObject(o.clone()));
            }
            Ok(Privilege::Select(name))
        }
        PrivilegeAst::Insert(t) => Ok(Privilege::Insert(bind_table(t, cat)?)),
        PrivilegeAst::Delete(t) => Ok(Privilege::Delete(bind_table(t, cat)?)),
        PrivilegeAst::CreateTrigger(t) => Ok(Privilege::CreateTrigger(bind_table(t, cat)?)),
        PrivilegeAst::CreateView => Ok(Privilege::CreateView),
    }
}

fn bind_table(t: &str, cat: &Catalog) -> Result<Name, BindError> {
    let name: Name = t.into();
    if cat.schema.has_table(&name) {
        Ok(name)
    } else {
        Err(BindError::UnknownTable(t.to_string()))
    }
}

/// Top-level updates: values must be constants within the domain.
fn bind_update(
    table: &str,
    values: &[STerm],
    cat: &Catalog,
) -> Result<(Name, Vec<Value>), BindError> {
    let name = bind_table(table, cat)?;
    let arity = cat.schema.arity(&name).expect("checked");
    if values.len() != arity {
        return Err(BindError::Arity(table.to_string(), arity, values.len()));
    }
    let mut tuple = Vec::with_capacity(values.len());
    for v in values {
        match v {
            STerm::Const(c) => {
                if !cat.schema.in_domain(c) {
                    return Err(BindError::OutsideDomain(c.clone()));
                }
                tuple.push(c.clone());
            }
            STerm::New(k) => return Err(BindError::NewOutsideTrigger(*k)),
            STerm::Var(v) => return Err(BindError::Unbound(v.clone())),
        }
    }
    Ok((name, tuple))
}

/// DELETE's WHERE must bind every column `x1 … xn` exactly once.
fn delete_values(
    table: &str,
    eqs: &[(String, STerm)],
    cat: &Catalog,
) -> Result<Vec<STerm>, BindError> {
    let name: Name = table.into();
    let arity = cat
        .schema
        .arity(&name)
        .ok_or_else(|| BindError::UnknownTable(table.to_string()))?;
    let mut slots: Vec<Option<STerm>> = vec![None; arity];
    for (col, v) in eqs {
        let idx = col
            .strip_prefix('x')
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&k| k >= 1 && k <= arity)
            .ok_or_else(|| BindError::UnknownColumn(col.clone()))?;
        if slots[idx - 1].is_some() {
            return Err(BindError::Other(format!("column x{idx} bound twice")));
        }
        slots[idx - 1] = Some(v.clone());
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| BindError::Other(format!("column x{} not bound", i + 1))))
        .collect()
}

/// Trigger-body statements: values may also reference the firing tuple.
fn bind_trigger_stmt(
    b: &BasicStmt,
    cat: &Catalog,
    trigger_arity: usize,
) -> Result<TriggerStmt, BindError> {
    let tpl = |values: &[STerm], table: &Name| -> Result<Vec<TplTerm>, BindError> {
        let arity = cat.schema.arity(table).expect("checked");
        if values.len() != arity {
            return Err(BindError::Arity(table.to_string(), arity, values.len()));
        }
        values
            .iter()
            .map(|v| match v {
                STerm::Const(c) => {
                    if !cat.schema.in_domain(c) {
                        return Err(BindError::OutsideDomain(c.clone()));
                    }
                    Ok(TplTerm::Const(c.clone()))
                }
                STerm::New(k) => {
                    if *k > trigger_arity {
                        Err(BindError::NewOutOfRange(*k, trigger_arity))
                    } else {
                        Ok(TplTerm::Fired(*k - 1))
                    }
                }
                STerm::Var(v) => Err(BindError::Unbound(v.clone())),
            })
            .collect()
    };
    match b {
        BasicStmt::Insert { table, values } => {
            let name = bind_table(table, cat)?;
            Ok(TriggerStmt::Insert {
                tuple: tpl(values, &name)?,
                table: name,
            })
        }
        BasicStmt::Delete { table, eqs } => {
            let values = delete_values(table, eqs, cat)?;
            let name = bind_table(table, cat)?;
            Ok(TriggerStmt::Delete {
                tuple: tpl(&values, &name)?,
                table: name,
            })
        }
        BasicStmt::Grant {
            privilege,
            grantee,
            grant_option,
        } => Ok(TriggerStmt::Grant {
            op: if *grant_option {
                GrantOp::WithGrantOption
            } else {
                GrantOp::Plain
            },
            grantee: bind_user(grantee, cat)?,
            privilege: bind_privilege(privilege, cat)?,
        }),
        BasicStmt::Revoke { privilege, grantee } => Ok(TriggerStmt::Revoke {
            grantee: bind_user(grantee, cat)?,
            privilege: bind_privilege(privilege, cat)?,
        }),
    }
}

/// Rewrites free variables `x1 … xn` of a trigger condition to the
/// reserved firing-tuple variables.
fn map_positional_frees(f: &Formula, arity: usize) -> Result<Formula, BindError> {
    let mut map = BTreeMap::new();
    for v in f.free_vars() {
        if let Some(k) = v
            .as_str()
            .strip_prefix('x')
            .and_then(|s| s.parse::<usize>().ok())
        {
            if k >= 1 && k <= arity {
                map.insert(v.clone(), Term::Var(trigger_var(k - 1)));
                continue;
            }
        }
        if !v.as_str().starts_with(".t") {
            return Err(BindError::Unbound(v.to_string()));
        }
    }
    let out = f.substitute(&map);
    for v in out.free_vars() {
        let ok = v
            .as_str()
            .strip_prefix(".t")
            .and_then(|s| s.parse::<usize>().ok())
            .map(|k| k >= 1 && k <= arity)
            .unwrap_or(false);
        if !ok {
            return Err(BindError::Unbound(v.to_string()));
        }
    }
    Ok(out)
}

/// A trigger condition must be evaluable once the firing tuple is
/// substituted in; we check the allowed property on a ground instance.
fn check_condition_allowed(f: &Formula, schema: &Schema) -> Result<(), BindError> {
    let dummy = schema
        .domain()
        .iter()
        .next()
        .expect("non-empty domain")
        .clone();
    let map: BTreeMap<Var, Term> = f
        .free_vars()
        .into_iter()
        .map(|v| (v, Term::Const(dummy.clone())))
        .collect();
    if is_allowed(&f.substitute(&map)) {
        Ok(())
    } else {
        Err(BindError::NotAllowed)
    }
}

/// Compiles a SELECT form to `(head, body)`. Non-projected column
/// variables of the SQL form are existentially closed; the head is empty
/// for boolean forms.
fn compile_select(
    form: &SelectForm,
    cat: &Catalog,
    trig: Option<usize>,
) -> Result<(Vec<Var>, Formula), BindError> {
    match form {
        SelectForm::RcBool(sf) => Ok((Vec::new(), compile_formula(sf, cat, trig)?)),
        SelectForm::RcQuery { head, body } => {
            let body = compile_formula(body, cat, trig)?;
            Ok((head.iter().map(|h| Var::new(h)).collect(), body))
        }
        SelectForm::Sql {
            columns,
            tables,
            filter,
        } => {
            let mut atoms = Vec::new();
            let mut col_vars: Vec<Var> = Vec::new();
            let mut idx = 0usize;
            for t in tables {
                let name: Name = t.as_str().into();
                let arity = cat
                    .object_arity(&name)
                    .ok_or_else(|| BindError::UnknownObject(t.clone()))?;
                let vars: Vec<Var> = (0..arity)
                    .map(|_| {
                        idx += 1;
                        Var::new(&format!("x{idx}"))
                    })
                    .collect();
                atoms.push(Formula::pred(
                    name,
                    vars.iter().cloned().map(Term::Var).collect(),
                ));
                col_vars.extend(vars);
            }
            let mut body = Formula::conj(atoms);
            if let Some(sf) = filter {
                body = Formula::raw_and(body, compile_formula(sf, cat, trig)?);
            }
            let head: Vec<Var> = match columns {
                Columns::Star => col_vars.clone(),
                Columns::List(cols) => cols
                    .iter()
                    .map(|c| {
                        let v = Var::new(c);
                        if col_vars.contains(&v) {
                            Ok(v)
                        } else {
                            Err(BindError::UnknownColumn(c.clone()))
                        }
                    })
                    .collect::<Result<_, _>>()?,
            };
            // Existentially close every column variable not projected.
            for v in col_vars.iter().rev() {
                if !head.contains(v) {
                    body = Formula::exists(v.clone(), body);
                }
            }
            Ok((head, body))
        }
    }
}

fn compile_term(t: &STerm, trig: Option<usize>) -> Result<Term, BindError> {
    match t {
        STerm::Var(v) => Ok(Term::Var(Var::new(v))),
        STerm::Const(c) => Ok(Term::Const(c.clone())),
        STerm::New(k) => match trig {
            None => Err(BindError::NewOutsideTrigger(*k)),
            Some(n) if *k > n => Err(BindError::NewOutOfRange(*k, n)),
            Some(_) => Ok(Term::Var(trigger_var(*k - 1))),
        },
    }
}

fn compile_formula(
    sf: &SFormula,
    cat: &Catalog,
    trig: Option<usize>,
) -> Result<Formula, BindError> {
    match sf {
        SFormula::True => Ok(Formula::True),
        SFormula::False => Ok(Formula::False),
        SFormula::Atom(name, args) => {
            let pred: Name = name.as_str().into();
            let arity = cat
                .object_arity(&pred)
                .ok_or_else(|| BindError::UnknownObject(name.clone()))?;
            if args.len() != arity {
                return Err(BindError::Arity(name.clone(), arity, args.len()));
            }
            let terms: Vec<Term> = args
                .iter()
                .map(|a| compile_term(a, trig))
                .collect::<Result<_, _>>()?;
            Ok(Formula::Pred(pred, terms))
        }
        SFormula::Eq(a, b) => Ok(Formula::Eq(compile_term(a, trig)?, compile_term(b, trig)?)),
        SFormula::Neq(a, b) => Ok(Formula::not(Formula::Eq(
            compile_term(a, trig)?,
            compile_term(b, trig)?,
        ))),
        SFormula::Not(f) => Ok(Formula::not(compile_formula(f, cat, trig)?)),
        SFormula::And(a, b) => Ok(Formula::raw_and(
            compile_formula(a, cat, trig)?,
            compile_formula(b, cat, trig)?,
        )),
        SFormula::Or(a, b) => Ok(Formula::raw_or(
            compile_formula(a, cat, trig)?,
            compile_formula(b, cat, trig)?,
        )),
        SFormula::Exists(vars, f) => {
            let mut body = compile_formula(f, cat, trig)?;
            for v in vars.iter().rev() {
                body = Formula::exists(Var::new(v), body);
            }
            Ok(body)
        }
        SFormula::Forall(vars, f) => {
            let mut body = compile_formula(f, cat, trig)?;
            for v in vars.iter().rev() {
                body = Formula::forall(Var::new(v), body);
            }
            Ok(body)
        }
        SFormula::ExistsSelect(sel) => {
            let (head, body) = compile_select(sel, cat, trig)?;
            let mut out = body;
            for v in head.iter().rev() {
                out = Formula::exists(v.clone(), out);
            }
            Ok(out)
        }
    }
}
