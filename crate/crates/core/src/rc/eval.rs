use std::collections::{BTreeMap, BTreeSet};

use super::db::{DatabaseState, Tuple};
use super::formula::{Formula, Query, Term, Var};
use super::schema::{Name, Value, View};
use super::RcError;

/// A partial map from variables to domain values.
pub type Assignment = BTreeMap<Var, Value>;

/// Resolves view atoms during evaluation.
#[derive(Debug, Clone, Default)]
pub struct ViewEnv {
    views: BTreeMap<Name, Query>,
}

impl ViewEnv {
    pub fn empty() -> Self {
        ViewEnv::default()
    }

    pub fn of<'a>(views: impl IntoIterator<Item = &'a View>) -> Self {
        ViewEnv {
            views: views
                .into_iter()
                .map(|v| (v.id.clone(), v.query.clone()))
                .collect(),
        }
    }

    pub fn get(&self, name: &Name) -> Option<&Query> {
        self.views.get(name)
    }

    pub fn constants(&self) -> BTreeSet<Value> {
        self.views
            .values()
            .flat_map(|q| q.body.constants())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Query)> {
        self.views.iter()
    }
}

/// The active domain of an evaluation problem: every value in the database,
/// in the formula, in the assignment, and in any view definition.
pub fn adom(db: &DatabaseState, phi: &Formula, nu: &Assignment, views: &ViewEnv) -> Vec<Value> {
    let mut set = db.active_values();
    set.extend(phi.constants());
    set.extend(nu.values().cloned());
    set.extend(views.constants());
    set.into_iter().collect()
}

/// Evaluates `φ ∘ ν` in `db` under active-domain semantics: quantifiers
/// range over the values occurring in the database, the formula, the
/// assignment, and the view definitions. For allowed formulas this agrees
/// with evaluation over any larger domain.
pub fn eval(
    db: &DatabaseState,
    phi: &Formula,
    nu: &Assignment,
    views: &ViewEnv,
) -> Result<bool, RcError> {
    let universe = adom(db, phi, nu, views);
    eval_in(db, phi, &mut nu.clone(), views, &universe)
}

/// Evaluates `φ ∘ ν` with quantifiers ranging over the given universe.
/// Used by the enumeration oracles and the domain-independence tests.
pub fn eval_over(
    db: &DatabaseState,
    phi: &Formula,
    nu: &Assignment,
    views: &ViewEnv,
    universe: &[Value],
) -> Result<bool, RcError> {
    eval_in(db, phi, &mut nu.clone(), views, universe)
}

fn resolve(term: &Term, nu: &Assignment) -> Result<Value, RcError> {
    match term {
        Term::Const(c) => Ok(c.clone()),
        Term::Var(v) => nu
            .get(v)
            .cloned()
            .ok_or_else(|| RcError::UnboundVariable(v.clone())),
    }
}

fn eval_in(
    db: &DatabaseState,
    phi: &Formula,
    nu: &mut Assignment,
    views: &ViewEnv,
    universe: &[Value],
) -> Result<bool, RcError> {
    match phi {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Eq(a, b) => Ok(resolve(a, nu)? == resolve(b, nu)?),
        Formula::Pred(name, args) => {
            let tuple: Tuple = args
                .iter()
                .map(|t| resolve(t, nu))
                .collect::<Result<_, _>>()?;
            if let Some(rows) = db.rows(name) {
                return Ok(rows.contains(&tuple));
            }
            if let Some(q) = views.get(name) {
                if q.head.len() != tuple.len() {
                    return Err(RcError::ArityMismatch(
                        name.clone(),
                        q.head.len(),
                        tuple.len(),
                    ));
                }
                // The body's free variables are exactly the head, so
                // binding them in a fresh assignment avoids substitution.
                let mut inner: Assignment = q.head.iter().cloned().zip(tuple).collect();
                return eval_in(db, &q.body, &mut inner, views, universe);
            }
            Err(RcError::UnknownPredicate(name.clone()))
        }
        Formula::Not(f) => Ok(!eval_in(db, f, nu, views, universe)?),
        Formula::And(a, b) => {
            Ok(eval_in(db, a, nu, views, universe)? && eval_in(db, b, nu, views, universe)?)
        }
        Formula::Or(a, b) => {
            Ok(eval_in(db, a, nu, views, universe)? || eval_in(db, b, nu, views, universe)?)
        }
        Formula::Exists(v, f) => {
            let saved = nu.get(v).cloned();
            let mut found = false;
            for value in universe {
                nu.insert(v.clone(), value.clone());
                if eval_in(db, f, nu, views, universe)? {
                    found = true;
                    break;
                }
            }
            restore(nu, v, saved);
            Ok(found)
        }
        Formula::Forall(v, f) => {
            let saved = nu.get(v).cloned();
            let mut all = true;
            for value in universe {
                nu.insert(v.clone(), value.clone());
                if !eval_in(db, f, nu, views, universe)? {
                    all = false;
                    break;
                }
            }
            restore(nu, v, saved);
            Ok(all)
        }
    }
}

fn restore(nu: &mut Assignment, v: &Var, saved: Option<Value>) {
    match saved {
        Some(old) => {
            nu.insert(v.clone(), old);
        }
        None => {
            nu.remove(v);
        }
    }
}

/// The answer set of a query over the active domain. Boolean queries return
/// the empty set for `⊥` and the singleton empty tuple for `⊤`.
pub fn eval_query(
    db: &DatabaseState,
    q: &Query,
    views: &ViewEnv,
) -> Result<BTreeSet<Tuple>, RcError> {
    let universe = adom(db, &q.body, &Assignment::new(), views);
    eval_query_over(db, q, views, &universe)
}

/// The answer set with head tuples drawn from the given universe.
pub fn eval_query_over(
    db: &DatabaseState,
    q: &Query,
    views: &ViewEnv,
    universe: &[Value],
) -> Result<BTreeSet<Tuple>, RcError> {
    let mut out = BTreeSet::new();
    let mut nu = Assignment::new();
    answer_rec(db, q, views, universe, 0, &mut nu, &mut out)?;
    Ok(out)
}

fn answer_rec(
    db: &DatabaseState,
    q: &Query,
    views: &ViewEnv,
    universe: &[Value],
    depth: usize,
    nu: &mut Assignment,
    out: &mut BTreeSet<Tuple>,
) -> Result<(), RcError> {
    if depth == q.head.len() {
        if eval_in(db, &q.body, &mut nu.clone(), views, universe)? {
            out.insert(q.head.iter().map(|v| nu[v].clone()).collect());
        }
        return Ok(());
    }
    for value in universe {
        nu.insert(q.head[depth].clone(), value.clone());
        answer_rec(db, q, views, universe, depth + 1, nu, out)?;
    }
    nu.remove(&q.head[depth]);
    Ok(())
}
