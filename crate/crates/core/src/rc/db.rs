use std::collections::{BTreeMap, BTreeSet};

use super::schema::{Constraint, ConstraintKind, Name, Schema, Value};
use super::RcError;

pub type Tuple = Vec<Value>;

/// A finite database state: per table, a duplicate-free set of tuples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DatabaseState {
    tables: BTreeMap<Name, BTreeSet<Tuple>>,
}

impl DatabaseState {
    /// An empty state over the schema's tables.
    pub fn empty(schema: &Schema) -> Self {
        DatabaseState {
            tables: schema
                .table_names()
                .map(|n| (n.clone(), BTreeSet::new()))
                .collect(),
        }
    }

    pub fn rows(&self, table: &Name) -> Option<&BTreeSet<Tuple>> {
        self.tables.get(table)
    }

    pub fn contains(&self, table: &Name, tuple: &[Value]) -> bool {
        self.tables
            .get(table)
            .map(|rows| rows.contains(tuple))
            .unwrap_or(false)
    }

    pub fn insert(&mut self, schema: &Schema, table: &Name, tuple: Tuple) -> Result<(), RcError> {
        let arity = schema
            .arity(table)
            .ok_or_else(|| RcError::UnknownPredicate(table.clone()))?;
        if tuple.len() != arity {
            return Err(RcError::ArityMismatch(table.clone(), arity, tuple.len()));
        }
        for v in &tuple {
            if !schema.in_domain(v) {
                return Err(RcError::ValueOutsideDomain(v.clone()));
            }
        }
        self.tables.entry(table.clone()).or_default().insert(tuple);
        Ok(())
    }

    pub fn tables(&self) -> impl Iterator<Item = (&Name, &BTreeSet<Tuple>)> {
        self.tables.iter()
    }

    /// All values occurring in the state.
    pub fn active_values(&self) -> BTreeSet<Value> {
        self.tables
            .values()
            .flat_map(|rows| rows.iter().flat_map(|t| t.iter().cloned()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UpdateOp {
    Insert,
    Delete,
}

/// `db[R ⊕ t̄]` / `db[R ⊖ t̄]`: set union or removal on `R`, all other
/// tables untouched.
pub fn apply_update(
    schema: &Schema,
    db: &DatabaseState,
    op: UpdateOp,
    table: &Name,
    tuple: &[Value],
) -> Result<DatabaseState, RcError> {
    let arity = schema
        .arity(table)
        .ok_or_else(|| RcError::UnknownPredicate(table.clone()))?;
    if tuple.len() != arity {
        return Err(RcError::ArityMismatch(table.clone(), arity, tuple.len()));
    }
    let mut next = db.clone();
    let rows = next.tables.entry(table.clone()).or_default();
    match op {
        UpdateOp::Insert => {
            rows.insert(tuple.to_vec());
        }
        UpdateOp::Delete => {
            rows.remove(tuple);
        }
    }
    Ok(next)
}

/// The constraints of `gamma` that are false in `db`.
pub fn violated<'a>(
    db: &DatabaseState,
    gamma: impl IntoIterator<Item = &'a Constraint>,
) -> Vec<Constraint> {
    gamma
        .into_iter()
        .filter(|c| !constraint_holds(db, c))
        .cloned()
        .collect()
}

/// Direct (set-level) evaluation of a single constraint.
pub fn constraint_holds(db: &DatabaseState, c: &Constraint) -> bool {
    match &c.kind {
        ConstraintKind::Fd {
            table,
            determinant,
            dependent,
        } => {
            let Some(rows) = db.rows(table) else {
                return true;
            };
            let mut seen: BTreeMap<Vec<&Value>, Vec<&Value>> = BTreeMap::new();
            for row in rows {
                let key: Vec<&Value> = determinant.iter().map(|&i| &row[i]).collect();
                let dep: Vec<&Value> = dependent.iter().map(|&i| &row[i]).collect();
                match seen.get(&key) {
                    Some(prev) if *prev != dep => return false,
                    Some(_) => {}
                    None => {
                        seen.insert(key, dep);
                    }
                }
            }
            true
        }
        ConstraintKind::Id { from, to, prefix } => {
            let Some(from_rows) = db.rows(from) else {
                return true;
            };
            let to_prefixes: BTreeSet<Vec<&Value>> = db
                .rows(to)
                .map(|rows| rows.iter().map(|r| r[..*prefix].iter().collect()).collect())
                .unwrap_or_default();
            from_rows
                .iter()
                .all(|r| to_prefixes.contains(&r[..*prefix].iter().collect::<Vec<_>>()))
        }
    }
}
