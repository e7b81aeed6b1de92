use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::formula::{Formula, Query, Term, Var};
use super::RcError;

/// An interned identifier: table, view, trigger, user, or constraint name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name(Arc::from(s))
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s.as_str()))
    }
}

/// A domain value. Values are opaque atoms compared by equality only.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(Arc<str>);

impl Value {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}'", self.0)
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "'{}'", self.0)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value(Arc::from(s))
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value(Arc::from(s.as_str()))
    }
}

/// A database schema: a set of tables with arities plus the declared finite
/// active domain used by evaluation and the enumeration oracles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    tables: BTreeMap<Name, usize>,
    domain: BTreeSet<Value>,
}

impl Schema {
    pub fn new(
        tables: impl IntoIterator<Item = (Name, usize)>,
        domain: impl IntoIterator<Item = Value>,
    ) -> Result<Self, RcError> {
        let mut map = BTreeMap::new();
        for (name, arity) in tables {
            assert!(arity >= 1, "table arity must be positive");
            map.insert(name, arity);
        }
        let domain: BTreeSet<Value> = domain.into_iter().collect();
        assert!(!domain.is_empty(), "schema domain must be non-empty");
        Ok(Schema {
            tables: map,
            domain,
        })
    }

    pub fn tables(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.tables.iter().map(|(n, a)| (n, *a))
    }

    pub fn table_names(&self) -> impl Iterator<Item = &Name> {
        self.tables.keys()
    }

    pub fn arity(&self, table: &Name) -> Option<usize> {
        self.tables.get(table).copied()
    }

    pub fn has_table(&self, table: &Name) -> bool {
        self.tables.contains_key(table)
    }

    pub fn domain(&self) -> &BTreeSet<Value> {
        &self.domain
    }

    pub fn in_domain(&self, v: &Value) -> bool {
        self.domain.contains(v)
    }
}

/// The view security mode: activator's (`A`) or the owner's (`O`) privileges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Activator,
    Owner,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Activator => f.write_str("A"),
            Mode::Owner => f.write_str("O"),
        }
    }
}

/// A view: identifier, owner, defining non-boolean query, security mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct View {
    pub id: Name,
    pub owner: Name,
    pub query: Query,
    pub mode: Mode,
}

impl View {
    pub fn arity(&self) -> usize {
        self.query.head.len()
    }
}

/// A functional or inclusion dependency.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub id: Name,
    pub kind: ConstraintKind,
}

/// The two supported constraint shapes. Positions are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    /// The determinant positions fix the dependent positions; every other
    /// position of the table is unconstrained.
    Fd {
        table: Name,
        determinant: Vec<usize>,
        dependent: Vec<usize>,
    },
    /// The first `prefix` columns of `from` must appear as the first
    /// `prefix` columns of some `to` tuple.
    Id { from: Name, to: Name, prefix: usize },
}

impl Constraint {
    /// Checks well-formedness against a schema: the index vectors must be
    /// disjoint subsets of the table positions, and prefixes must fit.
    pub fn validate(&self, schema: &Schema) -> Result<(), RcError> {
        match &self.kind {
            ConstraintKind::Fd {
                table,
                determinant,
                dependent,
            } => {
                let arity = schema
                    .arity(table)
                    .ok_or_else(|| RcError::UnknownPredicate(table.clone()))?;
                let mut seen = BTreeSet::new();
                for &i in determinant.iter().chain(dependent.iter()) {
                    if i >= arity || !seen.insert(i) {
                        return Err(RcError::ArityMismatch(table.clone(), arity, i + 1));
                    }
                }
                Ok(())
            }
            ConstraintKind::Id { from, to, prefix } => {
                let fa = schema
                    .arity(from)
                    .ok_or_else(|| RcError::UnknownPredicate(from.clone()))?;
                let ta = schema
                    .arity(to)
                    .ok_or_else(|| RcError::UnknownPredicate(to.clone()))?;
                if *prefix == 0 || *prefix > fa || *prefix > ta {
                    return Err(RcError::ArityMismatch(from.clone(), fa, *prefix));
                }
                Ok(())
            }
        }
    }

    /// The tables the constraint mentions.
    pub fn tables(&self) -> Vec<Name> {
        match &self.kind {
            ConstraintKind::Fd { table, .. } => vec![table.clone()],
            ConstraintKind::Id { from, to, .. } => vec![from.clone(), to.clone()],
        }
    }

    /// The constraint as a relational-calculus sentence.
    pub fn sentence(&self, schema: &Schema) -> Formula {
        match &self.kind {
            ConstraintKind::Fd {
                table,
                determinant,
                dependent,
            } => {
                let arity = schema.arity(table).expect("validated constraint");
                let lhs: Vec<Var> = (0..arity).map(|i| Var::numbered("a", i)).collect();
                let rhs: Vec<Var> = (0..arity).map(|i| Var::numbered("b", i)).collect();
                // Positions outside determinant ∪ dependent are free to differ,
                // so the second atom reuses the determinant variables and gets
                // fresh variables everywhere else.
                let mut rhs_args: Vec<Term> = Vec::with_capacity(arity);
                for i in 0..arity {
                    if determinant.contains(&i) {
                        rhs_args.push(Term::Var(lhs[i].clone()));
                    } else {
                        rhs_args.push(Term::Var(rhs[i].clone()));
                    }
                }
                let atom1 = Formula::pred(
                    table.clone(),
                    lhs.iter().map(|v| Term::Var(v.clone())).collect(),
                );
                let atom2 = Formula::pred(table.clone(), rhs_args);
                let eqs = dependent
                    .iter()
                    .map(|&i| Formula::eq(Term::Var(lhs[i].clone()), Term::Var(rhs[i].clone())))
                    .fold(Formula::True, Formula::and);
                // ∀ lhs, rhs'. (R(lhs) ∧ R(rhs')) ⇒ deps equal
                let body = Formula::or(Formula::not(Formula::and(atom1, atom2)), eqs);
                let mut out = body;
                let mut quantified: Vec<Var> = lhs;
                for (i, v) in rhs.into_iter().enumerate() {
                    if !determinant.contains(&i) {
                        quantified.push(v);
                    }
                }
                for v in quantified.into_iter().rev() {
                    out = Formula::forall(v, out);
                }
                out
            }
            ConstraintKind::Id { from, to, prefix } => {
                let fa = schema.arity(from).expect("validated constraint");
                let ta = schema.arity(to).expect("validated constraint");
                let shared: Vec<Var> = (0..*prefix).map(|i| Var::numbered("a", i)).collect();
                let rest_from: Vec<Var> = (*prefix..fa).map(|i| Var::numbered("b", i)).collect();
                let rest_to: Vec<Var> = (*prefix..ta).map(|i| Var::numbered("c", i)).collect();
                let from_args: Vec<Term> = shared
                    .iter()
                    .chain(rest_from.iter())
                    .map(|v| Term::Var(v.clone()))
                    .collect();
                let to_args: Vec<Term> = shared
                    .iter()
                    .chain(rest_to.iter())
                    .map(|v| Term::Var(v.clone()))
                    .collect();
                let mut target = Formula::pred(to.clone(), to_args);
                for v in rest_to.into_iter().rev() {
                    target = Formula::exists(v, target);
                }
                let body =
                    Formula::or(Formula::not(Formula::pred(from.clone(), from_args)), target);
                let mut out = body;
                for v in shared.into_iter().chain(rest_from).rev() {
                    out = Formula::forall(v, out);
                }
                out
            }
        }
    }
}
