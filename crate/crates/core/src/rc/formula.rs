use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::schema::{Name, Value};

/// A variable identifier. The total order `⪯_var` used for head ordering
/// and containment is the lexicographic byte order of the name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(s: &str) -> Self {
        Var(Arc::from(s))
    }

    /// A variable `"{prefix}{i+1}"` with two-digit padding so that the
    /// lexicographic order matches the numeric order up to 99.
    pub fn numbered(prefix: &str, i: usize) -> Self {
        Var(Arc::from(format!("{prefix}{:02}", i + 1).as_str()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// An argument of a predicate or equality atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const(Value),
}

impl Term {
    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Value> {
        match self {
            Term::Var(_) => None,
            Term::Const(c) => Some(c),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// A relational-calculus formula over a schema. Predicates name tables,
/// views, or projection predicates of the extended vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Pred(Name, Vec<Term>),
    Eq(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    pub fn pred(name: Name, args: Vec<Term>) -> Self {
        Formula::Pred(name, args)
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Formula::Eq(a, b)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        match (a, b) {
            (Formula::True, b) => b,
            (a, Formula::True) => a,
            (a, b) => Formula::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        match (a, b) {
            (Formula::False, b) => b,
            (a, Formula::False) => a,
            (a, b) => Formula::Or(Box::new(a), Box::new(b)),
        }
    }

    /// Plain conjunction without unit simplification.
    pub fn raw_and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    /// Plain disjunction without unit simplification.
    pub fn raw_or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(v: Var, f: Formula) -> Self {
        Formula::Exists(v, Box::new(f))
    }

    pub fn forall(v: Var, f: Formula) -> Self {
        Formula::Forall(v, Box::new(f))
    }

    /// Conjunction of a sequence; the empty conjunction is `⊤`.
    pub fn conj(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::raw_and),
        }
    }

    /// Disjunction of a sequence; the empty disjunction is `⊥`.
    pub fn disj(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::raw_or),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut BTreeSet::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut BTreeSet<Var>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Pred(_, args) => {
                for t in args {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        if !bound.contains(v) {
                            out.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let fresh = bound.insert(v.clone());
                f.collect_free(bound, out);
                if fresh {
                    bound.remove(v);
                }
            }
        }
    }

    /// All predicate names occurring in the formula.
    pub fn predicates(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Pred(name, _) = f {
                out.insert(name.clone());
            }
        });
        out
    }

    /// All constants occurring in the formula.
    pub fn constants(&self) -> BTreeSet<Value> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Pred(_, args) => {
                for t in args {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
            _ => {}
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Substitutes free occurrences of variables by terms, renaming bound
    /// variables where needed to avoid capture.
    pub fn substitute(&self, map: &BTreeMap<Var, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        let sub_term = |t: &Term| -> Term {
            match t {
                Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
                Term::Const(_) => t.clone(),
            }
        };
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Pred(name, args) => {
                Formula::Pred(name.clone(), args.iter().map(sub_term).collect())
            }
            Formula::Eq(a, b) => Formula::Eq(sub_term(a), sub_term(b)),
            Formula::Not(f) => Formula::not(f.substitute(map)),
            Formula::And(a, b) => Formula::raw_and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::raw_or(a.substitute(map), b.substitute(map)),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let is_exists = matches!(self, Formula::Exists(..));
                let mut inner_map = map.clone();
                inner_map.remove(v);
                // Capture check: does any replacement mention the binder?
                let clashes = inner_map
                    .values()
                    .any(|t| matches!(t, Term::Var(w) if w == v));
                let (binder, body) = if clashes {
                    let fresh = fresh_var(v, &self.all_vars());
                    let mut rename = BTreeMap::new();
                    rename.insert(v.clone(), Term::Var(fresh.clone()));
                    (fresh, f.substitute(&rename))
                } else {
                    (v.clone(), (**f).clone())
                };
                let body = body.substitute(&inner_map);
                if is_exists {
                    Formula::exists(binder, body)
                } else {
                    Formula::forall(binder, body)
                }
            }
        }
    }

    fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Pred(_, args) => {
                for t in args {
                    if let Term::Var(v) = t {
                        out.insert(v.clone());
                    }
                }
            }
            Formula::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Var(v) = t {
                        out.insert(v.clone());
                    }
                }
            }
            Formula::Exists(v, _) | Formula::Forall(v, _) => {
                out.insert(v.clone());
            }
            _ => {}
        });
        out
    }

    /// Alpha-canonical form: bound variables are renamed `.b1`, `.b2`, … in
    /// traversal order. Two alpha-equivalent formulas have identical
    /// canonical forms. The `.` prefix cannot appear in parsed variables.
    pub fn alpha_canonical(&self) -> Formula {
        let mut counter = 0usize;
        self.alpha_rec(&BTreeMap::new(), &mut counter)
    }

    fn alpha_rec(&self, renames: &BTreeMap<Var, Var>, counter: &mut usize) -> Formula {
        let rn_term = |t: &Term| -> Term {
            match t {
                Term::Var(v) => Term::Var(renames.get(v).cloned().unwrap_or_else(|| v.clone())),
                Term::Const(_) => t.clone(),
            }
        };
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Pred(name, args) => {
                Formula::Pred(name.clone(), args.iter().map(rn_term).collect())
            }
            Formula::Eq(a, b) => Formula::Eq(rn_term(a), rn_term(b)),
            Formula::Not(f) => Formula::not(f.alpha_rec(renames, counter)),
            Formula::And(a, b) => {
                Formula::raw_and(a.alpha_rec(renames, counter), b.alpha_rec(renames, counter))
            }
            Formula::Or(a, b) => {
                Formula::raw_or(a.alpha_rec(renames, counter), b.alpha_rec(renames, counter))
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                *counter += 1;
                let fresh = Var::new(&format!(".b{counter}"));
                let mut inner = renames.clone();
                inner.insert(v.clone(), fresh.clone());
                let body = f.alpha_rec(&inner, counter);
                if matches!(self, Formula::Exists(..)) {
                    Formula::exists(fresh, body)
                } else {
                    Formula::forall(fresh, body)
                }
            }
        }
    }

    /// Structural size per the standard measure: atoms count their
    /// arguments, connectives one, quantifiers two.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False => 1,
            Formula::Pred(_, args) => 1 + args.len(),
            Formula::Eq(..) => 3,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
            Formula::Exists(_, f) | Formula::Forall(_, f) => 2 + f.size(),
        }
    }
}

/// Picks a variable similar to `base` that does not occur in `taken`.
pub(crate) fn fresh_var(base: &Var, taken: &BTreeSet<Var>) -> Var {
    let mut i = 0usize;
    loop {
        let cand = Var::new(&format!("{}_{i}", base.as_str()));
        if !taken.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Formula {
    // Precedence: OR = 1, AND = 2, NOT = 3; quantifiers extend maximally.
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::True => f.write_str("TRUE"),
            Formula::False => f.write_str("FALSE"),
            Formula::Pred(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(inner) => {
                f.write_str("NOT ")?;
                inner.fmt_prec(f, 3)
            }
            Formula::And(a, b) => {
                let parens = prec > 2;
                if parens {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 3)?;
                f.write_str(" AND ")?;
                b.fmt_prec(f, 3)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::Or(a, b) => {
                let parens = prec > 1;
                if parens {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 2)?;
                f.write_str(" OR ")?;
                b.fmt_prec(f, 2)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::Exists(v, inner) | Formula::Forall(v, inner) => {
                let parens = prec > 0;
                if parens {
                    f.write_str("(")?;
                }
                let kw = if matches!(self, Formula::Exists(..)) {
                    "EXISTS"
                } else {
                    "FORALL"
                };
                write!(f, "{kw} {v}. ")?;
                inner.fmt_prec(f, 0)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A query `{x̄ | φ}` with `free(φ) = set(x̄)`. Boolean queries have an
/// empty head. Construction canonicalizes the head to fresh column
/// variables `c01, c02, …` so the head is always in `⪯_var` order while the
/// declared column order is preserved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Query {
    pub head: Vec<Var>,
    pub body: Formula,
}

impl Query {
    /// Builds a query, renaming `head` positionally to canonical column
    /// variables. Fails if `free(body) ≠ set(head)` or the head repeats a
    /// variable.
    pub fn new(head: Vec<Var>, body: Formula) -> Result<Self, super::RcError> {
        let head_set: BTreeSet<Var> = head.iter().cloned().collect();
        if head_set.len() != head.len() || body.free_vars() != head_set {
            return Err(super::RcError::HeadMismatch);
        }
        let canon_head: Vec<Var> = (0..head.len()).map(|i| Var::numbered("c", i)).collect();
        let map: BTreeMap<Var, Term> = head
            .iter()
            .zip(canon_head.iter())
            .map(|(old, new)| (old.clone(), Term::Var(new.clone())))
            .collect();
        Ok(Query {
            head: canon_head,
            body: body.substitute(&map),
        })
    }

    /// A boolean query from a sentence.
    pub fn boolean(body: Formula) -> Result<Self, super::RcError> {
        Query::new(Vec::new(), body)
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    /// The body with the head bound to the given terms.
    pub fn instantiate(&self, args: &[Term]) -> Formula {
        debug_assert_eq!(args.len(), self.head.len());
        let map: BTreeMap<Var, Term> = self
            .head
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        self.body.substitute(&map)
    }

    /// Structural identity modulo bound-variable names.
    pub fn alpha_eq(&self, other: &Query) -> bool {
        self.head.len() == other.head.len()
            && self.body.alpha_canonical() == other.body.alpha_canonical()
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, " | {}}}", self.body)
    }
}
