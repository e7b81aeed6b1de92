use std::collections::BTreeSet;

use super::formula::{fresh_var, Formula, Term, Var};
use super::schema::Schema;
use super::RcError;

/// Lifts constants out of predicate atoms via fresh existentials and
/// equalities, and alpha-renames so bound-variable names are unique. The
/// result is equivalent to the input on every database state.
pub fn normalize(phi: &Formula, schema: &Schema) -> Result<Formula, RcError> {
    check_arities(phi, schema)?;
    let lifted = lift_constants(phi);
    Ok(lifted.alpha_canonical())
}

fn check_arities(phi: &Formula, schema: &Schema) -> Result<(), RcError> {
    match phi {
        Formula::Pred(name, args) => {
            // Views and extended-vocabulary predicates are not in the schema;
            // their arities are checked where they are introduced.
            if let Some(arity) = schema.arity(name) {
                if args.len() != arity {
                    return Err(RcError::ArityMismatch(name.clone(), arity, args.len()));
                }
            }
            Ok(())
        }
        Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => check_arities(f, schema),
        Formula::And(a, b) | Formula::Or(a, b) => {
            check_arities(a, schema)?;
            check_arities(b, schema)
        }
        _ => Ok(()),
    }
}

fn lift_constants(phi: &Formula) -> Formula {
    match phi {
        Formula::Pred(name, args) if args.iter().any(|t| matches!(t, Term::Const(_))) => {
            let taken: BTreeSet<Var> = args.iter().filter_map(|t| t.as_var().cloned()).collect();
            let mut fresh = Vec::new();
            let mut new_args = Vec::with_capacity(args.len());
            let mut eqs = Vec::new();
            for (i, t) in args.iter().enumerate() {
                match t {
                    Term::Var(_) => new_args.push(t.clone()),
                    Term::Const(c) => {
                        let v = fresh_var(&Var::numbered("k", i), &taken);
                        eqs.push(Formula::eq(Term::Var(v.clone()), Term::Const(c.clone())));
                        new_args.push(Term::Var(v.clone()));
                        fresh.push(v);
                    }
                }
            }
            let mut body = Formula::Pred(name.clone(), new_args);
            for e in eqs {
                body = Formula::raw_and(body, e);
            }
            for v in fresh.into_iter().rev() {
                body = Formula::exists(v, body);
            }
            body
        }
        Formula::Pred(..) | Formula::Eq(..) | Formula::True | Formula::False => phi.clone(),
        Formula::Not(f) => Formula::not(lift_constants(f)),
        Formula::And(a, b) => Formula::raw_and(lift_constants(a), lift_constants(b)),
        Formula::Or(a, b) => Formula::raw_or(lift_constants(a), lift_constants(b)),
        Formula::Exists(v, f) => Formula::exists(v.clone(), lift_constants(f)),
        Formula::Forall(v, f) => Formula::forall(v.clone(), lift_constants(f)),
    }
}

/// Pushes one negation inward: De Morgan on connectives, quantifier
/// dualization, double-negation elimination. Defined on negations only;
/// other formulas are returned unchanged.
pub fn push_negation(phi: &Formula) -> Formula {
    match phi {
        Formula::Not(inner) => match &**inner {
            Formula::And(a, b) => {
                Formula::raw_or(Formula::not((**a).clone()), Formula::not((**b).clone()))
            }
            Formula::Or(a, b) => {
                Formula::raw_and(Formula::not((**a).clone()), Formula::not((**b).clone()))
            }
            Formula::Exists(v, f) => Formula::forall(v.clone(), Formula::not((**f).clone())),
            Formula::Forall(v, f) => Formula::exists(v.clone(), Formula::not((**f).clone())),
            Formula::Not(f) => (**f).clone(),
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            other => Formula::not(other.clone()),
        },
        other => other.clone(),
    }
}

/// `gen(x, φ)`: the variable is generated by the formula. Computable subset
/// of the Van Gelder–Topor relation: predicate occurrence, equality with a
/// constant, disjunction (both sides), conjunction (either side),
/// quantifiers over other variables, and negation via `push_negation`.
pub fn gen(x: &Var, phi: &Formula) -> bool {
    match phi {
        Formula::Pred(_, args) => args.iter().any(|t| t.as_var() == Some(x)),
        Formula::Eq(a, b) => {
            matches!((a, b), (Term::Var(v), Term::Const(_)) if v == x)
                || matches!((a, b), (Term::Const(_), Term::Var(v)) if v == x)
        }
        Formula::Or(a, b) => gen(x, a) && gen(x, b),
        Formula::And(a, b) => gen(x, a) || gen(x, b),
        Formula::Exists(v, f) | Formula::Forall(v, f) => v != x && gen(x, f),
        Formula::Not(_) => {
            let pushed = push_negation(phi);
            if pushed == *phi {
                false
            } else {
                gen(x, &pushed)
            }
        }
        Formula::True | Formula::False => false,
    }
}

/// Whether the formula is allowed (safe range): `gen` holds for every free
/// variable, for every subformula `∃x.ψ` `gen(x, ψ)` holds, and for every
/// `∀x.ψ` `gen(x, ¬ψ)` holds. Allowed formulas are domain independent.
/// Constants inside predicate atoms are lifted before the check.
pub fn is_allowed(phi: &Formula) -> bool {
    let phi = lift_constants(phi);
    phi.free_vars().iter().all(|x| gen(x, &phi)) && quantifiers_ok(&phi)
}

fn quantifiers_ok(phi: &Formula) -> bool {
    match phi {
        Formula::True | Formula::False | Formula::Pred(..) | Formula::Eq(..) => true,
        Formula::Not(f) => quantifiers_ok(f),
        Formula::And(a, b) | Formula::Or(a, b) => quantifiers_ok(a) && quantifiers_ok(b),
        Formula::Exists(v, f) => gen(v, f) && quantifiers_ok(f),
        Formula::Forall(v, f) => gen(v, &Formula::not((**f).clone())) && quantifiers_ok(f),
    }
}
