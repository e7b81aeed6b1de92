use std::collections::{BTreeMap, BTreeSet};

use super::formula::{Formula, Query};
use super::schema::{Mode, Name, View};
use super::RcError;

/// Fails if the view dependency graph has a cycle.
pub fn check_acyclic<'a>(views: impl IntoIterator<Item = &'a View>) -> Result<(), RcError> {
    let views: Vec<&View> = views.into_iter().collect();
    let by_id: BTreeMap<&Name, &View> = views.iter().map(|v| (&v.id, *v)).collect();
    for v in &views {
        let mut seen = BTreeSet::new();
        if has_cycle(v, &by_id, &mut seen) {
            return Err(RcError::CyclicViews(v.id.clone()));
        }
    }
    Ok(())
}

fn has_cycle<'a>(
    v: &'a View,
    by_id: &BTreeMap<&Name, &'a View>,
    path: &mut BTreeSet<Name>,
) -> bool {
    if !path.insert(v.id.clone()) {
        return true;
    }
    for p in v.query.body.predicates() {
        if let Some(dep) = by_id.get(&p) {
            if has_cycle(dep, by_id, path) {
                return true;
            }
        }
    }
    path.remove(&v.id);
    false
}

/// Replaces view atoms by their definitions until no view atom remains.
/// The views must be acyclic.
pub fn inline_views<'a>(
    phi: &Formula,
    views: impl IntoIterator<Item = &'a View>,
) -> Result<Formula, RcError> {
    let by_id: BTreeMap<Name, &View> = views.into_iter().map(|v| (v.id.clone(), v)).collect();
    let mut current = phi.clone();
    for _ in 0..=by_id.len() {
        let (next, changed) = inline_once(&current, &by_id)?;
        if !changed {
            return Ok(next);
        }
        current = next;
    }
    // Acyclic definitions stabilize within |views| rounds.
    Err(RcError::CyclicViews(
        by_id.keys().next().cloned().unwrap_or_else(|| "?".into()),
    ))
}

fn inline_once(phi: &Formula, by_id: &BTreeMap<Name, &View>) -> Result<(Formula, bool), RcError> {
    Ok(match phi {
        Formula::Pred(name, args) => {
            if let Some(view) = by_id.get(name) {
                if view.arity() != args.len() {
                    return Err(RcError::ArityMismatch(
                        name.clone(),
                        view.arity(),
                        args.len(),
                    ));
                }
                (view.query.instantiate(args), true)
            } else {
                (phi.clone(), false)
            }
        }
        Formula::True | Formula::False | Formula::Eq(..) => (phi.clone(), false),
        Formula::Not(f) => {
            let (inner, ch) = inline_once(f, by_id)?;
            (Formula::not(inner), ch)
        }
        Formula::And(a, b) => {
            let (na, ca) = inline_once(a, by_id)?;
            let (nb, cb) = inline_once(b, by_id)?;
            (Formula::raw_and(na, nb), ca || cb)
        }
        Formula::Or(a, b) => {
            let (na, ca) = inline_once(a, by_id)?;
            let (nb, cb) = inline_once(b, by_id)?;
            (Formula::raw_or(na, nb), ca || cb)
        }
        Formula::Exists(v, f) => {
            let (inner, ch) = inline_once(f, by_id)?;
            (Formula::exists(v.clone(), inner), ch)
        }
        Formula::Forall(v, f) => {
            let (inner, ch) = inline_once(f, by_id)?;
            (Formula::forall(v.clone(), inner), ch)
        }
    })
}

/// Replaces a single view's atoms by its definition, one step (no
/// fixpoint). Arity mismatches cannot arise on bound formulas, so this is
/// total.
pub fn inline_step(phi: &Formula, view: &View) -> Formula {
    let mut map = BTreeMap::new();
    map.insert(view.id.clone(), view);
    inline_once(phi, &map)
        .map(|(f, _)| f)
        .unwrap_or_else(|_| phi.clone())
}

/// Eliminates views with activator's privileges: every mode-A view atom in
/// the formula and in the remaining view bodies is replaced by its
/// definition; mode-A views are dropped from the returned set. Returns the
/// rewritten formula, the surviving (mode-O) views, and the set of dropped
/// view names so the caller can filter its policy.
pub fn eliminate_activator_views<'a>(
    phi: &Formula,
    views: impl IntoIterator<Item = &'a View>,
) -> Result<(Formula, Vec<View>, BTreeSet<Name>), RcError> {
    let all: Vec<&View> = views.into_iter().collect();
    let activator: Vec<&View> = all
        .iter()
        .copied()
        .filter(|v| v.mode == Mode::Activator)
        .collect();
    let dropped: BTreeSet<Name> = activator.iter().map(|v| v.id.clone()).collect();
    let phi2 = inline_subset(phi, &activator)?;
    let mut survivors = Vec::new();
    for v in all.iter().filter(|v| v.mode == Mode::Owner) {
        let body2 = inline_subset(&v.query.body, &activator)?;
        let query = Query::new(v.query.head.clone(), body2)?;
        survivors.push(View {
            id: v.id.clone(),
            owner: v.owner.clone(),
            query,
            mode: Mode::Owner,
        });
    }
    Ok((phi2, survivors, dropped))
}

fn inline_subset(phi: &Formula, subset: &[&View]) -> Result<Formula, RcError> {
    let by_id: BTreeMap<Name, &View> = subset.iter().map(|v| (v.id.clone(), *v)).collect();
    let mut current = phi.clone();
    for _ in 0..=by_id.len() {
        let (next, changed) = inline_once(&current, &by_id)?;
        if !changed {
            return Ok(next);
        }
        current = next;
    }
    Err(RcError::CyclicViews(
        by_id.keys().next().cloned().unwrap_or_else(|| "?".into()),
    ))
}
