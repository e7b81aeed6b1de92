use std::collections::BTreeMap;

use thiserror::Error;

use crate::authz::permissions;
use crate::kernel::Run;
use crate::rc::{
    eval_over, eval_query_over, Assignment, Constraint, DatabaseState, Formula, Mode, Name, Schema,
    Tuple, Value,
};

#[derive(Debug, Clone, Error)]
pub enum OracleError {
    #[error("state space of {bits} tuple slots exceeds the cap of {cap}")]
    CapExceeded { bits: u32, cap: u32 },
    #[error("evaluation failed: {0}")]
    Eval(String),
}

/// Enumerates every constraint-satisfying database state over the declared
/// domain whose `fixed` tables have exactly the given contents. The
/// visitor returns `false` to stop early. Enumeration order is
/// deterministic. Panics beyond a hard slot cap, which indicates a harness
/// bug rather than an in-model outcome.
pub fn enumerate_db_states(
    schema: &Schema,
    constraints: &[Constraint],
    fixed: &BTreeMap<Name, Vec<Tuple>>,
    visit: &mut dyn FnMut(&DatabaseState) -> bool,
) {
    let slots = free_slots(schema, fixed);
    let bits: u32 = slots.iter().map(|(_, tuples)| tuples.len() as u32).sum();
    assert!(
        bits <= 26,
        "state enumeration over {bits} tuple slots is out of scope"
    );
    let mut base = DatabaseState::empty(schema);
    for (table, rows) in fixed {
        for row in rows {
            base.insert(schema, table, row.clone()).expect("fixed rows");
        }
    }
    let total: u64 = 1u64 << bits;
    'outer: for mask in 0..total {
        let mut db = base.clone();
        let mut offset = 0u32;
        for (table, tuples) in &slots {
            for (k, tuple) in tuples.iter().enumerate() {
                if mask & (1u64 << (offset + k as u32)) != 0 {
                    db.insert(schema, table, tuple.clone())
                        .expect("domain tuple");
                }
            }
            offset += tuples.len() as u32;
        }
        if crate::rc::violated(&db, constraints).is_empty() && !visit(&db) {
            break 'outer;
        }
    }
}

fn free_slots(schema: &Schema, fixed: &BTreeMap<Name, Vec<Tuple>>) -> Vec<(Name, Vec<Tuple>)> {
    let mut out = Vec::new();
    for (table, arity) in schema.tables() {
        if fixed.contains_key(table) {
            continue;
        }
        out.push((table.clone(), all_tuples(schema, arity)));
    }
    out
}

fn all_tuples(schema: &Schema, arity: usize) -> Vec<Tuple> {
    let domain: Vec<Value> = schema.domain().iter().cloned().collect();
    let mut out: Vec<Tuple> = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                domain.iter().map(move |v| {
                    let mut t2 = t.clone();
                    t2.push(v.clone());
                    t2
                })
            })
            .collect();
    }
    out
}

/// The brute-force security oracle: enumerates every database state over
/// the declared domain that satisfies the constraints and is
/// data-indistinguishable for `user` from the state at position `i`, and
/// reports whether the sentence is constant across them.
pub fn secure_data_oracle(
    run: &Run,
    i: usize,
    user: &Name,
    phi: &Formula,
    cap: u32,
) -> Result<bool, OracleError> {
    let state = run.state(i);
    let schema = &state.config.schema;
    let readable = permissions(schema, &state.views, &state.sec, user);
    let fixed: BTreeMap<Name, Vec<Tuple>> = schema
        .tables()
        .filter(|(t, _)| readable.contains(*t))
        .map(|(t, _)| {
            (
                t.clone(),
                state
                    .db
                    .rows(t)
                    .map(|rows| rows.iter().cloned().collect())
                    .unwrap_or_default(),
            )
        })
        .collect();
    let bits: u32 = free_slots(schema, &fixed)
        .iter()
        .map(|(_, tuples)| tuples.len() as u32)
        .sum();

    // A sentence whose inlined form mentions only fixed tables has the
    // same value in every enumerated state.
    let inlined = crate::rc::inline_views(phi, state.views.iter())
        .map_err(|e| OracleError::Eval(e.to_string()))?;
    if inlined.predicates().iter().all(|p| fixed.contains_key(p)) {
        return Ok(true);
    }

    if bits > cap {
        return Err(OracleError::CapExceeded { bits, cap });
    }

    let env = state.view_env();
    let mut universe: Vec<Value> = schema.domain().iter().cloned().collect();
    for c in phi.constants() {
        if !universe.contains(&c) {
            universe.push(c);
        }
    }

    // Reference materializations of the readable owner-mode views.
    let readable_views: Vec<&crate::rc::View> = state
        .views
        .iter()
        .filter(|v| v.mode == Mode::Owner && readable.contains(&v.id))
        .collect();
    let mut reference = Vec::new();
    for v in &readable_views {
        reference.push(
            eval_query_over(&state.db, &v.query, &env, &universe)
                .map_err(|e| OracleError::Eval(e.to_string()))?,
        );
    }

    let mut value: Option<bool> = None;
    let mut constant = true;
    let mut failure: Option<OracleError> = None;
    enumerate_db_states(schema, &state.config.constraints, &fixed, &mut |db| {
        for (v, reference_rows) in readable_views.iter().zip(reference.iter()) {
            match eval_query_over(db, &v.query, &env, &universe) {
                Ok(rows) if rows == *reference_rows => {}
                Ok(_) => return true,
                Err(e) => {
                    failure = Some(OracleError::Eval(e.to_string()));
                    return false;
                }
            }
        }
        match eval_over(db, phi, &Assignment::new(), &env, &universe) {
            Ok(v) => match value {
                None => {
                    value = Some(v);
                    true
                }
                Some(prev) if prev == v => true,
                Some(_) => {
                    constant = false;
                    false
                }
            },
            Err(e) => {
                failure = Some(OracleError::Eval(e.to_string()));
                false
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(constant)
}
