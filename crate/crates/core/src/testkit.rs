//! Seeded random generators for configurations, initial states, formulas,
//! and runs. Shared by the property and acceptance suites; sizes are kept
//! small enough for the enumeration oracles.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::prelude::*;
pub use rand_chacha::ChaCha8Rng;

use crate::kernel::{
    execute, Action, Grant, GrantOp, Pdp, Privilege, Run, SystemConfig, SystemState, TplTerm,
    TriggerDef, TriggerEvent, TriggerStmt, ADMIN,
};
use crate::rc::{
    is_allowed, Constraint, ConstraintKind, DatabaseState, Formula, Mode, Name, Query, Schema,
    Term, Value, Var, View,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size knobs for generated scenarios.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_tables: usize,
    pub max_arity: usize,
    pub domain_size: usize,
    pub max_constraints: usize,
    pub steps: usize,
    /// Keep the total number of possible tuples small enough for the
    /// enumeration oracles.
    pub max_tuple_slots: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_tables: 3,
            max_arity: 2,
            domain_size: 3,
            max_constraints: 2,
            steps: 8,
            max_tuple_slots: 14,
        }
    }
}

const TABLE_NAMES: [&str; 3] = ["tr", "ts", "tt"];
const USER_NAMES: [&str; 2] = ["u1", "u2"];

pub fn gen_system_config(r: &mut ChaCha8Rng, g: &GenConfig) -> Arc<SystemConfig> {
    let domain_size = r.gen_range(2..=g.domain_size.max(2));
    let domain: Vec<Value> = (0..domain_size)
        .map(|i| Value::from(format!("d{i}")))
        .collect();
    let n_tables = r.gen_range(1..=g.max_tables);
    let mut tables = Vec::new();
    let mut slots = 0usize;
    for name in TABLE_NAMES.iter().take(n_tables) {
        let arity = r.gen_range(1..=g.max_arity);
        let cost = domain_size.pow(arity as u32);
        if slots + cost > g.max_tuple_slots && !tables.is_empty() {
            break;
        }
        slots += cost;
        tables.push((Name::from(*name), arity));
    }
    let schema = Schema::new(tables.clone(), domain).expect("generated schema");
    let mut constraints = Vec::new();
    let n_constraints = r.gen_range(0..=g.max_constraints);
    for k in 0..n_constraints {
        let choice = r.gen_range(0..2);
        if choice == 0 {
            // A key-style dependency on some binary table.
            let binary: Vec<&(Name, usize)> = tables.iter().filter(|(_, a)| *a == 2).collect();
            if let Some((t, _)) = binary.choose(r) {
                constraints.push(Constraint {
                    id: format!("c{k}").into(),
                    kind: ConstraintKind::Fd {
                        table: t.clone(),
                        determinant: vec![0],
                        dependent: vec![1],
                    },
                });
            }
        } else if tables.len() >= 2 {
            let i = r.gen_range(0..tables.len());
            let mut j = r.gen_range(0..tables.len());
            if i == j {
                j = (j + 1) % tables.len();
            }
            let (from, fa) = &tables[i];
            let (to, ta) = &tables[j];
            let prefix = 1usize.min(*fa).min(*ta);
            if prefix >= 1 {
                constraints.push(Constraint {
                    id: format!("c{k}").into(),
                    kind: ConstraintKind::Id {
                        from: from.clone(),
                        to: to.clone(),
                        prefix,
                    },
                });
            }
        }
    }
    constraints.dedup_by(|a, b| a.kind == b.kind);
    Arc::new(SystemConfig::new(schema, constraints).expect("generated constraints"))
}

pub fn gen_db(r: &mut ChaCha8Rng, config: &SystemConfig) -> DatabaseState {
    let mut db = DatabaseState::empty(&config.schema);
    let domain: Vec<Value> = config.schema.domain().iter().cloned().collect();
    for (table, arity) in config.schema.tables() {
        let n = r.gen_range(0..=2);
        for _ in 0..n {
            let tuple: Vec<Value> = (0..arity)
                .map(|_| domain.choose(r).expect("domain").clone())
                .collect();
            let candidate = crate::rc::apply_update(
                &config.schema,
                &db,
                crate::rc::UpdateOp::Insert,
                table,
                &tuple,
            )
            .expect("generated tuple");
            if crate::rc::violated(&candidate, &config.constraints).is_empty() {
                db = candidate;
            }
        }
    }
    db
}

fn all_privileges(config: &SystemConfig) -> Vec<Privilege> {
    let mut out = vec![Privilege::CreateView];
    for (t, _) in config.schema.tables() {
        out.push(Privilege::Select(t.clone()));
        out.push(Privilege::Insert(t.clone()));
        out.push(Privilege::Delete(t.clone()));
        out.push(Privilege::CreateTrigger(t.clone()));
    }
    out
}

pub fn gen_initial_state(r: &mut ChaCha8Rng, config: Arc<SystemConfig>) -> SystemState {
    let db = gen_db(r, &config);
    let mut users: BTreeSet<Name> = BTreeSet::new();
    users.insert(ADMIN.into());
    let n_users = r.gen_range(1..=USER_NAMES.len());
    for u in USER_NAMES.iter().take(n_users) {
        users.insert((*u).into());
    }
    let mut sec = BTreeSet::new();
    for u in &users {
        if u.as_str() == ADMIN {
            continue;
        }
        for p in all_privileges(&config) {
            if r.gen_bool(0.45) {
                let op = if r.gen_bool(0.35) {
                    GrantOp::WithGrantOption
                } else {
                    GrantOp::Plain
                };
                sec.insert(Grant {
                    op,
                    grantee: u.clone(),
                    privilege: p,
                    grantor: ADMIN.into(),
                });
            }
        }
    }
    SystemState::initial(config, db, users, sec, Vec::new(), Vec::new())
        .expect("generated initial state")
}

/// A small allowed sentence over the state's tables: a boolean combination
/// of ground atoms and projection sentences.
pub fn gen_sentence(r: &mut ChaCha8Rng, state: &SystemState) -> Formula {
    let config = &state.config;
    let depth = r.gen_range(0..=2);
    gen_sentence_depth(r, config, depth)
}

fn gen_sentence_depth(r: &mut ChaCha8Rng, config: &SystemConfig, depth: usize) -> Formula {
    if depth == 0 {
        let tables: Vec<(Name, usize)> = config
            .schema
            .tables()
            .map(|(n, a)| (n.clone(), a))
            .collect();
        let (table, arity) = tables.choose(r).expect("tables").clone();
        let domain: Vec<Value> = config.schema.domain().iter().cloned().collect();
        if r.gen_bool(0.5) {
            // Ground atom.
            let args: Vec<Term> = (0..arity)
                .map(|_| Term::Const(domain.choose(r).expect("domain").clone()))
                .collect();
            Formula::pred(table, args)
        } else {
            // One-variable projection: ∃x,… . R(…)
            let keep = r.gen_range(0..arity);
            let vars: Vec<Var> = (0..arity).map(|i| Var::numbered("g", i)).collect();
            let args: Vec<Term> = (0..arity)
                .map(|i| {
                    if i == keep {
                        Term::Const(domain.choose(r).expect("domain").clone())
                    } else {
                        Term::Var(vars[i].clone())
                    }
                })
                .collect();
            let mut f = Formula::pred(table, args);
            for (i, v) in vars.into_iter().enumerate().rev() {
                if i != keep {
                    f = Formula::exists(v, f);
                }
            }
            f
        }
    } else {
        let a = gen_sentence_depth(r, config, depth - 1);
        let b = gen_sentence_depth(r, config, depth - 1);
        match r.gen_range(0..3) {
            0 => Formula::raw_and(a, b),
            1 => Formula::raw_or(a, b),
            _ => Formula::not(a),
        }
    }
}

/// A small allowed non-boolean query usable as a view definition.
pub fn gen_query(r: &mut ChaCha8Rng, state: &SystemState) -> Option<Query> {
    let objects: Vec<(Name, usize)> = state
        .config
        .schema
        .tables()
        .map(|(n, a)| (n.clone(), a))
        .chain(state.views.iter().map(|v| (v.id.clone(), v.arity())))
        .collect();
    let (obj, arity) = objects.choose(r)?.clone();
    let vars: Vec<Var> = (0..arity).map(|i| Var::numbered("v", i)).collect();
    let atom = Formula::pred(obj, vars.iter().cloned().map(Term::Var).collect());
    let body = if r.gen_bool(0.3) {
        // Conjoin a second atom over shared variables when arities match.
        let (obj2, arity2) = objects.choose(r)?.clone();
        if arity2 == arity {
            Formula::raw_and(
                atom.clone(),
                Formula::pred(obj2, vars.iter().cloned().map(Term::Var).collect()),
            )
        } else {
            atom
        }
    } else {
        atom
    };
    if r.gen_bool(0.4) && arity > 1 {
        // Project a column away.
        let head: Vec<Var> = vars[1..].to_vec();
        let body = Formula::exists(vars[0].clone(), body);
        if !is_allowed(&body) {
            return None;
        }
        Query::new(head, body).ok()
    } else {
        if !is_allowed(&body) {
            return None;
        }
        Query::new(vars, body).ok()
    }
}

fn gen_trigger(
    r: &mut ChaCha8Rng,
    state: &SystemState,
    owner: &Name,
    tag: usize,
) -> Option<TriggerDef> {
    let tables: Vec<(Name, usize)> = state
        .config
        .schema
        .tables()
        .map(|(n, a)| (n.clone(), a))
        .collect();
    let (on_table, on_arity) = tables.choose(r)?.clone();
    let event = if r.gen_bool(0.5) {
        TriggerEvent::Insert
    } else {
        TriggerEvent::Delete
    };
    let domain: Vec<Value> = state.config.schema.domain().iter().cloned().collect();
    // The condition tests the fired value's membership in some table, or
    // is plain truth.
    let condition = if r.gen_bool(0.5) {
        Formula::True
    } else {
        let (cond_table, cond_arity) = tables.choose(r)?.clone();
        let args: Vec<Term> = (0..cond_arity)
            .map(|i| {
                if i == 0 {
                    Term::Var(crate::kernel::trigger_var(r.gen_range(0..on_arity)))
                } else {
                    Term::Const(domain.choose(r).expect("domain").clone())
                }
            })
            .collect();
        Formula::pred(cond_table, args)
    };
    let stmt = match r.gen_range(0..3) {
        0 | 1 => {
            let (target, target_arity) = tables.choose(r)?.clone();
            let tuple: Vec<TplTerm> = (0..target_arity)
                .map(|_| {
                    if r.gen_bool(0.5) {
                        TplTerm::Fired(r.gen_range(0..on_arity))
                    } else {
                        TplTerm::Const(domain.choose(r).expect("domain").clone())
                    }
                })
                .collect();
            if r.gen_bool(0.5) {
                TriggerStmt::Insert {
                    table: target,
                    tuple,
                }
            } else {
                TriggerStmt::Delete {
                    table: target,
                    tuple,
                }
            }
        }
        _ => {
            let grantee = state.users.iter().choose(r)?.clone();
            let privilege = all_privileges(&state.config).into_iter().choose(r)?;
            if r.gen_bool(0.5) {
                TriggerStmt::Grant {
                    op: GrantOp::Plain,
                    grantee,
                    privilege,
                }
            } else {
                TriggerStmt::Revoke { grantee, privilege }
            }
        }
    };
    Some(TriggerDef {
        id: format!("tg{tag}").into(),
        owner: owner.clone(),
        event,
        table: on_table,
        condition,
        stmt,
        mode: if r.gen_bool(0.5) {
            Mode::Activator
        } else {
            Mode::Owner
        },
        seq: 0,
    })
}

/// A random applicable action for the current state, or `None` when the
/// sampled shape is not applicable.
fn gen_action(r: &mut ChaCha8Rng, state: &SystemState, tag: usize) -> Option<Action> {
    let users: Vec<Name> = state.users.iter().cloned().collect();
    let user = users.choose(r)?.clone();
    let tables: Vec<(Name, usize)> = state
        .config
        .schema
        .tables()
        .map(|(n, a)| (n.clone(), a))
        .collect();
    let domain: Vec<Value> = state.config.schema.domain().iter().cloned().collect();
    match r.gen_range(0..10) {
        0..=2 => {
            let (table, arity) = tables.choose(r)?.clone();
            let tuple: Vec<Value> = (0..arity)
                .map(|_| domain.choose(r).expect("domain").clone())
                .collect();
            Some(if r.gen_bool(0.5) {
                Action::Insert { user, table, tuple }
            } else {
                Action::Delete { user, table, tuple }
            })
        }
        3..=4 => {
            let query = gen_sentence(r, state);
            is_allowed(&query).then_some(Action::Select { user, query })
        }
        5 => {
            let grantee = users.choose(r)?.clone();
            let privilege = {
                let mut pool = all_privileges(&state.config);
                for v in &state.views {
                    pool.push(Privilege::Select(v.id.clone()));
                }
                pool.into_iter().choose(r)?
            };
            let op = if r.gen_bool(0.3) {
                GrantOp::WithGrantOption
            } else {
                GrantOp::Plain
            };
            Some(Action::Grant {
                op,
                grantee,
                privilege,
                grantor: user,
            })
        }
        6 => {
            let grantee = users.choose(r)?.clone();
            let privilege = {
                let mut pool = all_privileges(&state.config);
                for v in &state.views {
                    pool.push(Privilege::Select(v.id.clone()));
                }
                pool.into_iter().choose(r)?
            };
            Some(Action::Revoke {
                grantee,
                privilege,
                revoker: user,
            })
        }
        7 => {
            let trigger = gen_trigger(r, state, &user, tag)?;
            // Keep the combined trigger set safe and the id fresh.
            let mut all = state.triggers.clone();
            all.push(trigger.clone());
            if !crate::kernel::safe(&all) || state.triggers.iter().any(|t| t.id == trigger.id) {
                return None;
            }
            Some(Action::CreateTrigger {
                issuer: user,
                trigger,
            })
        }
        8 => {
            let query = gen_query(r, state)?;
            let id: Name = format!("vw{tag}").into();
            if state.views.iter().any(|v| v.id == id) {
                return None;
            }
            Some(Action::CreateView {
                issuer: user.clone(),
                view: View {
                    id,
                    owner: user,
                    query,
                    mode: if r.gen_bool(0.5) {
                        Mode::Activator
                    } else {
                        Mode::Owner
                    },
                },
            })
        }
        _ => {
            let fresh: Name = format!("nu{tag}").into();
            if state.users.contains(&fresh) {
                return None;
            }
            Some(Action::AddUser {
                issuer: user,
                user: fresh,
            })
        }
    }
}

/// A random run of at most `g.steps` user actions under the given
/// decision point, automatically firing triggers.
pub fn gen_run(r: &mut ChaCha8Rng, g: &GenConfig, pdp: &dyn Pdp) -> Run {
    let config = gen_system_config(r, g);
    let initial = gen_initial_state(r, config);
    let mut actions = Vec::new();
    let mut state = initial.clone();
    let steps = r.gen_range(1..=g.steps);
    let mut tag = 0usize;
    while actions.len() < steps && tag < steps * 6 {
        tag += 1;
        let Some(action) = gen_action(r, &state, tag) else {
            continue;
        };
        match execute(state.clone(), [action.clone()], pdp) {
            Ok(run) => {
                state = run.last().clone();
                actions.push(action);
            }
            Err(_) => continue,
        }
    }
    execute(initial, actions, pdp).expect("validated actions")
}

/// Brute-force semantic equivalence: the two formulas agree on every
/// constraint-satisfying database over the declared domain, under every
/// assignment of domain values to their free variables.
pub fn equivalent_on_all_states(
    schema: &Schema,
    constraints: &[Constraint],
    views: &[View],
    a: &Formula,
    b: &Formula,
) -> bool {
    let env = crate::rc::ViewEnv::of(views.iter());
    let mut universe: Vec<Value> = schema.domain().iter().cloned().collect();
    for c in a.constants().into_iter().chain(b.constants()) {
        if !universe.contains(&c) {
            universe.push(c);
        }
    }
    let mut free: Vec<Var> = a.free_vars().into_iter().collect();
    for v in b.free_vars() {
        if !free.contains(&v) {
            free.push(v);
        }
    }
    let mut ok = true;
    crate::attacker::enumerate_db_states(
        schema,
        constraints,
        &std::collections::BTreeMap::new(),
        &mut |db| {
            for nu in assignments(&free, &universe) {
                let va = crate::rc::eval_over(db, a, &nu, &env, &universe);
                let vb = crate::rc::eval_over(db, b, &nu, &env, &universe);
                match (va, vb) {
                    (Ok(x), Ok(y)) if x == y => {}
                    _ => {
                        ok = false;
                        return false;
                    }
                }
            }
            true
        },
    );
    ok
}

/// Brute-force query containment: on every constraint-satisfying database
/// over the declared domain, the answer set of `{sorted-free | a}` is a
/// subset of the answer set of `{sorted-free | b}`.
pub fn contained_on_all_states(
    schema: &Schema,
    constraints: &[Constraint],
    views: &[View],
    a: &Formula,
    b: &Formula,
) -> bool {
    let env = crate::rc::ViewEnv::of(views.iter());
    let universe: Vec<Value> = schema.domain().iter().cloned().collect();
    let qa = Query::new(a.free_vars().into_iter().collect(), a.clone());
    let qb = Query::new(b.free_vars().into_iter().collect(), b.clone());
    let (Ok(qa), Ok(qb)) = (qa, qb) else {
        return false;
    };
    let mut ok = true;
    crate::attacker::enumerate_db_states(
        schema,
        constraints,
        &std::collections::BTreeMap::new(),
        &mut |db| {
            let ra = crate::rc::eval_query_over(db, &qa, &env, &universe);
            let rb = crate::rc::eval_query_over(db, &qb, &env, &universe);
            match (ra, rb) {
                (Ok(x), Ok(y)) if x.is_subset(&y) => true,
                _ => {
                    ok = false;
                    false
                }
            }
        },
    );
    ok
}

/// All assignments of universe values to the given variables.
pub fn assignments(
    vars: &[Var],
    universe: &[Value],
) -> Vec<std::collections::BTreeMap<Var, Value>> {
    let mut out = vec![std::collections::BTreeMap::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|nu| {
                universe.iter().map(move |val| {
                    let mut nu2 = nu.clone();
                    nu2.insert(v.clone(), val.clone());
                    nu2
                })
            })
            .collect();
    }
    out
}

/// A non-admin user present in the run's initial state, preferring one
/// that actually issued actions.
pub fn pick_attacker(run: &Run) -> Name {
    for label in &run.labels {
        if let crate::kernel::Label::Act(a) = label {
            if a.issuer().as_str() != ADMIN {
                return a.issuer().clone();
            }
        }
    }
    run.state(1)
        .users
        .iter()
        .find(|u| u.as_str() != ADMIN)
        .cloned()
        .unwrap_or_else(|| ADMIN.into())
}
