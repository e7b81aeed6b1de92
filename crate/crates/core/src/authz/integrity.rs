//! The integrity half of the decision point: a computable
//! under-approximation of the authorized-action relation, built from a
//! syntactic determinacy check, plus a brute-force reference
//! implementation of the full relation used as a testing oracle.

use std::collections::BTreeSet;

use crate::kernel::{
    actual_user, get_action, revoke_cascade, Action, Decision, Grant, GrantOp, Label, Pdp,
    Privilege, SystemState, TriggerDef, ADMIN,
};
use crate::rc::{
    eval, eval_query_over, inline_views, Assignment, Formula, Mode, Name, Query, Value, View,
};

/// A verdict together with the rule that produced it, for traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthzVerdict {
    pub permit: bool,
    pub rule: Option<&'static str>,
}

impl AuthzVerdict {
    fn permit(rule: &'static str) -> Self {
        AuthzVerdict {
            permit: true,
            rule: Some(rule),
        }
    }

    fn deny() -> Self {
        AuthzVerdict {
            permit: false,
            rule: None,
        }
    }
}

fn is_admin(u: &Name) -> bool {
    u.as_str() == ADMIN
}

/// One-step view inlining: every view atom in the definition is replaced
/// by its definition once (no fixpoint).
fn inline_one_step(v: &View, all_views: &[View]) -> View {
    let mut body = v.query.body.clone();
    for w in all_views {
        if w.id == v.id {
            continue;
        }
        body = crate::rc::inline_step(&body, w);
    }
    View {
        id: v.id.clone(),
        owner: v.owner.clone(),
        query: Query::new(v.query.head.clone(), body).expect("inlining preserves free variables"),
        mode: v.mode,
    }
}

/// The closure of a view set under one-step inlining: each returned view
/// discloses the same data as one of the originals.
pub fn extend(state: &SystemState, base: &[View]) -> Vec<View> {
    let mut out: Vec<View> = base.to_vec();
    let mut seen: BTreeSet<(Name, Query)> = base
        .iter()
        .map(|v| (v.id.clone(), v.query.clone()))
        .collect();
    let mut frontier: Vec<View> = base.to_vec();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for v in &frontier {
            let inlined = inline_one_step(v, &state.views);
            if seen.insert((inlined.id.clone(), inlined.query.clone())) {
                out.push(inlined.clone());
                next.push(inlined);
            }
        }
        frontier = next;
    }
    out
}

/// Syntactic, sound under-approximation of query determinacy: do the
/// tables `t_set` and the views `v_set` fix the value of `phi` on every
/// legal database state?
pub fn appr_det(
    t_set: &BTreeSet<Name>,
    v_set: &[View],
    phi: &Formula,
    state: &SystemState,
) -> bool {
    let extended = extend(state, v_set);
    appr_det_rec(t_set, v_set, phi, &extended)
}

fn appr_det_rec(t_set: &BTreeSet<Name>, v_set: &[View], phi: &Formula, extended: &[View]) -> bool {
    // A view of the extended set whose definition matches the formula
    // determines it outright.
    let free: Vec<_> = phi.free_vars().into_iter().collect();
    if !free.is_empty() {
        if let Ok(q) = Query::new(free, phi.clone()) {
            if extended.iter().any(|v| v.query.alpha_eq(&q)) {
                return true;
            }
        }
    }
    match phi {
        Formula::True | Formula::False | Formula::Eq(..) => true,
        Formula::Pred(name, _) => {
            t_set.contains(name) || v_set.iter().any(|v| &v.id == name && v.mode == Mode::Owner)
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            appr_det_rec(t_set, v_set, a, extended) && appr_det_rec(t_set, v_set, b, extended)
        }
        Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => {
            appr_det_rec(t_set, v_set, f, extended)
        }
    }
}

/// The tables the user may read (`Plain`) or delegate read access to
/// (`WithGrantOption`) under the approximate authorization relation.
pub fn at_tables(state: &SystemState, op: GrantOp, user: &Name) -> BTreeSet<Name> {
    at_tables_in(state, op, user, &mut BTreeSet::new())
}

fn at_tables_in(
    state: &SystemState,
    op: GrantOp,
    user: &Name,
    visiting: &mut BTreeSet<Grant>,
) -> BTreeSet<Name> {
    state
        .config
        .schema
        .table_names()
        .filter(|r| readable_object(state, op, user, r, visiting))
        .cloned()
        .collect()
}

/// The owner-mode views the user may read or delegate, likewise.
pub fn av_views(state: &SystemState, op: GrantOp, user: &Name) -> Vec<View> {
    av_views_in(state, op, user, &mut BTreeSet::new())
}

fn av_views_in(
    state: &SystemState,
    op: GrantOp,
    user: &Name,
    visiting: &mut BTreeSet<Grant>,
) -> Vec<View> {
    state
        .views
        .iter()
        .filter(|v| v.mode == Mode::Owner && readable_object(state, op, user, &v.id, visiting))
        .cloned()
        .collect()
}

fn readable_object(
    state: &SystemState,
    op: GrantOp,
    user: &Name,
    object: &Name,
    visiting: &mut BTreeSet<Grant>,
) -> bool {
    let ops: &[GrantOp] = match op {
        GrantOp::WithGrantOption => &[GrantOp::WithGrantOption],
        GrantOp::Plain => &[GrantOp::Plain, GrantOp::WithGrantOption],
    };
    if is_admin(user) {
        for grantor in &state.users {
            for op2 in ops {
                let g = Grant {
                    op: *op2,
                    grantee: user.clone(),
                    privilege: Privilege::Select(object.clone()),
                    grantor: grantor.clone(),
                };
                if grant_derivable(state, &g, visiting) {
                    return true;
                }
            }
        }
        return false;
    }
    state.sec.iter().any(|g| {
        g.grantee == *user
            && g.privilege == Privilege::Select(object.clone())
            && ops.contains(&g.op)
            && grant_derivable(state, g, visiting)
    })
}

fn grant_derivable(state: &SystemState, g: &Grant, visiting: &mut BTreeSet<Grant>) -> bool {
    let action = Action::Grant {
        op: g.op,
        grantee: g.grantee.clone(),
        privilege: g.privilege.clone(),
        grantor: g.grantor.clone(),
    };
    derive_appr_action(state, &action, visiting).is_some()
}

/// Derivability under the approximate authorization rules.
pub fn auth_appr(state: &SystemState, label: &Label) -> AuthzVerdict {
    let res = match label {
        Label::Act(action) => derive_appr_action(state, action, &mut BTreeSet::new()),
        Label::Trig(t) => derive_trigger(state, t, &mut |s, a| {
            derive_appr_action(s, a, &mut BTreeSet::new()).is_some()
        }),
    };
    match res {
        Some(rule) => AuthzVerdict::permit(rule),
        None => AuthzVerdict::deny(),
    }
}

fn derive_appr_action(
    state: &SystemState,
    action: &Action,
    visiting: &mut BTreeSet<Grant>,
) -> Option<&'static str> {
    match action {
        Action::AddUser { issuer, .. } => is_admin(issuer).then_some("add-user"),
        Action::Select { user, .. } => state.users.contains(user).then_some("select"),
        Action::Insert { user, table, .. } | Action::Delete { user, table, .. } => {
            if is_admin(user) {
                return Some("update-admin");
            }
            let wanted = if matches!(action, Action::Insert { .. }) {
                Privilege::Insert(table.clone())
            } else {
                Privilege::Delete(table.clone())
            };
            state
                .sec
                .iter()
                .any(|g| {
                    g.grantee == *user
                        && g.privilege == wanted
                        && grant_derivable(state, g, visiting)
                })
                .then_some("update-granted")
        }
        Action::CreateView { issuer, .. } => {
            if is_admin(issuer) {
                return Some("create-view-admin");
            }
            state
                .sec
                .iter()
                .any(|g| {
                    g.grantee == *issuer
                        && g.privilege == Privilege::CreateView
                        && grant_derivable(state, g, visiting)
                })
                .then_some("create-view-granted")
        }
        Action::CreateTrigger { issuer, trigger } => {
            if is_admin(issuer) {
                return Some("create-trigger-admin");
            }
            state
                .sec
                .iter()
                .any(|g| {
                    g.grantee == *issuer
                        && g.privilege == Privilege::CreateTrigger(trigger.table.clone())
                        && grant_derivable(state, g, visiting)
                })
                .then_some("create-trigger-granted")
        }
        Action::Grant {
            op,
            grantee,
            privilege,
            grantor,
        } => {
            // Guard against cyclically supported grants: a goal may not
            // appear below itself in its own derivation.
            let key = Grant {
                op: *op,
                grantee: grantee.clone(),
                privilege: privilege.clone(),
                grantor: grantor.clone(),
            };
            if !visiting.insert(key.clone()) {
                return None;
            }
            let out = grant_rule_appr(state, privilege, grantor, visiting);
            visiting.remove(&key);
            out
        }
        Action::Revoke {
            grantee,
            privilege,
            revoker,
        } => {
            let mut next = state.clone();
            next.sec = revoke_cascade(
                &state.sec,
                grantee,
                privilege,
                revoker,
                &state.views,
                &ADMIN.into(),
            );
            next.sec
                .clone()
                .iter()
                .all(|g| grant_derivable(&next, g, &mut BTreeSet::new()))
                .then_some("revoke-consistent")
        }
    }
}

fn grant_rule_appr(
    state: &SystemState,
    privilege: &Privilege,
    grantor: &Name,
    visiting: &mut BTreeSet<Grant>,
) -> Option<&'static str> {
    // Delegation through an existing grant-option grant.
    let delegated = state.sec.iter().any(|g| {
        g.op == GrantOp::WithGrantOption
            && g.grantee == *grantor
            && g.privilege == *privilege
            && grant_derivable(state, g, visiting)
    });
    if delegated {
        return Some("grant-delegated");
    }
    let owner_view = match privilege {
        Privilege::Select(o) => state.view(o).filter(|v| v.mode == Mode::Owner),
        _ => None,
    };
    if is_admin(grantor) && owner_view.is_none() {
        return Some("grant-admin");
    }
    if let Privilege::Select(o) = privilege {
        if let Some(v) = state.view(o).cloned() {
            if v.mode == Mode::Activator && v.owner == *grantor {
                return Some("grant-activator-view");
            }
            if v.mode == Mode::Owner {
                // The owner (or the admin on the owner's behalf)
                // may share exactly what determines the view.
                let (subject, op_needed, rule) = if v.owner == *grantor {
                    (
                        v.owner.clone(),
                        GrantOp::WithGrantOption,
                        "grant-view-owner",
                    )
                } else if is_admin(grantor) && !is_admin(&v.owner) {
                    (v.owner.clone(), GrantOp::Plain, "grant-view-admin")
                } else {
                    return None;
                };
                let t_set = at_tables_in(state, op_needed, &subject, visiting);
                let v_set = av_views_in(state, op_needed, &subject, visiting);
                if appr_det(&t_set, &v_set, &v.query.body, state) {
                    return Some(rule);
                }
                let inlined = inline_views(&v.query.body, state.views.iter())
                    .unwrap_or_else(|_| v.query.body.clone());
                if appr_det(&t_set, &v_set, &inlined, state) {
                    return Some(rule);
                }
            }
        }
    }
    None
}

/// Shared trigger-authorization skeleton: the trigger must be installed,
/// and either its condition is false, or the concrete action is authorized
/// for the owner (owner's privileges) or for both the owner and the
/// invoker (activator's privileges).
fn derive_trigger(
    state: &SystemState,
    t: &TriggerDef,
    authorized: &mut dyn FnMut(&SystemState, &Action) -> bool,
) -> Option<&'static str> {
    if !state.triggers.iter().any(|x| x.id == t.id) {
        return None;
    }
    let fired = state.tpl()?.clone();
    let invoker = state.invoker()?.clone();
    let cond = t.condition_instance(&fired);
    let enabled = eval(&state.db, &cond, &Assignment::new(), &state.view_env()).ok()?;
    if !enabled {
        return Some("execute-trigger-disabled");
    }
    let owner_action = get_action(&t.stmt, &t.owner, &fired);
    match t.mode {
        Mode::Owner => authorized(state, &owner_action).then_some("execute-trigger-owner"),
        Mode::Activator => {
            let invoker_action = get_action(&t.stmt, &invoker, &fired);
            (authorized(state, &invoker_action) && authorized(state, &owner_action))
                .then_some("execute-trigger-activator")
        }
    }
}

/// `f_int`: outside a transaction, the action itself must be authorized; a
/// scheduled trigger's condition is always allowed; a scheduled trigger's
/// action is allowed iff the trigger itself is.
pub fn f_int(state: &SystemState, action: &Action) -> AuthzVerdict {
    let Some(t) = state.trigger().cloned() else {
        return auth_appr(state, &Label::Act(action.clone()));
    };
    let (Some(fired), Some(invoker)) = (state.tpl().cloned(), state.invoker().cloned()) else {
        return AuthzVerdict::deny();
    };
    let user = actual_user(&t, &invoker);
    let cond_action = Action::Select {
        user: user.clone(),
        query: t.condition_instance(&fired),
    };
    if *action == cond_action {
        return AuthzVerdict::permit("trigger-condition");
    }
    let concrete = get_action(&t.stmt, &user, &fired);
    if *action == concrete {
        return auth_appr(state, &Label::Trig(t));
    }
    AuthzVerdict::deny()
}

/// The integrity half as a standalone decision point.
pub struct PdpInt;

impl Pdp for PdpInt {
    fn name(&self) -> &'static str {
        "f_int"
    }

    fn decide(&self, state: &SystemState, action: &Action) -> Decision {
        let v = f_int(state, action);
        Decision {
            permit: v.permit,
            reason: format!("f_int:{}", v.rule.unwrap_or("no-rule")),
        }
    }
}

// ---------------------------------------------------------------------
// Reference relation over the bounded domain (testing oracle).
// ---------------------------------------------------------------------

/// Brute-force query determinacy: on every pair of constraint-satisfying
/// states agreeing on `t_set` and on the materializations of `v_set`, the
/// query answer must agree. Exponential in schema and domain; intended for
/// the bounded scenarios of the test suites.
pub fn determines_brute(
    t_set: &BTreeSet<Name>,
    v_set: &[View],
    q: &Query,
    state: &SystemState,
) -> bool {
    use std::collections::BTreeMap;
    let schema = &state.config.schema;
    let universe: Vec<Value> = schema.domain().iter().cloned().collect();
    let mut groups: BTreeMap<String, BTreeSet<Vec<Value>>> = BTreeMap::new();
    let view_env = state.view_env();
    let mut ok = true;
    crate::attacker::enumerate_db_states(
        schema,
        &state.config.constraints,
        &BTreeMap::new(),
        &mut |db| {
            let mut sig = String::new();
            for t in t_set {
                sig.push_str(&format!("{t}={:?};", db.rows(t)));
            }
            for v in v_set {
                let m = eval_query_over(db, &v.query, &view_env, &universe).expect("view eval");
                sig.push_str(&format!("{}={m:?};", v.id));
            }
            let answer = eval_query_over(db, q, &view_env, &universe).expect("query eval");
            match groups.get(&sig) {
                Some(prev) if *prev != answer => {
                    ok = false;
                    false
                }
                Some(_) => true,
                None => {
                    groups.insert(sig, answer);
                    true
                }
            }
        },
    );
    ok
}

fn has_access_full(
    state: &SystemState,
    object: &Name,
    user: &Name,
    op: GrantOp,
    visiting: &mut BTreeSet<Grant>,
) -> bool {
    let ops: &[GrantOp] = match op {
        GrantOp::WithGrantOption => &[GrantOp::WithGrantOption],
        GrantOp::Plain => &[GrantOp::Plain, GrantOp::WithGrantOption],
    };
    if is_admin(user) {
        for grantor in &state.users {
            for op2 in ops {
                let a = Action::Grant {
                    op: *op2,
                    grantee: user.clone(),
                    privilege: Privilege::Select(object.clone()),
                    grantor: grantor.clone(),
                };
                if full_action(state, &a, visiting) {
                    return true;
                }
            }
        }
        return false;
    }
    state.sec.iter().any(|g| {
        g.grantee == *user
            && g.privilege == Privilege::Select(object.clone())
            && ops.contains(&g.op)
            && full_grant(state, g, visiting)
    })
}

fn full_grant(state: &SystemState, g: &Grant, visiting: &mut BTreeSet<Grant>) -> bool {
    let action = Action::Grant {
        op: g.op,
        grantee: g.grantee.clone(),
        privilege: g.privilege.clone(),
        grantor: g.grantor.clone(),
    };
    full_action(state, &action, visiting)
}

fn full_action(state: &SystemState, action: &Action, visiting: &mut BTreeSet<Grant>) -> bool {
    match action {
        Action::AddUser { issuer, .. } => is_admin(issuer),
        Action::Select { user, .. } => state.users.contains(user),
        Action::Insert { user, table, .. } | Action::Delete { user, table, .. } => {
            if is_admin(user) {
                return true;
            }
            let wanted = if matches!(action, Action::Insert { .. }) {
                Privilege::Insert(table.clone())
            } else {
                Privilege::Delete(table.clone())
            };
            state.sec.iter().any(|g| {
                g.grantee == *user && g.privilege == wanted && full_grant(state, g, visiting)
            })
        }
        Action::CreateView { issuer, .. } => {
            is_admin(issuer)
                || state.sec.iter().any(|g| {
                    g.grantee == *issuer
                        && g.privilege == Privilege::CreateView
                        && full_grant(state, g, visiting)
                })
        }
        Action::CreateTrigger { issuer, trigger } => {
            is_admin(issuer)
                || state.sec.iter().any(|g| {
                    g.grantee == *issuer
                        && g.privilege == Privilege::CreateTrigger(trigger.table.clone())
                        && full_grant(state, g, visiting)
                })
        }
        Action::Grant {
            op,
            grantee,
            privilege,
            grantor,
        } => {
            let key = Grant {
                op: *op,
                grantee: grantee.clone(),
                privilege: privilege.clone(),
                grantor: grantor.clone(),
            };
            if !visiting.insert(key.clone()) {
                return false;
            }
            let out = grant_rule_full(state, privilege, grantor, visiting);
            visiting.remove(&key);
            out
        }
        Action::Revoke {
            grantee,
            privilege,
            revoker,
        } => {
            let mut next = state.clone();
            next.sec = revoke_cascade(
                &state.sec,
                grantee,
                privilege,
                revoker,
                &state.views,
                &ADMIN.into(),
            );
            next.sec
                .clone()
                .iter()
                .all(|g| full_grant(&next, g, &mut BTreeSet::new()))
        }
    }
}

fn grant_rule_full(
    state: &SystemState,
    privilege: &Privilege,
    grantor: &Name,
    visiting: &mut BTreeSet<Grant>,
) -> bool {
    let delegated = state.sec.iter().any(|g| {
        g.op == GrantOp::WithGrantOption
            && g.grantee == *grantor
            && g.privilege == *privilege
            && full_grant(state, g, visiting)
    });
    if delegated {
        return true;
    }
    let owner_view = match privilege {
        Privilege::Select(o) => state.view(o).filter(|v| v.mode == Mode::Owner),
        _ => None,
    };
    if is_admin(grantor) && owner_view.is_none() {
        return true;
    }
    if let Privilege::Select(o) = privilege {
        if let Some(v) = state.view(o).cloned() {
            if v.mode == Mode::Activator && v.owner == *grantor {
                return true;
            }
            if v.mode == Mode::Owner {
                let (subject, op_needed) = if v.owner == *grantor {
                    (v.owner.clone(), GrantOp::WithGrantOption)
                } else if is_admin(grantor) && !is_admin(&v.owner) {
                    (v.owner.clone(), GrantOp::Plain)
                } else {
                    return false;
                };
                // Determinacy is monotone in the sets, so the
                // maximal accessible sets decide the existential.
                let t_set: BTreeSet<Name> = state
                    .config
                    .schema
                    .table_names()
                    .filter(|r| has_access_full(state, r, &subject, op_needed, visiting))
                    .cloned()
                    .collect();
                let v_set: Vec<View> = state
                    .views
                    .iter()
                    .filter(|w| {
                        w.mode == Mode::Owner
                            && has_access_full(state, &w.id, &subject, op_needed, visiting)
                    })
                    .cloned()
                    .collect();
                return determines_brute(&t_set, &v_set, &v.query, state);
            }
        }
    }
    false
}

/// The reference authorized-action relation, with determinacy decided by
/// exhaustive enumeration over the declared finite domain.
pub fn auth_full(state: &SystemState, label: &Label) -> bool {
    match label {
        Label::Act(a) => full_action(state, a, &mut BTreeSet::new()),
        Label::Trig(t) => derive_trigger(state, t, &mut |s, a| {
            full_action(s, a, &mut BTreeSet::new())
        })
        .is_some(),
    }
}
