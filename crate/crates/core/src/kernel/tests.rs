use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::rc::{
    Constraint, ConstraintKind, DatabaseState, Formula, Mode, Name, Query, Schema, Term, Value,
    Var, View,
};

fn val(s: &str) -> Value {
    Value::from(s)
}

fn sel(t: &str) -> Privilege {
    Privilege::Select(t.into())
}

fn grant(op: GrantOp, grantee: &str, p: Privilege, grantor: &str) -> Grant {
    Grant {
        op,
        grantee: grantee.into(),
        privilege: p,
        grantor: grantor.into(),
    }
}

fn users(names: &[&str]) -> BTreeSet<Name> {
    names.iter().map(|n| Name::from(*n)).collect()
}

fn simple_trigger(
    id: &str,
    owner: &str,
    event: TriggerEvent,
    table: &str,
    stmt: TriggerStmt,
    mode: Mode,
    seq: u64,
) -> TriggerDef {
    TriggerDef {
        id: id.into(),
        owner: owner.into(),
        event,
        table: table.into(),
        condition: Formula::True,
        stmt,
        mode,
        seq,
    }
}

#[test]
fn safety_rejects_mutual_firing() {
    let t1 = simple_trigger(
        "t1",
        "u1",
        TriggerEvent::Insert,
        "p",
        TriggerStmt::Insert {
            table: "n".into(),
            tuple: vec![TplTerm::Fired(0)],
        },
        Mode::Owner,
        0,
    );
    // No trigger watches n, so this set is safe.
    assert!(safe(std::slice::from_ref(&t1)));

    let t2 = simple_trigger(
        "t2",
        "u1",
        TriggerEvent::Insert,
        "n",
        TriggerStmt::Insert {
            table: "p".into(),
            tuple: vec![TplTerm::Fired(0)],
        },
        Mode::Owner,
        1,
    );
    assert!(!safe(&[t1, t2]));

    // A grant action can never fire anything.
    let t3 = simple_trigger(
        "t3",
        "u1",
        TriggerEvent::Insert,
        "p",
        TriggerStmt::Grant {
            op: GrantOp::Plain,
            grantee: "u2".into(),
            privilege: sel("p"),
        },
        Mode::Owner,
        2,
    );
    assert!(safe(&[t3.clone(), t3]));
}

#[test]
fn scheduling_is_creation_order() {
    let mk = |id: &str, seq| {
        simple_trigger(
            id,
            "u1",
            TriggerEvent::Insert,
            "p",
            TriggerStmt::Grant {
                op: GrantOp::Plain,
                grantee: "u2".into(),
                privilege: sel("p"),
            },
            Mode::Owner,
            seq,
        )
    };
    let t2 = mk("t2", 5);
    let t1 = mk("t1", 3);
    let other = simple_trigger(
        "t3",
        "u1",
        TriggerEvent::Delete,
        "p",
        TriggerStmt::Grant {
            op: GrantOp::Plain,
            grantee: "u2".into(),
            privilege: sel("p"),
        },
        Mode::Owner,
        1,
    );
    let all = vec![t2.clone(), t1.clone(), other];
    let order = scheduled(&all, TriggerEvent::Insert, &"p".into());
    assert_eq!(
        order.iter().map(|t| t.id.as_str()).collect::<Vec<_>>(),
        ["t1", "t2"]
    );
    assert!(scheduled(&all, TriggerEvent::Insert, &"q".into()).is_empty());
}

#[test]
fn action_templates_substitute_positionally() {
    let fired = [val("v")];
    let insert = TriggerStmt::Insert {
        table: "n".into(),
        tuple: vec![TplTerm::Fired(0)],
    };
    assert_eq!(
        get_action(&insert, &"admin".into(), &fired),
        Action::Insert {
            user: "admin".into(),
            table: "n".into(),
            tuple: vec![val("v")],
        }
    );
    let constant = TriggerStmt::Delete {
        table: "s".into(),
        tuple: vec![TplTerm::Const(val("z"))],
    };
    assert_eq!(
        get_action(&constant, &"u2".into(), &fired),
        Action::Delete {
            user: "u2".into(),
            table: "s".into(),
            tuple: vec![val("z")],
        }
    );
    let revoke = TriggerStmt::Revoke {
        grantee: "u1".into(),
        privilege: sel("s"),
    };
    assert_eq!(
        get_action(&revoke, &"w".into(), &fired),
        Action::Revoke {
            grantee: "u1".into(),
            privilege: sel("s"),
            revoker: "w".into(),
        }
    );
}

#[test]
fn unrooted_chains_cascade_away() {
    // Neither grant is reachable from the admin or a view owner, so any
    // revoke sweeps both.
    let sec: BTreeSet<Grant> = [
        grant(GrantOp::WithGrantOption, "u2", sel("s"), "u1"),
        grant(GrantOp::Plain, "u3", sel("s"), "u2"),
    ]
    .into_iter()
    .collect();
    let out = revoke_cascade(
        &sec,
        &"u2".into(),
        &sel("s"),
        &"u1".into(),
        &[],
        &"admin".into(),
    );
    assert!(out.is_empty());
}

#[test]
fn dependent_grants_cascade_with_their_support() {
    let sec: BTreeSet<Grant> = [
        grant(GrantOp::WithGrantOption, "u1", sel("s"), "admin"),
        grant(GrantOp::WithGrantOption, "u2", sel("s"), "u1"),
        grant(GrantOp::Plain, "u3", sel("s"), "u2"),
    ]
    .into_iter()
    .collect();
    let out = revoke_cascade(
        &sec,
        &"u2".into(),
        &sel("s"),
        &"u1".into(),
        &[],
        &"admin".into(),
    );
    let expected: BTreeSet<Grant> = [grant(GrantOp::WithGrantOption, "u1", sel("s"), "admin")]
        .into_iter()
        .collect();
    assert_eq!(out, expected);
}

#[test]
fn revoking_absent_grant_is_noop_on_rooted_policy() {
    let sec: BTreeSet<Grant> = [
        grant(GrantOp::Plain, "u2", sel("s"), "admin"),
        grant(GrantOp::Plain, "u2", Privilege::Insert("s".into()), "admin"),
    ]
    .into_iter()
    .collect();
    let out = revoke_cascade(
        &sec,
        &"u3".into(),
        &sel("s"),
        &"u1".into(),
        &[],
        &"admin".into(),
    );
    assert_eq!(out, sec);
}

#[test]
fn owner_rooted_view_grants_survive_table_revoke() {
    let view = View {
        id: "v".into(),
        owner: "u2".into(),
        query: Query::new(
            vec![Var::new("x")],
            Formula::pred("s".into(), vec![Term::Var(Var::new("x"))]),
        )
        .unwrap(),
        mode: Mode::Owner,
    };
    let sec: BTreeSet<Grant> = [
        grant(GrantOp::WithGrantOption, "u1", sel("s"), "admin"),
        grant(GrantOp::WithGrantOption, "u2", sel("s"), "u1"),
        grant(GrantOp::Plain, "u3", sel("v"), "u2"),
    ]
    .into_iter()
    .collect();
    let out = revoke_cascade(
        &sec,
        &"u2".into(),
        &sel("s"),
        &"u1".into(),
        std::slice::from_ref(&view),
        &"admin".into(),
    );
    assert!(out.contains(&grant(GrantOp::Plain, "u3", sel("v"), "u2")));
    assert!(!out.contains(&grant(GrantOp::WithGrantOption, "u2", sel("s"), "u1")));
}

#[test]
fn cascade_output_is_subset_of_chains() {
    let mut r = crate::testkit::rng(21);
    let g = crate::testkit::GenConfig::default();
    for _ in 0..50 {
        let config = crate::testkit::gen_system_config(&mut r, &g);
        let state = crate::testkit::gen_initial_state(&mut r, config);
        let all_chained = chains(&state.sec, &state.views, &"admin".into());
        for target in state.sec.iter().take(2) {
            let out = revoke_cascade(
                &state.sec,
                &target.grantee,
                &target.privilege,
                &target.grantor,
                &state.views,
                &"admin".into(),
            );
            assert!(out.is_subset(&all_chained));
        }
    }
}

// ------------------------------------------------------------------
// Step semantics.
// ------------------------------------------------------------------

fn attack1_initial() -> SystemState {
    let schema = Schema::new(
        [("p".into(), 1), ("s".into(), 1)],
        ["v", "z"].map(Value::from),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    db.insert(&schema, &"s".into(), vec![val("z")]).unwrap();
    let sec: BTreeSet<Grant> = [
        grant(
            GrantOp::Plain,
            "u1",
            Privilege::CreateTrigger("p".into()),
            "admin",
        ),
        grant(GrantOp::Plain, "u2", Privilege::Insert("p".into()), "admin"),
        grant(GrantOp::Plain, "u2", Privilege::Delete("s".into()), "admin"),
        grant(GrantOp::Plain, "u2", sel("p"), "admin"),
        grant(GrantOp::Plain, "u2", sel("s"), "admin"),
    ]
    .into_iter()
    .collect();
    SystemState::initial(
        config,
        db,
        users(&["admin", "u1", "u2"]),
        sec,
        Vec::new(),
        Vec::new(),
    )
    .unwrap()
}

fn attack1_actions() -> Vec<Action> {
    let trigger = TriggerDef {
        id: "t".into(),
        owner: "u1".into(),
        event: TriggerEvent::Insert,
        table: "p".into(),
        condition: Formula::True,
        stmt: TriggerStmt::Delete {
            table: "s".into(),
            tuple: vec![TplTerm::Const(val("z"))],
        },
        mode: Mode::Activator,
        seq: 0,
    };
    vec![
        Action::CreateTrigger {
            issuer: "u1".into(),
            trigger,
        },
        Action::Insert {
            user: "u2".into(),
            table: "p".into(),
            tuple: vec![val("v")],
        },
    ]
}

#[test]
fn trigger_transaction_applies_both_updates() {
    // Unrestricted, the planted trigger empties the protected table.
    let run = execute(attack1_initial(), attack1_actions(), &AllowAll).unwrap();
    assert_eq!(run.len(), 4);
    let last = run.last();
    assert!(last.db.contains(&"p".into(), &[val("v")]));
    assert!(!last.db.contains(&"s".into(), &[val("z")]));
    assert!(matches!(run.label(3), Label::Trig(t) if t.id.as_str() == "t"));
}

struct DenyDeletes;

impl Pdp for DenyDeletes {
    fn name(&self) -> &'static str {
        "deny-deletes"
    }

    fn decide(&self, _state: &SystemState, action: &Action) -> Decision {
        if matches!(action, Action::Delete { .. }) {
            Decision::deny("delete")
        } else {
            Decision::permit("other")
        }
    }
}

#[test]
fn denied_trigger_action_rolls_back_the_transaction() {
    let run = execute(attack1_initial(), attack1_actions(), &DenyDeletes).unwrap();
    let last = run.last();
    // The whole transaction is undone: the insert into p as well.
    assert!(!last.db.contains(&"p".into(), &[val("v")]));
    assert!(last.db.contains(&"s".into(), &[val("z")]));
    assert!(last.sec_ex());
    // The restored partial state equals the pre-insert snapshot.
    let pre = run.state(2).partial();
    assert_eq!(last.partial().db, pre.db);
}

#[test]
fn denied_select_only_touches_the_context() {
    struct DenySelect;
    impl Pdp for DenySelect {
        fn name(&self) -> &'static str {
            "deny-select"
        }
        fn decide(&self, _s: &SystemState, a: &Action) -> Decision {
            if matches!(a, Action::Select { .. }) {
                Decision::deny("select")
            } else {
                Decision::permit("other")
            }
        }
    }
    let initial = attack1_initial();
    let select = Action::Select {
        user: "u2".into(),
        query: Formula::pred("s".into(), vec![Term::Const(val("z"))]),
    };
    let run = execute(initial.clone(), [select], &DenySelect).unwrap();
    let last = run.last();
    assert!(last.sec_ex());
    assert!(!last.res());
    assert_eq!(last.db, initial.db);
    assert_eq!(last.sec, initial.sec);
}

/// The owner-privilege trigger scenario: deleting and re-inserting through
/// the trigger leaves the secret readable through the side table.
fn example2_initial() -> SystemState {
    let schema = Schema::new(
        [("n".into(), 1), ("p".into(), 1), ("t".into(), 1)],
        ["v", "w"].map(Value::from),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    db.insert(&schema, &"n".into(), vec![val("v")]).unwrap();
    db.insert(&schema, &"t".into(), vec![val("v")]).unwrap();
    let mut sec = BTreeSet::new();
    for p in [
        sel("p"),
        sel("n"),
        Privilege::Insert("p".into()),
        Privilege::Insert("n".into()),
        Privilege::Delete("p".into()),
        Privilege::Delete("n".into()),
    ] {
        sec.insert(grant(GrantOp::Plain, "u", p, "admin"));
    }
    let trigger = TriggerDef {
        id: "t1".into(),
        owner: "admin".into(),
        event: TriggerEvent::Insert,
        table: "p".into(),
        condition: Formula::pred("t".into(), vec![Term::Var(trigger_var(0))]),
        stmt: TriggerStmt::Insert {
            table: "n".into(),
            tuple: vec![TplTerm::Fired(0)],
        },
        mode: Mode::Owner,
        seq: 0,
    };
    SystemState::initial(
        config,
        db,
        users(&["admin", "u"]),
        sec,
        vec![trigger],
        Vec::new(),
    )
    .unwrap()
}

pub(crate) fn example2_actions() -> Vec<Action> {
    vec![
        Action::Delete {
            user: "u".into(),
            table: "n".into(),
            tuple: vec![val("v")],
        },
        Action::Insert {
            user: "u".into(),
            table: "p".into(),
            tuple: vec![val("v")],
        },
        Action::Select {
            user: "u".into(),
            query: Formula::pred("n".into(), vec![Term::Const(val("v"))]),
        },
    ]
}

#[test]
fn owner_trigger_reinserts_and_select_sees_it() {
    let run = execute(example2_initial(), example2_actions(), &AllowAll).unwrap();
    // delete, insert, trigger, select: five states.
    assert_eq!(run.len(), 5);
    assert!(matches!(run.label(3), Label::Trig(_)));
    let last = run.last();
    assert!(last.res(), "the final select must come back true");
    assert!(last.db.contains(&"n".into(), &[val("v")]));
}

#[test]
fn disabled_trigger_leaves_database_unchanged() {
    let initial = example2_initial();
    let actions = vec![
        Action::Delete {
            user: "u".into(),
            table: "n".into(),
            tuple: vec![val("v")],
        },
        // 'w' is not in t, so the trigger is disabled.
        Action::Insert {
            user: "u".into(),
            table: "p".into(),
            tuple: vec![val("w")],
        },
    ];
    let run = execute(initial, actions, &AllowAll).unwrap();
    assert_eq!(run.len(), 4);
    let last = run.last();
    assert!(!last.db.contains(&"n".into(), &[val("v")]));
    assert!(last.db.contains(&"p".into(), &[val("w")]));
    assert!(!last.sec_ex());
    assert!(last.ex().is_empty());
}

#[test]
fn integrity_exception_reports_violations_and_keeps_state() {
    let schema = Schema::new(
        [("p".into(), 1), ("s".into(), 2)],
        ["bob", "alice", "1", "2"].map(Value::from),
    )
    .unwrap();
    let pk = Constraint {
        id: "pk".into(),
        kind: ConstraintKind::Fd {
            table: "s".into(),
            determinant: vec![0],
            dependent: vec![1],
        },
    };
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![pk]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    db.insert(&schema, &"s".into(), vec![val("bob"), val("1")])
        .unwrap();
    let state = SystemState::initial(
        config,
        db.clone(),
        users(&["admin", "u"]),
        BTreeSet::new(),
        Vec::new(),
        Vec::new(),
    )
    .unwrap();
    let insert = Action::Insert {
        user: "u".into(),
        table: "s".into(),
        tuple: vec![val("bob"), val("2")],
    };
    let run = execute(state, [insert], &AllowAll).unwrap();
    let last = run.last();
    assert_eq!(last.ex(), vec![Name::from("pk")]);
    assert!(!last.res());
    assert!(!last.sec_ex());
    assert_eq!(last.db, db);
}

#[test]
fn duplicate_creations_fail_without_security_exception() {
    let initial = attack1_initial();
    let mut actions = attack1_actions();
    actions.truncate(1);
    actions.push(actions[0].clone());
    let run = execute(initial, actions, &AllowAll).unwrap();
    let last = run.last();
    assert!(!last.sec_ex());
    assert!(!last.res());
    assert_eq!(last.triggers.len(), 1);
}

#[test]
fn history_grows_and_exactly_one_rule_applies() {
    let mut r = crate::testkit::rng(31);
    let g = crate::testkit::GenConfig::default();
    for _ in 0..25 {
        let run = crate::testkit::gen_run(&mut r, &g, &AllowAll);
        for i in 1..run.len() {
            let pre = run.state(i);
            let post = run.state(i + 1);
            let pre_len = pre.ctx.history.len() + usize::from(pre.ctx.last.is_some());
            let post_len = post.ctx.history.len() + usize::from(post.ctx.last.is_some());
            assert!(post_len == pre_len + 1, "history must grow by one");
            let rules = applicable_rules(pre, run.label(i), &AllowAll);
            assert_eq!(rules.len(), 1, "exactly one rule applies: {rules:?}");
        }
    }
}

#[test]
fn add_user_success_and_redundant_add() {
    let initial = attack1_initial();
    let add = Action::AddUser {
        issuer: "admin".into(),
        user: "u9".into(),
    };
    let run = execute(initial, [add.clone(), add], &AllowAll).unwrap();
    assert!(run.last().users.contains(&Name::from("u9")));
}

#[test]
fn database_changes_only_through_updates() {
    let mut r = crate::testkit::rng(32);
    let g = crate::testkit::GenConfig::default();
    for _ in 0..40 {
        let run = crate::testkit::gen_run(&mut r, &g, &AllowAll);
        for i in 1..run.len() {
            let pre = run.state(i);
            let post = run.state(i + 1);
            if pre.db == post.db {
                continue;
            }
            let update_label = match run.label(i) {
                Label::Act(Action::Insert { .. }) | Label::Act(Action::Delete { .. }) => true,
                Label::Trig(t) => matches!(
                    t.stmt,
                    TriggerStmt::Insert { .. } | TriggerStmt::Delete { .. }
                ),
                _ => false,
            };
            assert!(update_label, "db changed under {}", run.label(i));
        }
    }
}

#[test]
fn foreign_gaps_collapse_identically() {
    // Two runs whose foreign segments differ only in length have
    // consistent projections for the observer.
    use crate::attacker::{consistent, u_projection};
    let initial = attack1_initial();
    let own = Action::Select {
        user: "u2".into(),
        query: Formula::pred("s".into(), vec![Term::Const(val("z"))]),
    };
    let foreign = Action::Select {
        user: "u1".into(),
        query: Formula::pred("p".into(), vec![Term::Const(val("v"))]),
    };
    let run_a = execute(
        initial.clone(),
        [foreign.clone(), own.clone(), foreign.clone(), own.clone()],
        &AllowAll,
    )
    .unwrap();
    let run_b = execute(
        initial.clone(),
        [
            foreign.clone(),
            foreign.clone(),
            own.clone(),
            foreign.clone(),
            foreign.clone(),
            own.clone(),
        ],
        &AllowAll,
    )
    .unwrap();
    let observer: Name = "u2".into();
    let pa = u_projection(&run_a, &observer);
    let pb = u_projection(&run_b, &observer);
    assert_eq!(pa.labels, pb.labels);
    assert!(consistent(&run_a, &pa, &run_b, &pb));
    // Dropping the masked prefix changes the labels: no longer consistent.
    let run_c = execute(initial, [own.clone(), foreign, own], &AllowAll).unwrap();
    let pc = u_projection(&run_c, &observer);
    assert_ne!(pa.labels, pc.labels);
    assert!(!consistent(&run_a, &pa, &run_c, &pc));
}
