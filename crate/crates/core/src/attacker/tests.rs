use std::collections::BTreeSet;
use std::sync::Arc;

use super::*;
use crate::kernel::{
    execute, trigger_var, Action, AllowAll, Grant, GrantOp, Privilege, Run, SystemConfig,
    SystemState, TplTerm, TriggerDef, TriggerEvent, TriggerStmt, ADMIN,
};
use crate::rc::{
    Constraint, ConstraintKind, DatabaseState, Formula, Mode, Name, Schema, Term, Value,
};

fn val(s: &str) -> Value {
    Value::from(s)
}

fn tconst(s: &str) -> Term {
    Term::Const(Value::from(s))
}

fn ground(table: &str, args: &[&str]) -> Formula {
    Formula::pred(table.into(), args.iter().map(|a| tconst(a)).collect())
}

/// The owner-privilege trigger scenario parametrized by the secret table's
/// content.
fn secret_probe_state(t_rows: &[&str]) -> SystemState {
    let schema = Schema::new(
        [("n".into(), 1), ("p".into(), 1), ("t".into(), 1)],
        ["v", "j", "w"].map(Value::from),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    db.insert(&schema, &"n".into(), vec![val("v")]).unwrap();
    for row in t_rows {
        db.insert(&schema, &"t".into(), vec![val(row)]).unwrap();
    }
    let mut sec = BTreeSet::new();
    for p in [
        Privilege::Select("p".into()),
        Privilege::Select("n".into()),
        Privilege::Insert("p".into()),
        Privilege::Insert("n".into()),
        Privilege::Delete("p".into()),
        Privilege::Delete("n".into()),
    ] {
        sec.insert(Grant {
            op: GrantOp::Plain,
            grantee: "u".into(),
            privilege: p,
            grantor: ADMIN.into(),
        });
    }
    let trigger = TriggerDef {
        id: "t1".into(),
        owner: ADMIN.into(),
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
        ["admin", "u"].map(Name::from).into_iter().collect(),
        sec,
        vec![trigger],
        Vec::new(),
    )
    .unwrap()
}

fn probe_actions() -> Vec<Action> {
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
            query: ground("n", &["v"]),
        },
    ]
}

fn probe_run(t_rows: &[&str]) -> Run {
    execute(secret_probe_state(t_rows), probe_actions(), &AllowAll).unwrap()
}

#[test]
fn secret_membership_is_derived_through_the_trigger() {
    let run = probe_run(&["v"]);
    assert_eq!(run.len(), 5);
    let d = derive(&run, &"u".into(), DeriveConfig::default());
    assert!(!d.exhausted);
    // The chain: delete success, forward propagation, select success,
    // backward propagation, and the trigger-learning step.
    assert!(d.holds(2, &Formula::not(ground("n", &["v"]))));
    assert!(d.holds(3, &Formula::not(ground("n", &["v"]))));
    assert!(d.holds(5, &ground("n", &["v"])));
    assert!(d.holds(4, &ground("n", &["v"])));
    assert!(
        d.holds(3, &ground("t", &["v"])),
        "the secret leaks at the firing point"
    );
}

#[test]
fn derived_judgments_hold_at_their_positions() {
    let run = probe_run(&["v"]);
    let d = derive(&run, &"u".into(), DeriveConfig::default());
    for j in d.judgments() {
        let state = run.state(j.pos);
        let value = crate::rc::eval(
            &state.db,
            &j.sentence,
            &crate::rc::Assignment::new(),
            &state.view_env(),
        )
        .unwrap();
        assert!(value, "unsound judgment {} at {}", j.sentence, j.pos);
    }
}

#[test]
fn single_state_run_knows_exactly_the_constraints() {
    let schema = Schema::new([("s".into(), 2)], ["a", "b"].map(Value::from)).unwrap();
    let pk = Constraint {
        id: "pk".into(),
        kind: ConstraintKind::Fd {
            table: "s".into(),
            determinant: vec![0],
            dependent: vec![1],
        },
    };
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![pk.clone()]).unwrap());
    let state = SystemState::initial(
        config,
        DatabaseState::empty(&schema),
        ["admin", "u"].map(Name::from).into_iter().collect(),
        BTreeSet::new(),
        Vec::new(),
        Vec::new(),
    )
    .unwrap();
    let run = Run::new(state);
    let d = derive(&run, &"u".into(), DeriveConfig::default());
    let expected: BTreeSet<Formula> = [canon(&pk.sentence(&schema))].into_iter().collect();
    assert_eq!(d.at(1), &expected);
}

#[test]
fn belief_revision_follows_the_touched_tables() {
    let run = probe_run(&["v"]);
    // Step 2→3 is the insert into p; sentences over n and t survive.
    let phi = Formula::raw_and(ground("n", &["v"]), ground("t", &["v"]));
    assert!(revise_belief(&run, 2, &phi));
    let touches_p = ground("p", &["v"]);
    assert!(!revise_belief(&run, 2, &touches_p));
    // Step 1→2 is a delete on n.
    assert!(!revise_belief(&run, 1, &ground("n", &["v"])));
    // Step 4→5 is a select: no revision case applies.
    assert!(!revise_belief(&run, 4, &ground("t", &["v"])));
    // Step 3→4 is the trigger with an insert statement on n.
    assert!(revise_belief(&run, 3, &ground("t", &["v"])));
    assert!(!revise_belief(&run, 3, &ground("n", &["v"])));
}

#[test]
fn projection_masks_foreign_steps() {
    let mut run = probe_run(&["v"]);
    let own = u_projection(&run, &"u".into());
    // Every label including the trigger belongs to u.
    assert_eq!(own.labels.len(), 4);
    assert!(own.labels.iter().all(|l| !matches!(l, Masked::Star)));
    assert_eq!(own.state_positions, vec![1, 2, 3, 4, 5]);

    // A trailing administrator select becomes one masked step; two of
    // them still one.
    for _ in 0..2 {
        let select = Action::Select {
            user: ADMIN.into(),
            query: ground("t", &["v"]),
        };
        let (_, next) = crate::kernel::step(
            run.last(),
            &crate::kernel::Label::Act(select.clone()),
            &AllowAll,
        )
        .unwrap();
        run.push(crate::kernel::Label::Act(select), next);
        let masked = u_projection(&run, &"u".into());
        assert_eq!(masked.labels.len(), 5);
        assert!(matches!(masked.labels.last(), Some(Masked::Star)));
        // No two consecutive masks.
        for pair in masked.labels.windows(2) {
            assert!(!matches!(pair, [Masked::Star, Masked::Star]));
        }
    }
}

#[test]
fn runs_differing_on_the_secret_are_indistinguishable() {
    // With the trigger enabled in both, the runs differ only in the
    // unreadable table: indistinguishable.
    let r1 = probe_run(&["v"]);
    let r2 = probe_run(&["j", "v"]);
    // Without the secret the trigger is disabled: the final select
    // answers differently, so the runs are distinguishable.
    let r3 = probe_run(&[]);
    assert!(indistinguishable(&r1, &r2, &"u".into()));
    assert!(!indistinguishable(&r1, &r3, &"u".into()));
    assert!(indistinguishable(&r1, &r1, &"u".into()));
    // The administrator reads everything and tells r1 and r2 apart.
    assert!(!indistinguishable(&r1, &r2, &ADMIN.into()));
}

#[test]
fn partial_states_compare_on_readable_content_only() {
    let a = secret_probe_state(&["v"]).partial();
    let b = secret_probe_state(&["j", "v"]).partial();
    let schema = Schema::new(
        [("n".into(), 1), ("p".into(), 1), ("t".into(), 1)],
        ["v", "j", "w"].map(Value::from),
    )
    .unwrap();
    assert!(data_indistinguishable(&a, &b, &"u".into(), &schema));
    assert!(!data_indistinguishable(&a, &b, &ADMIN.into(), &schema));
    let mut c = b.clone();
    c.db = a.db.clone();
    assert!(data_indistinguishable(&a, &c, &"u".into(), &schema));
}

#[test]
fn oracle_flags_the_trigger_leak() {
    let run = probe_run(&["v"]);
    // The derived judgment about the secret is not constant across
    // indistinguishable states: a state without the secret row matches
    // the readable data.
    let verdict = secure_data_oracle(&run, 3, &"u".into(), &ground("t", &["v"]), 24).unwrap();
    assert!(!verdict);
    // Readable atoms are fixed by the indistinguishability class.
    let verdict = secure_data_oracle(&run, 3, &"u".into(), &ground("n", &["v"]), 24).unwrap();
    assert!(verdict);
    // The cap is honored.
    assert!(matches!(
        secure_data_oracle(&run, 3, &"u".into(), &ground("t", &["v"]), 1),
        Err(OracleError::CapExceeded { .. })
    ));
}

#[test]
fn secure_judgments_pass_the_oracle_on_the_worked_example() {
    // The readable-view example at enumeration-friendly domain size.
    let schema = Schema::new(
        [("s".into(), 2), ("r".into(), 1), ("q".into(), 1)],
        ["1", "2", "3"].map(Value::from),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    db.insert(&schema, &"s".into(), vec![val("2"), val("3")])
        .unwrap();
    db.insert(&schema, &"r".into(), vec![val("3")]).unwrap();
    let v = crate::rc::View {
        id: "v".into(),
        owner: ADMIN.into(),
        query: crate::rc::Query::new(
            vec![crate::rc::Var::new("x"), crate::rc::Var::new("y")],
            Formula::raw_and(
                Formula::pred(
                    "s".into(),
                    vec![Term::Var("x".into()), Term::Var("y".into())],
                ),
                Formula::raw_or(
                    Formula::eq(Term::Var("x".into()), tconst("1")),
                    Formula::eq(Term::Var("y".into()), tconst("3")),
                ),
            ),
        )
        .unwrap(),
        mode: Mode::Owner,
    };
    let w = crate::rc::View {
        id: "w".into(),
        owner: ADMIN.into(),
        query: crate::rc::Query::new(
            vec![crate::rc::Var::new("x")],
            Formula::raw_or(
                Formula::pred("r".into(), vec![Term::Var("x".into())]),
                Formula::pred("q".into(), vec![Term::Var("x".into())]),
            ),
        )
        .unwrap(),
        mode: Mode::Owner,
    };
    let sec: BTreeSet<Grant> = [
        Grant {
            op: GrantOp::Plain,
            grantee: "u".into(),
            privilege: Privilege::Select("v".into()),
            grantor: ADMIN.into(),
        },
        Grant {
            op: GrantOp::Plain,
            grantee: "u".into(),
            privilege: Privilege::Select("w".into()),
            grantor: ADMIN.into(),
        },
    ]
    .into_iter()
    .collect();
    let state = SystemState::initial(
        config,
        db,
        ["admin", "u"].map(Name::from).into_iter().collect(),
        sec,
        Vec::new(),
        vec![v, w],
    )
    .unwrap();
    let run = Run::new(state.clone());
    let phi = Formula::raw_and(
        Formula::exists(
            "y".into(),
            Formula::pred("s".into(), vec![tconst("2"), Term::Var("y".into())]),
        ),
        Formula::raw_or(
            Formula::not(ground("r", &["1"])),
            Formula::exists(
                "y".into(),
                Formula::pred("s".into(), vec![tconst("1"), Term::Var("y".into())]),
            ),
        ),
    );
    // The rewriting certifies the judgment, and the brute-force oracle
    // agrees.
    assert!(crate::authz::secure(&"u".into(), &phi, &state));
    assert!(secure_data_oracle(&run, 1, &"u".into(), &phi, 24).unwrap());
}

#[test]
fn indistinguishability_is_an_equivalence_on_samples() {
    let mut r = crate::testkit::rng(61);
    let g = crate::testkit::GenConfig {
        steps: 5,
        ..Default::default()
    };
    let mut runs = Vec::new();
    for _ in 0..8 {
        runs.push(crate::testkit::gen_run(&mut r, &g, &AllowAll));
    }
    for a in &runs {
        let u = crate::testkit::pick_attacker(a);
        assert!(indistinguishable(a, a, &u));
    }
    for a in &runs {
        for b in &runs {
            let u = crate::testkit::pick_attacker(a);
            assert_eq!(
                indistinguishable(a, b, &u),
                indistinguishable(b, a, &u),
                "symmetry violated"
            );
        }
    }
    for a in &runs {
        for b in &runs {
            for c in &runs {
                let u = crate::testkit::pick_attacker(a);
                if indistinguishable(a, b, &u) && indistinguishable(b, c, &u) {
                    assert!(indistinguishable(a, c, &u), "transitivity violated");
                }
            }
        }
    }
}

#[test]
fn rollback_restores_knowledge_across_the_transaction() {
    // A trigger denial rolls the whole transaction back, so the attacker
    // carries knowledge across the segment and learns the insert never
    // stuck.
    struct DenyTriggerInsert;
    impl crate::kernel::Pdp for DenyTriggerInsert {
        fn name(&self) -> &'static str {
            "deny-trigger-insert"
        }
        fn decide(
            &self,
            state: &crate::kernel::SystemState,
            action: &Action,
        ) -> crate::kernel::Decision {
            // Deny exactly the trigger's statement: an insert into n
            // while a transaction is pending.
            if state.trigger().is_some() && matches!(action, Action::Insert { .. }) {
                crate::kernel::Decision::deny("trigger insert")
            } else {
                crate::kernel::Decision::permit("ok")
            }
        }
    }
    let run = execute(
        secret_probe_state(&["v"]),
        probe_actions(),
        &DenyTriggerInsert,
    )
    .unwrap();
    // delete(1→2), insert(2→3), denied trigger(3→4), select(4→5).
    assert!(run.state(4).sec_ex());
    assert!(!run.state(4).db.contains(&"p".into(), &[val("v")]));
    let d = derive(&run, &"u".into(), DeriveConfig::default());
    // Knowledge from before the rolled-back insert survives to the
    // post-rollback position, and the insert's absence is learned.
    assert!(d.holds(2, &Formula::not(ground("n", &["v"]))));
    assert!(d.holds(4, &Formula::not(ground("n", &["v"]))));
    assert!(d.holds(4, &Formula::not(ground("p", &["v"]))));
    // Soundness still holds on every judgment of this run.
    for j in d.judgments() {
        let state = run.state(j.pos);
        assert!(crate::rc::eval(
            &state.db,
            &j.sentence,
            &crate::rc::Assignment::new(),
            &state.view_env()
        )
        .unwrap());
    }
}

#[test]
fn executed_policy_trigger_reveals_its_condition() {
    // A trigger whose action grants a privilege changes the visible
    // policy, revealing that its condition held; when the policy cannot
    // have changed, the attacker learns the condition failed.
    let schema = Schema::new(
        [("p".into(), 1), ("t".into(), 1)],
        ["v", "w"].map(Value::from),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    db.insert(&schema, &"t".into(), vec![val("v")]).unwrap();
    let trigger = TriggerDef {
        id: "tg".into(),
        owner: ADMIN.into(),
        event: TriggerEvent::Insert,
        table: "p".into(),
        condition: Formula::pred("t".into(), vec![Term::Var(trigger_var(0))]),
        stmt: TriggerStmt::Grant {
            op: GrantOp::Plain,
            grantee: "u".into(),
            privilege: Privilege::Select("p".into()),
        },
        mode: Mode::Owner,
        seq: 0,
    };
    let state = SystemState::initial(
        config,
        db,
        ["admin", "u"].map(Name::from).into_iter().collect(),
        BTreeSet::new(),
        vec![trigger],
        Vec::new(),
    )
    .unwrap();
    let insert = |c: &str| Action::Insert {
        user: "u".into(),
        table: "p".into(),
        tuple: vec![val(c)],
    };
    // 'v' is in t: the grant executes and the condition leaks.
    let run = execute(state.clone(), [insert("v")], &AllowAll).unwrap();
    assert!(run.last().sec.len() == 1);
    let d = derive(&run, &"u".into(), DeriveConfig::default());
    assert!(d.holds(2, &ground("t", &["v"])));
    // 'w' is not in t: the policy stays empty and the negation leaks.
    let run = execute(state, [insert("w")], &AllowAll).unwrap();
    assert!(run.last().sec.is_empty());
    let d = derive(&run, &"u".into(), DeriveConfig::default());
    assert!(d.holds(2, &Formula::not(ground("t", &["w"]))));
}

#[test]
fn knowledge_does_not_cross_foreign_steps() {
    // Another user's update could change anything the observer cannot
    // see, so no propagation rule applies across it, even when the
    // touched table is unrelated.
    let initial = secret_probe_state(&["v"]);
    let actions = vec![
        Action::Delete {
            user: "u".into(),
            table: "n".into(),
            tuple: vec![val("v")],
        },
        // The administrator touches p; u cannot see whether it happened.
        Action::Insert {
            user: ADMIN.into(),
            table: "p".into(),
            tuple: vec![val("w")],
        },
    ];
    let run = execute(initial, actions, &AllowAll).unwrap();
    let d = derive(&run, &"u".into(), DeriveConfig::default());
    let fact = Formula::not(ground("n", &["v"]));
    assert!(d.holds(2, &fact));
    // Positions after the foreign step know nothing about n. (The
    // foreign insert did fire the trigger on p, whose invoker is the
    // administrator, so that firing is masked too.)
    for pos in 3..=run.len() {
        assert!(
            !d.holds(pos, &fact),
            "knowledge leaked across a foreign step to position {pos}"
        );
    }
}
