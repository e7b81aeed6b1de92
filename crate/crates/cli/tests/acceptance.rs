//! The acceptance suite: one test per criterion, each printing a PASS
//! line. Scenario goldens live next to this file; the fuzz corpora are
//! seeded and deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use secdb_cli::scenario::parse_scenario;
use secdb_cli::session::{pdp_by_name, run_scenario};
use secdb_core::attacker::{derive, secure_data_oracle, DeriveConfig};
use secdb_core::authz::{
    appr_det, auth_full, contained, containment_sets, determines_brute, f_int, get_info_v,
    rewrites_for, secure, PdpF,
};
use secdb_core::kernel::{
    Action, AllowAll, Grant, GrantOp, Label, Privilege, SystemConfig, SystemState, ADMIN,
};
use secdb_core::rc::{
    eval, Assignment, ConstraintKind, DatabaseState, Formula, Mode, Name, Query, Schema, Term,
    Value, Var, View,
};
use secdb_core::testkit::{
    self, assignments, contained_on_all_states, gen_initial_state, gen_run, gen_sentence,
    gen_system_config, pick_attacker, GenConfig,
};

fn val(s: &str) -> Value {
    Value::from(s)
}

fn tvar(s: &str) -> Term {
    Term::Var(Var::new(s))
}

fn tconst(s: &str) -> Term {
    Term::Const(Value::from(s))
}

fn scenario_path(name: &str) -> String {
    format!(
        "{}/scenarios/attacks/{name}.scn",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn golden_path(name: &str, pdp: &str) -> String {
    format!(
        "{}/tests/golden/{name}.{pdp}.golden",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn run_attack(name: &str, pdp: &str) -> (secdb_cli::session::RunOutcome, Duration) {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file");
    let scenario = parse_scenario(&text).expect("scenario parses");
    let start = Instant::now();
    let outcome = run_scenario(&scenario, pdp_by_name(pdp).unwrap()).expect("scenario runs");
    (outcome, start.elapsed())
}

fn assert_golden(name: &str, pdp: &str, outcome: &secdb_cli::session::RunOutcome) {
    let expected = std::fs::read_to_string(golden_path(name, pdp)).expect("golden file");
    let mut actual = String::new();
    for r in &outcome.records {
        actual.push_str(&r.to_string());
        actual.push('\n');
    }
    assert_eq!(
        actual, expected,
        "{name}/{pdp} trace diverged from its golden"
    );
}

fn grant_action(g: &Grant) -> Action {
    Action::Grant {
        op: g.op,
        grantee: g.grantee.clone(),
        privilege: g.privilege.clone(),
        grantor: g.grantor.clone(),
    }
}

fn policy_consistent(state: &SystemState) -> bool {
    state
        .sec
        .iter()
        .all(|g| auth_full(state, &Label::Act(grant_action(g))))
}

#[test]
fn criterion_1_attack_corpus() {
    // (a) Unprotected, each attack succeeds exactly as described; (b) the
    // composed decision point blocks each one at its documented step.
    for name in ["attack1", "attack2", "attack3", "attack4", "attack5"] {
        for pdp in ["allow-all", "f"] {
            let (outcome, elapsed) = run_attack(name, pdp);
            assert!(
                elapsed < Duration::from_secs(1),
                "{name}/{pdp} took {elapsed:?}"
            );
            assert_golden(name, pdp, &outcome);
            assert!(outcome.violations.is_empty());
        }
    }

    // Attack 1: the protected table is emptied without protection and
    // preserved (with the whole transaction rolled back) under f.
    let (open, _) = run_attack("attack1", "allow-all");
    assert!(!open.run.last().db.contains(&"s".into(), &[val("z")]));
    let (guarded, _) = run_attack("attack1", "f");
    let last = guarded.run.last();
    assert!(last.db.contains(&"s".into(), &[val("z")]));
    assert!(!last.db.contains(&"p".into(), &[val("v")]));
    assert!(guarded.records[9].label.starts_with("TRIGGER") && !guarded.records[9].permitted);

    // Attack 2: the view grant goes through unprotected and u2 reads the
    // secret; under f the grant is denied and nothing reaches u2.
    let (open, _) = run_attack("attack2", "allow-all");
    assert_eq!(open.records[6].result, secdb_cli::trace::StepResult::True);
    let (guarded, _) = run_attack("attack2", "f");
    assert!(
        !guarded.records[5].permitted,
        "the view grant must be denied"
    );
    let leaked = Grant {
        op: GrantOp::Plain,
        grantee: "u2".into(),
        privilege: Privilege::Select("v".into()),
        grantor: "u1".into(),
    };
    assert!(!guarded.run.last().sec.contains(&leaked));
    assert!(!guarded.records[6].permitted);

    // Attack 3: the unprotected run reaches a policy with an unjustified
    // grant; under f the revoke that would orphan it is denied and every
    // reachable policy stays consistent.
    let (open, _) = run_attack("attack3", "allow-all");
    assert!(!policy_consistent(open.run.last()));
    let (guarded, _) = run_attack("attack3", "f");
    assert!(!guarded.records[8].permitted, "the revoke must be denied");
    for state in &guarded.run.states {
        assert!(policy_consistent(state));
    }

    // Attack 4: the probing insert raises the key violation, and the
    // derived violation sentence is insecure; under f the insert is
    // denied outright.
    let (open, _) = run_attack("attack4", "allow-all");
    let last_record = open.records.last().unwrap();
    assert!(last_record.permitted && last_record.violations == vec![Name::from("pk")]);
    let schema = open.run.state(1).config.schema.clone();
    let pk = open.run.state(1).config.constraints[0].clone();
    let probe = Action::Insert {
        user: "u".into(),
        table: "s".into(),
        tuple: vec![val("bob"), val("2")],
    };
    let learned = get_info_v(&pk, &probe, &schema);
    let derivation = derive(&open.run, &"u".into(), DeriveConfig::default());
    let position = open.run.len();
    assert!(
        derivation.holds(position, &learned),
        "the key-violation sentence must be derived"
    );
    assert!(
        !secure_data_oracle(&open.run, position, &"u".into(), &learned, 24).unwrap(),
        "the derived sentence must distinguish indistinguishable states"
    );
    let (guarded, _) = run_attack("attack4", "f");
    let last_record = guarded.records.last().unwrap();
    assert!(!last_record.permitted && last_record.violations.is_empty());
    assert_eq!(guarded.run.last().db, guarded.run.state(4).db);

    // Attack 5: the trigger's condition leaks the secret membership, and
    // the judgment engine derives it; under f the condition is denied and
    // every judgment the attacker still derives is secure.
    let (open, _) = run_attack("attack5", "allow-all");
    let secret = Formula::pred("t".into(), vec![tconst("v")]);
    let derivation = derive(&open.run, &"u".into(), DeriveConfig::default());
    assert!(derivation.holds(11, &secret), "the secret must be derived");
    assert!(!secure_data_oracle(&open.run, 11, &"u".into(), &secret, 24).unwrap());
    let (guarded, _) = run_attack("attack5", "f");
    assert!(!guarded.records[10].permitted, "the trigger must be denied");
    assert!(!guarded.run.last().db.contains(&"p".into(), &[val("v")]));
    let derivation = derive(&guarded.run, &"u".into(), DeriveConfig::default());
    assert!(!derivation.exhausted);
    for j in derivation.judgments() {
        assert!(
            secure_data_oracle(&guarded.run, j.pos, &"u".into(), &j.sentence, 24).unwrap(),
            "insecure judgment {} at {} under the guarded run",
            j.sentence,
            j.pos
        );
    }
    println!("ACCEPTANCE 1 attack corpus: PASS");
}

/// Three unary tables, a stacked pair of views, and the sharing decision
/// from the delegation example.
fn delegation_fixture(all_grant_option: bool) -> (SystemState, Action) {
    let schema = Schema::new(
        [("r".into(), 1), ("t".into(), 1), ("z".into(), 1)],
        ["a", "b", "c"].map(Value::from),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let op_r = if all_grant_option {
        GrantOp::WithGrantOption
    } else {
        GrantOp::Plain
    };
    let mk = |op, object: &str| Grant {
        op,
        grantee: "u".into(),
        privilege: Privilege::Select(object.into()),
        grantor: ADMIN.into(),
    };
    let sec: BTreeSet<Grant> = [
        mk(op_r, "r"),
        mk(GrantOp::WithGrantOption, "t"),
        mk(GrantOp::WithGrantOption, "z"),
    ]
    .into_iter()
    .collect();
    let v = View {
        id: "v".into(),
        owner: ADMIN.into(),
        query: Query::new(
            vec![Var::new("x")],
            Formula::raw_and(
                Formula::pred("t".into(), vec![tvar("x")]),
                Formula::pred("z".into(), vec![tvar("x")]),
            ),
        )
        .unwrap(),
        mode: Mode::Owner,
    };
    let mut state = SystemState::initial(
        config,
        DatabaseState::empty(&schema),
        ["admin", "u", "u2"].map(Name::from).into_iter().collect(),
        sec,
        Vec::new(),
        vec![v],
    )
    .unwrap();
    state.views.push(View {
        id: "w".into(),
        owner: "u".into(),
        query: Query::new(
            vec![Var::new("x")],
            Formula::raw_or(
                Formula::pred("r".into(), vec![tvar("x")]),
                Formula::pred("v".into(), vec![tvar("x")]),
            ),
        )
        .unwrap(),
        mode: Mode::Owner,
    });
    let action = Action::Grant {
        op: GrantOp::Plain,
        grantee: "u2".into(),
        privilege: Privilege::Select("w".into()),
        grantor: "u".into(),
    };
    (state, action)
}

#[test]
fn criterion_2_view_sharing_verdicts() {
    let (state, action) = delegation_fixture(false);
    assert!(!f_int(&state, &action).permit);
    let (state, action) = delegation_fixture(true);
    assert!(f_int(&state, &action).permit);
    println!("ACCEPTANCE 2 view-sharing verdicts: PASS");
}

/// The worked confidentiality example over the five-value domain.
fn fig8_state() -> SystemState {
    let schema = Schema::new(
        [("s".into(), 2), ("r".into(), 1), ("q".into(), 1)],
        ["1", "2", "3", "4", "5"].map(Value::from),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    for (x, y) in [("1", "1"), ("2", "3"), ("4", "2")] {
        db.insert(&schema, &"s".into(), vec![val(x), val(y)])
            .unwrap();
    }
    db.insert(&schema, &"r".into(), vec![val("3")]).unwrap();
    db.insert(&schema, &"q".into(), vec![val("4")]).unwrap();
    let v = View {
        id: "v".into(),
        owner: ADMIN.into(),
        query: Query::new(
            vec![Var::new("x"), Var::new("y")],
            Formula::raw_and(
                Formula::pred("s".into(), vec![tvar("x"), tvar("y")]),
                Formula::raw_or(
                    Formula::eq(tvar("x"), tconst("1")),
                    Formula::eq(tvar("y"), tconst("3")),
                ),
            ),
        )
        .unwrap(),
        mode: Mode::Owner,
    };
    let w = View {
        id: "w".into(),
        owner: ADMIN.into(),
        query: Query::new(
            vec![Var::new("x")],
            Formula::raw_or(
                Formula::pred("r".into(), vec![tvar("x")]),
                Formula::pred("q".into(), vec![tvar("x")]),
            ),
        )
        .unwrap(),
        mode: Mode::Owner,
    };
    let sec: BTreeSet<Grant> = ["v", "w"]
        .into_iter()
        .map(|o| Grant {
            op: GrantOp::Plain,
            grantee: "u".into(),
            privilege: Privilege::Select(o.into()),
            grantor: ADMIN.into(),
        })
        .collect();
    SystemState::initial(
        config,
        db,
        ["admin", "u"].map(Name::from).into_iter().collect(),
        sec,
        Vec::new(),
        vec![v, w],
    )
    .unwrap()
}

fn fig8_sentence() -> Formula {
    Formula::raw_and(
        Formula::exists(
            Var::new("y"),
            Formula::pred("s".into(), vec![tconst("2"), tvar("y")]),
        ),
        Formula::raw_or(
            Formula::not(Formula::pred("r".into(), vec![tconst("5")])),
            Formula::exists(
                Var::new("y"),
                Formula::pred("s".into(), vec![tconst("4"), tvar("y")]),
            ),
        ),
    )
}

/// Boolean combination of ground atoms, evaluated under a valuation.
fn prop_eval(f: &Formula, valuation: &BTreeMap<Formula, bool>) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Pred(..) => *valuation
            .get(f)
            .unwrap_or_else(|| panic!("unexpected atom {f}")),
        Formula::Eq(Term::Const(a), Term::Const(b)) => a == b,
        Formula::Not(g) => !prop_eval(g, valuation),
        Formula::And(a, b) => prop_eval(a, valuation) && prop_eval(b, valuation),
        Formula::Or(a, b) => prop_eval(a, valuation) || prop_eval(b, valuation),
        other => panic!("not a ground combination: {other}"),
    }
}

fn ground_atoms(f: &Formula, out: &mut BTreeSet<Formula>) {
    match f {
        Formula::Pred(..) => {
            out.insert(f.clone());
        }
        Formula::Not(g) => ground_atoms(g, out),
        Formula::And(a, b) | Formula::Or(a, b) => {
            ground_atoms(a, out);
            ground_atoms(b, out);
        }
        _ => {}
    }
}

#[test]
fn criterion_3_rewriting_example() {
    let state = fig8_state();
    let phi = fig8_sentence();
    let user: Name = "u".into();
    assert!(secure(&user, &phi, &state), "the worked judgment is secure");

    let (ctx, _, top, bot) = rewrites_for(&user, &phi, &state).unwrap();
    // The expected shapes over the projection vocabulary.
    let vy = |c: &str| Formula::pred("v@2".into(), vec![tconst(c)]);
    let expected_top = Formula::raw_and(
        vy("2"),
        Formula::raw_or(
            Formula::not(Formula::pred("w".into(), vec![tconst("5")])),
            vy("4"),
        ),
    );

    // Logical equivalence, first as a complete propositional check over
    // the ground atoms, then by evaluation on database states over the
    // five-value domain realizing every valuation.
    let mut atoms = BTreeSet::new();
    ground_atoms(&top, &mut atoms);
    ground_atoms(&expected_top, &mut atoms);
    ground_atoms(&bot, &mut atoms);
    let atoms: Vec<Formula> = atoms.into_iter().collect();
    assert_eq!(atoms.len(), 3, "three ground atoms drive the example");
    let schema = &state.config.schema;
    let env = state.view_env();
    for mask in 0..(1u32 << atoms.len()) {
        let valuation: BTreeMap<Formula, bool> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), mask & (1 << i) != 0))
            .collect();
        assert_eq!(
            prop_eval(&top, &valuation),
            prop_eval(&expected_top, &valuation),
            "positive rewriting diverges at {valuation:?}"
        );
        assert!(
            prop_eval(&bot, &valuation),
            "negative rewriting must be constant true"
        );

        // Realize the valuation as a database over {1..5}: (2,3) and
        // (4,3) drive the two projections, 5 in r drives the union view.
        let mut db = DatabaseState::empty(schema);
        if valuation[&vy("2")] {
            db.insert(schema, &"s".into(), vec![val("2"), val("3")])
                .unwrap();
        }
        if valuation[&vy("4")] {
            db.insert(schema, &"s".into(), vec![val("4"), val("3")])
                .unwrap();
        }
        if valuation[&Formula::pred("w".into(), vec![tconst("5")])] {
            db.insert(schema, &"r".into(), vec![val("5")]).unwrap();
        }
        let nu = Assignment::new();
        let top_val = eval(&db, &ctx.vocab.inline(&top), &nu, &env).unwrap();
        let expected_val = eval(&db, &ctx.vocab.inline(&expected_top), &nu, &env).unwrap();
        let bot_val = eval(&db, &ctx.vocab.inline(&bot), &nu, &env).unwrap();
        assert_eq!(top_val, expected_val);
        assert_eq!(top_val, prop_eval(&top, &valuation));
        assert!(bot_val);
    }

    // The containment sets match the worked example exactly.
    let syms: BTreeSet<Name> = ["s@2".into(), "r".into()].into_iter().collect();
    let sets = containment_sets(&syms, &ctx.vocab, &state.views, &state.config);
    let readable: BTreeSet<Name> = ["v", "w"].map(Name::from).into_iter().collect();
    let filtered =
        |m: &BTreeMap<Name, Vec<secdb_core::authz::ProjPred>>, k: &str| -> BTreeSet<String> {
            m[&Name::from(k)]
                .iter()
                .filter(|p| readable.contains(&p.base))
                .map(|p| p.sym.to_string())
                .collect()
        };
    assert_eq!(
        filtered(&sets.below, "s@2"),
        BTreeSet::from(["v@2".to_string()])
    );
    assert!(filtered(&sets.above, "s@2").is_empty());
    assert!(filtered(&sets.below, "r").is_empty());
    assert_eq!(
        filtered(&sets.above, "r"),
        BTreeSet::from(["w".to_string()])
    );
    println!("ACCEPTANCE 3 rewriting example: PASS");
}

#[test]
fn criterion_4_attacker_soundness() {
    let start = Instant::now();
    let mut r = testkit::rng(104);
    let g = GenConfig::default();
    let cfg = DeriveConfig {
        budget: 700,
        ..Default::default()
    };
    let mut judgment_count = 0usize;
    for round in 0..1000 {
        let run = if round % 3 == 0 {
            gen_run(&mut r, &g, &PdpF)
        } else {
            gen_run(&mut r, &g, &AllowAll)
        };
        let user = pick_attacker(&run);
        let derivation = derive(&run, &user, cfg.clone());
        for j in derivation.judgments() {
            judgment_count += 1;
            let state = run.state(j.pos);
            let value = eval(
                &state.db,
                &j.sentence,
                &Assignment::new(),
                &state.view_env(),
            )
            .unwrap();
            assert!(
                value,
                "round {round}: unsound judgment {} at {}",
                j.sentence, j.pos
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed < Duration::from_secs(60),
        "soundness sweep took {elapsed:?}"
    );
    assert!(
        judgment_count > 10_000,
        "corpus produced {judgment_count} judgments"
    );
    println!("ACCEPTANCE 4 attacker soundness: PASS ({judgment_count} judgments, {elapsed:?})");
}

#[test]
fn criterion_5_data_confidentiality() {
    let mut r = testkit::rng(105);
    let g = GenConfig {
        max_tuple_slots: 12,
        ..Default::default()
    };
    let cfg = DeriveConfig {
        budget: 400,
        ..Default::default()
    };
    let mut checked = 0usize;
    let mut cache: BTreeMap<(String, Formula), bool> = BTreeMap::new();
    for round in 0..1000 {
        let run = gen_run(&mut r, &g, &PdpF);
        let user = pick_attacker(&run);
        if user.as_str() == ADMIN {
            continue;
        }
        let derivation = derive(&run, &user, cfg.clone());
        for j in derivation.judgments() {
            let state = run.state(j.pos);
            let key = (format!("{:?}|{user}", state.partial()), j.sentence.clone());
            let verdict = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = secure_data_oracle(&run, j.pos, &user, &j.sentence, 16)
                        .expect("oracle within cap");
                    cache.insert(key, v);
                    v
                }
            };
            checked += 1;
            assert!(
                verdict,
                "round {round}: insecure judgment {} at {} under the guarded run",
                j.sentence, j.pos
            );
        }
    }
    assert!(checked > 5_000, "only {checked} judgments checked");
    println!("ACCEPTANCE 5 data confidentiality: PASS ({checked} judgments)");
}

#[test]
fn criterion_6_database_integrity() {
    let mut r = testkit::rng(106);
    let g = GenConfig {
        max_tuple_slots: 12,
        ..Default::default()
    };
    let mut transitions = 0usize;
    for round in 0..400 {
        let run = gen_run(&mut r, &g, &PdpF);
        for i in 1..run.len() {
            let pre = run.state(i);
            let post = run.state(i + 1);
            if post.sec_ex() {
                continue;
            }
            transitions += 1;
            assert!(
                auth_full(pre, run.label(i)),
                "round {round}: unauthorized transition {} at {i}",
                run.label(i)
            );
        }
        for state in &run.states {
            assert!(
                policy_consistent(state),
                "round {round}: inconsistent policy"
            );
        }
    }
    assert!(transitions > 1_000);
    println!("ACCEPTANCE 6 database integrity: PASS ({transitions} transitions)");
}

/// Builds a pair of formulas relatable by the containment rules.
fn gen_derivable_pair(
    r: &mut testkit::ChaCha8Rng,
    config: &SystemConfig,
) -> Option<(Formula, Formula)> {
    use rand::prelude::*;
    let tables: Vec<(Name, usize)> = config
        .schema
        .tables()
        .map(|(n, a)| (n.clone(), a))
        .collect();
    // Seed: identity on an atom, or an inclusion dependency instance.
    let mut pair = if r.gen_bool(0.3) {
        let id = config.constraints.iter().find_map(|c| match &c.kind {
            ConstraintKind::Id { from, to, prefix } => Some((from.clone(), to.clone(), *prefix)),
            _ => None,
        })?;
        let (from, to, prefix) = id;
        let fa = config.schema.arity(&from)?;
        let ta = config.schema.arity(&to)?;
        let shared: Vec<Var> = (0..prefix).map(|i| Var::numbered("s", i)).collect();
        let make = |table: &Name, arity: usize| {
            let extra: Vec<Var> = (prefix..arity).map(|i| Var::numbered("e", i)).collect();
            let mut args: Vec<Term> = shared.iter().cloned().map(Term::Var).collect();
            args.extend(extra.iter().cloned().map(Term::Var));
            let mut f = Formula::pred(table.clone(), args);
            for v in extra.into_iter().rev() {
                f = Formula::exists(v, f);
            }
            f
        };
        (make(&from, fa), make(&to, ta))
    } else {
        let (table, arity) = tables.choose(r)?.clone();
        let vars: Vec<Var> = (0..arity).map(|i| Var::numbered("s", i)).collect();
        let atom = Formula::pred(table, vars.iter().cloned().map(Term::Var).collect());
        (atom.clone(), atom)
    };
    // Layers: conjunct on the left, disjunct on the right, or a parallel
    // projection.
    let domain: Vec<Value> = config.schema.domain().iter().cloned().collect();
    for _ in 0..r.gen_range(0..3) {
        match r.gen_range(0..3) {
            0 => {
                let free: Vec<Var> = pair.0.free_vars().into_iter().collect();
                if free.is_empty() {
                    continue;
                }
                let v = free.choose(r)?.clone();
                let c = domain.choose(r)?.clone();
                let extra = Formula::eq(Term::Var(v), Term::Const(c));
                pair.0 = Formula::raw_and(pair.0, extra);
            }
            1 => {
                let free: Vec<Var> = pair.1.free_vars().into_iter().collect();
                if free.is_empty() {
                    continue;
                }
                let v = free.choose(r)?.clone();
                let c = domain.choose(r)?.clone();
                let extra = Formula::eq(Term::Var(v), Term::Const(c));
                pair.1 = Formula::raw_or(pair.1, extra);
            }
            _ => {
                let fa: Vec<Var> = pair.0.free_vars().into_iter().collect();
                let fb: Vec<Var> = pair.1.free_vars().into_iter().collect();
                if fa.len() != fb.len() || fa.len() < 2 {
                    continue;
                }
                let i = r.gen_range(0..fa.len());
                pair = (
                    Formula::exists(fa[i].clone(), pair.0),
                    Formula::exists(fb[i].clone(), pair.1),
                );
            }
        }
    }
    if pair.0.free_vars().len() != pair.1.free_vars().len() || pair.0.free_vars().is_empty() {
        return None;
    }
    Some(pair)
}

/// A formula the syntactic determinacy check accepts over the table set.
fn gen_determined_formula(
    r: &mut testkit::ChaCha8Rng,
    config: &SystemConfig,
    t_set: &BTreeSet<Name>,
    depth: usize,
) -> Formula {
    use rand::prelude::*;
    if depth == 0 || t_set.is_empty() {
        if let Some(t) = t_set.iter().choose(r) {
            let arity = config.schema.arity(t).unwrap();
            let args: Vec<Term> = (0..arity)
                .map(|i| Term::Var(Var::numbered("d", i)))
                .collect();
            return Formula::pred(t.clone(), args);
        }
        return Formula::True;
    }
    match r.gen_range(0..5) {
        0 => Formula::raw_and(
            gen_determined_formula(r, config, t_set, depth - 1),
            gen_determined_formula(r, config, t_set, depth - 1),
        ),
        1 => Formula::raw_or(
            gen_determined_formula(r, config, t_set, depth - 1),
            gen_determined_formula(r, config, t_set, depth - 1),
        ),
        2 => Formula::not(gen_determined_formula(r, config, t_set, depth - 1)),
        3 => {
            let inner = gen_determined_formula(r, config, t_set, depth - 1);
            match inner.free_vars().into_iter().next() {
                Some(v) => Formula::exists(v, inner),
                None => inner,
            }
        }
        _ => gen_determined_formula(r, config, t_set, 0),
    }
}

#[test]
fn criterion_7_sound_approximation_suites() {
    use rand::prelude::*;
    // (a) Derivable containments hold semantically.
    let mut r = testkit::rng(1071);
    let g = GenConfig {
        max_tuple_slots: 10,
        ..Default::default()
    };
    let mut pairs = 0usize;
    while pairs < 500 {
        let config = gen_system_config(&mut r, &g);
        for _ in 0..5 {
            let Some((a, b)) = gen_derivable_pair(&mut r, &config) else {
                continue;
            };
            if !contained(&a, &b, &config) {
                continue;
            }
            assert!(
                contained_on_all_states(&config.schema, &config.constraints, &[], &a, &b),
                "containment {a} ⊆ {b} fails semantically"
            );
            pairs += 1;
        }
    }

    // (b) Accepted determinacy instances hold under enumeration.
    let mut r = testkit::rng(1072);
    let mut dets = 0usize;
    while dets < 200 {
        let config = gen_system_config(&mut r, &g);
        let state = gen_initial_state(&mut r, config.clone());
        let all: Vec<Name> = config.schema.table_names().cloned().collect();
        let t_set: BTreeSet<Name> = all.iter().filter(|_| r.gen_bool(0.7)).cloned().collect();
        let phi = gen_determined_formula(&mut r, &config, &t_set, 2);
        if !appr_det(&t_set, &[], &phi, &state) {
            continue;
        }
        let free: Vec<Var> = phi.free_vars().into_iter().collect();
        let Ok(q) = Query::new(free, phi.clone()) else {
            continue;
        };
        assert!(
            determines_brute(&t_set, &[], &q, &state),
            "determinacy of {phi} over {t_set:?} fails under enumeration"
        );
        dets += 1;
    }

    // (c) Certified-secure judgments pass the brute-force oracle.
    let mut r = testkit::rng(1073);
    let mut secures = 0usize;
    let mut attempts = 0usize;
    while secures < 500 {
        attempts += 1;
        assert!(attempts < 20_000, "not enough certified-secure samples");
        let config = gen_system_config(&mut r, &g);
        let state = gen_initial_state(&mut r, config);
        let phi = gen_sentence(&mut r, &state);
        let user: Name = "u1".into();
        if !state.users.contains(&user) {
            continue;
        }
        if !secure(&user, &phi, &state) {
            continue;
        }
        let run = secdb_core::kernel::Run::new(state);
        assert!(
            secure_data_oracle(&run, 1, &user, &phi, 16).expect("oracle within cap"),
            "certified-secure sentence {phi} failed the oracle"
        );
        secures += 1;
    }
    println!(
        "ACCEPTANCE 7 sound approximations: PASS ({pairs} containments, {dets} determinacies, {secures} secure judgments)"
    );
}

#[test]
fn criterion_8_rewriting_laws() {
    let mut r = testkit::rng(108);
    let g = GenConfig {
        max_tuple_slots: 12,
        ..Default::default()
    };
    let mut samples = 0usize;
    while samples < 300 {
        let config = gen_system_config(&mut r, &g);
        let state = gen_initial_state(&mut r, config.clone());
        let closed = gen_sentence(&mut r, &state);
        // Open one constant into a free variable to exercise assignments.
        let phi = open_one_constant(&closed);
        let user: Name = "u1".into();
        if !state.users.contains(&user) {
            continue;
        }
        let Ok((ctx, abstracted, top, bot)) = rewrites_for(&user, &phi, &state) else {
            continue;
        };
        samples += 1;
        let env = state.view_env();
        let universe: Vec<Value> = config.schema.domain().iter().cloned().collect();
        let free: Vec<Var> = phi.free_vars().into_iter().collect();
        let inl_top = ctx.vocab.inline(&top);
        let inl_bot = ctx.vocab.inline(&bot);
        for nu in assignments(&free, &universe) {
            let v_top =
                secdb_core::rc::eval_over(&state.db, &inl_top, &nu, &env, &universe).unwrap();
            let v_bot =
                secdb_core::rc::eval_over(&state.db, &inl_bot, &nu, &env, &universe).unwrap();
            let v_phi = secdb_core::rc::eval_over(&state.db, &phi, &nu, &env, &universe).unwrap();
            assert!(!v_top || v_phi, "positive rewriting overshot on {phi}");
            assert!(v_bot || !v_phi, "negative rewriting undershot on {phi}");
        }
        let volume = ctx.vocab.size() + 1;
        assert!(top.size() <= volume * abstracted.size());
        assert!(bot.size() <= volume * abstracted.size());

        // Quantified closures of the sample exercise the boundedness
        // fallbacks of both polarities.
        for quantified in [
            free.iter().fold(phi.clone(), |acc, v| {
                Formula::forall(v.clone(), acc)
            }),
            free.iter().fold(phi.clone(), |acc, v| {
                Formula::exists(v.clone(), acc)
            }),
        ] {
            let Ok((qctx, qabs, qtop, qbot)) = rewrites_for(&user, &quantified, &state) else {
                continue;
            };
            let nu = Assignment::new();
            let v_top = secdb_core::rc::eval_over(
                &state.db,
                &qctx.vocab.inline(&qtop),
                &nu,
                &env,
                &universe,
            )
            .unwrap();
            let v_bot = secdb_core::rc::eval_over(
                &state.db,
                &qctx.vocab.inline(&qbot),
                &nu,
                &env,
                &universe,
            )
            .unwrap();
            let v_phi =
                secdb_core::rc::eval_over(&state.db, &quantified, &nu, &env, &universe).unwrap();
            assert!(!v_top || v_phi, "positive rewriting overshot on {quantified}");
            assert!(v_bot || !v_phi, "negative rewriting undershot on {quantified}");
            let volume = qctx.vocab.size() + 1;
            assert!(qtop.size() <= volume * qabs.size());
            assert!(qbot.size() <= volume * qabs.size());
        }
    }
    println!("ACCEPTANCE 8 rewriting laws: PASS ({samples} samples)");
}

fn open_one_constant(phi: &Formula) -> Formula {
    // Replace the first constant argument encountered by a fresh free
    // variable; sentences without constants stay closed.
    fn rec(f: &Formula, done: &mut bool) -> Formula {
        match f {
            Formula::Pred(name, args) => {
                let mut new_args = Vec::with_capacity(args.len());
                for t in args {
                    match t {
                        Term::Const(_) if !*done => {
                            *done = true;
                            new_args.push(Term::Var(Var::new("fv")));
                        }
                        other => new_args.push(other.clone()),
                    }
                }
                Formula::Pred(name.clone(), new_args)
            }
            Formula::Not(g) => Formula::not(rec(g, done)),
            Formula::And(a, b) => Formula::raw_and(rec(a, done), rec(b, done)),
            Formula::Or(a, b) => Formula::raw_or(rec(a, done), rec(b, done)),
            Formula::Exists(v, g) => Formula::exists(v.clone(), rec(g, done)),
            Formula::Forall(v, g) => Formula::forall(v.clone(), rec(g, done)),
            other => other.clone(),
        }
    }
    let mut done = false;
    rec(phi, &mut done)
}

#[test]
fn perf_smoke_secure_at_scale() {
    // The worked judgment stays fast when the binary table holds 10^4
    // rows.
    let mut values: Vec<Value> = (0..200).map(|i| Value::from(format!("n{i:03}"))).collect();
    values.extend(["1", "2", "3", "4", "5"].map(Value::from));
    let schema = Schema::new(
        [("s".into(), 2), ("r".into(), 1), ("q".into(), 1)],
        values.clone(),
    )
    .unwrap();
    let config = Arc::new(SystemConfig::new(schema.clone(), vec![]).unwrap());
    let mut db = DatabaseState::empty(&schema);
    let noise: Vec<Value> = (0..200).map(|i| Value::from(format!("n{i:03}"))).collect();
    let mut k = 0usize;
    'fill: for a in &noise {
        for b in &noise {
            db.insert(&schema, &"s".into(), vec![a.clone(), b.clone()])
                .unwrap();
            k += 1;
            if k >= 10_000 {
                break 'fill;
            }
        }
    }
    for (x, y) in [("1", "1"), ("2", "3"), ("4", "2")] {
        db.insert(&schema, &"s".into(), vec![val(x), val(y)])
            .unwrap();
    }
    db.insert(&schema, &"r".into(), vec![val("3")]).unwrap();
    db.insert(&schema, &"q".into(), vec![val("4")]).unwrap();
    let base = fig8_state();
    let state = SystemState::initial(
        config,
        db,
        base.users.clone(),
        base.sec.clone(),
        Vec::new(),
        base.views.clone(),
    )
    .unwrap();
    let phi = fig8_sentence();
    // Warm-up outside the timed section.
    let _ = secure(&"u".into(), &phi, &state);
    let start = Instant::now();
    let verdict = secure(&"u".into(), &phi, &state);
    let elapsed = start.elapsed();
    assert!(verdict);
    assert!(
        elapsed < Duration::from_millis(50),
        "secure() took {elapsed:?} at 10^4 rows"
    );
    println!("ACCEPTANCE perf smoke: PASS ({elapsed:?})");
}
