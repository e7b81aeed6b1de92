use std::collections::BTreeSet;

use crate::authz::{get_info_s, get_info_v};
use crate::kernel::{Action, Effect, Label, Run, TriggerStmt};
use crate::rc::{inline_views, Constraint, ConstraintKind, Formula, Name, Term, Value, Var};

/// A derived fact: at the `pos`-th state of the run, the user knows the
/// sentence holds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Judgment {
    pub pos: usize,
    pub sentence: Formula,
}

/// Knobs of the derivation engine. The reasoning closure (conjunction,
/// disjunction, and ground modus ponens with constraint instances) is a
/// bounded stand-in for unrestricted finite-model entailment; any subset
/// keeps the engine sound.
#[derive(Debug, Clone)]
pub struct DeriveConfig {
    /// Maximum number of stored judgments before the engine reports
    /// exhaustion.
    pub budget: usize,
    /// Rounds of the reasoning closure.
    pub reasoning_depth: usize,
    /// Size ceiling for sentences built by the reasoning closure.
    pub reasoning_size_cap: usize,
}

impl Default for DeriveConfig {
    fn default() -> Self {
        DeriveConfig {
            budget: 20_000,
            reasoning_depth: 2,
            reasoning_size_cap: 24,
        }
    }
}

/// The saturated judgment sets, one per run position.
#[derive(Debug, Clone)]
pub struct Derivation {
    per_position: Vec<BTreeSet<Formula>>,
    pub exhausted: bool,
}

impl Derivation {
    pub fn at(&self, pos: usize) -> &BTreeSet<Formula> {
        &self.per_position[pos - 1]
    }

    pub fn holds(&self, pos: usize, phi: &Formula) -> bool {
        self.per_position[pos - 1].contains(&canon(phi))
    }

    pub fn judgments(&self) -> impl Iterator<Item = Judgment> + '_ {
        self.per_position.iter().enumerate().flat_map(|(i, set)| {
            set.iter().map(move |s| Judgment {
                pos: i + 1,
                sentence: s.clone(),
            })
        })
    }

    pub fn len(&self) -> usize {
        self.per_position.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Canonical sentence form: double negations removed, pinned existentials
/// substituted away (`∃x. ψ ∧ x = c` becomes `ψ[x ↦ c]`), ground
/// equalities folded, and bound variables alpha-renamed. All steps are
/// equivalence-preserving.
pub fn canon(phi: &Formula) -> Formula {
    simplify(phi).alpha_canonical()
}

fn simplify(phi: &Formula) -> Formula {
    match phi {
        Formula::Not(inner) => match simplify(inner) {
            Formula::Not(f) => *f,
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            f => Formula::not(f),
        },
        Formula::And(a, b) => match (simplify(a), simplify(b)) {
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (x, y) => Formula::and(x, y),
        },
        Formula::Or(a, b) => match (simplify(a), simplify(b)) {
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (x, y) => Formula::or(x, y),
        },
        Formula::Eq(Term::Const(x), Term::Const(y)) => {
            if x == y {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Exists(v, f) => {
            let body = simplify(f);
            if let Some(pinned) = pinned_value(&body, v) {
                let mut map = std::collections::BTreeMap::new();
                map.insert(v.clone(), Term::Const(pinned));
                return simplify(&body.substitute(&map));
            }
            if !body.free_vars().contains(v) && matches!(body, Formula::True | Formula::False) {
                return body;
            }
            Formula::exists(v.clone(), body)
        }
        Formula::Forall(v, f) => {
            let body = simplify(f);
            if matches!(body, Formula::True | Formula::False) {
                return body;
            }
            Formula::forall(v.clone(), body)
        }
        other => other.clone(),
    }
}

/// A constant the conjunction pins the variable to, if any conjunct is an
/// equality between the variable and a constant.
fn pinned_value(body: &Formula, v: &Var) -> Option<Value> {
    match body {
        Formula::Eq(Term::Var(x), Term::Const(c)) | Formula::Eq(Term::Const(c), Term::Var(x))
            if x == v =>
        {
            Some(c.clone())
        }
        Formula::And(a, b) => pinned_value(a, v).or_else(|| pinned_value(b, v)),
        _ => None,
    }
}

/// Whether knowledge of `phi` survives the step from position `i` to
/// `i+1`: updates on tables the sentence does not mention (after view
/// inlining) cannot change it, and trigger steps whose statement is a
/// grant or revoke never touch the data.
pub fn revise_belief(run: &Run, i: usize, phi: &Formula) -> bool {
    let state = run.state(i);
    match run.label(i) {
        Label::Act(Action::Insert { table, .. }) | Label::Act(Action::Delete { table, .. }) => {
            !tables_of(phi, state).contains(table)
        }
        Label::Trig(t) => match &t.stmt {
            TriggerStmt::Insert { table, .. } | TriggerStmt::Delete { table, .. } => {
                !tables_of(phi, state).contains(table)
            }
            TriggerStmt::Grant { .. } | TriggerStmt::Revoke { .. } => true,
        },
        _ => false,
    }
}

fn tables_of(phi: &Formula, state: &crate::kernel::SystemState) -> BTreeSet<Name> {
    let inlined = inline_views(phi, state.views.iter()).unwrap_or_else(|_| phi.clone());
    inlined
        .predicates()
        .into_iter()
        .filter(|p| state.config.schema.has_table(p))
        .collect()
}

struct Engine<'a> {
    run: &'a Run,
    user: Name,
    cfg: DeriveConfig,
    sets: Vec<BTreeSet<Formula>>,
    count: usize,
    exhausted: bool,
}

impl<'a> Engine<'a> {
    fn add(&mut self, pos: usize, phi: Formula) -> bool {
        if self.exhausted {
            return false;
        }
        let c = canon(&phi);
        if self.sets[pos - 1].contains(&c) {
            return false;
        }
        if self.count >= self.cfg.budget {
            self.exhausted = true;
            return false;
        }
        self.sets[pos - 1].insert(c);
        self.count += 1;
        true
    }

    fn holds(&self, pos: usize, phi: &Formula) -> bool {
        self.sets[pos - 1].contains(&canon(phi))
    }

    fn schema(&self) -> &crate::rc::Schema {
        &self.run.state(1).config.schema
    }

    fn constraints(&self) -> &[Constraint] {
        &self.run.state(1).config.constraints
    }

    /// Facts extracted directly from the run, without judgment premises.
    fn base_facts(&mut self) {
        // Every position knows the integrity constraints.
        let gammas: Vec<Formula> = self
            .constraints()
            .iter()
            .map(|c| c.sentence(self.schema()))
            .collect();
        for pos in 1..=self.run.len() {
            for g in &gammas {
                self.add(pos, g.clone());
            }
        }

        for i in 2..=self.run.len() {
            let label = self.run.label(i - 1).clone();
            let post = self.run.state(i);
            let sec_ex = post.sec_ex();
            let ex = post.ex();
            match &label {
                Label::Act(action) if action.issuer() == &self.user => {
                    self.own_action_facts(i, action, sec_ex, &ex);
                }
                Label::Trig(t) => {
                    let pre = self.run.state(i - 1);
                    let invoked = pre.invoker().map(|v| v == &self.user).unwrap_or(false);
                    if invoked {
                        self.trigger_facts(i, t.clone(), sec_ex, &ex);
                    }
                }
                _ => {}
            }
        }

        self.rollback_base_facts();
    }

    fn own_action_facts(&mut self, i: usize, action: &Action, sec_ex: bool, ex: &[Name]) {
        if sec_ex {
            return;
        }
        let schema = self.schema().clone();
        match action {
            Action::Select { query, .. } => {
                if ex.is_empty() {
                    if self.run.state(i).res() {
                        self.add(i, query.clone());
                    } else {
                        self.add(i, Formula::not(query.clone()));
                    }
                }
            }
            Action::Insert { table, tuple, .. } => {
                if ex.is_empty() {
                    self.add(i, ground(table, tuple));
                    for gamma in relevant(self.constraints(), table) {
                        let s = get_info_s(&gamma, action, &schema);
                        if s != Formula::True {
                            self.add(i, s.clone());
                            self.add(i - 1, s);
                        }
                    }
                } else {
                    // An integrity exception leaves the tuple out.
                    self.add(i, Formula::not(ground(table, tuple)));
                    self.add(i - 1, Formula::not(ground(table, tuple)));
                    for gamma in violated_of(self.constraints(), ex) {
                        let v = get_info_v(&gamma, action, &schema);
                        if v != Formula::True {
                            self.add(i, v.clone());
                            self.add(i - 1, v);
                        }
                    }
                }
            }
            Action::Delete { table, tuple, .. } => {
                if ex.is_empty() {
                    self.add(i, Formula::not(ground(table, tuple)));
                    for gamma in relevant(self.constraints(), table) {
                        let s = get_info_s(&gamma, action, &schema);
                        if s != Formula::True {
                            self.add(i, s.clone());
                            self.add(i - 1, s);
                        }
                    }
                } else {
                    self.add(i, ground(table, tuple));
                    self.add(i - 1, ground(table, tuple));
                    for gamma in violated_of(self.constraints(), ex) {
                        let v = get_info_v(&gamma, action, &schema);
                        if v != Formula::True {
                            self.add(i, v.clone());
                            self.add(i - 1, v);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn trigger_facts(&mut self, i: usize, t: crate::kernel::TriggerDef, sec_ex: bool, ex: &[Name]) {
        let pre = self.run.state(i - 1);
        let post = self.run.state(i);
        let Some(fired) = pre.tpl().cloned() else {
            return;
        };
        let cond = t.condition_instance(&fired);
        let schema = self.schema().clone();
        let Some(Effect::Trig(te)) = &post.ctx.last else {
            return;
        };
        let cond_ok = te.condition.decision && te.condition.result;

        // The condition held whenever the step went on to raise any kind
        // of exception afterwards.
        if cond_ok && (sec_ex || !ex.is_empty()) {
            self.add(i - 1, cond.clone());
        }

        if let Some(stmt_eff) = &te.statement {
            let executed = stmt_eff.decision;
            match &stmt_eff.action {
                Action::Insert { table, tuple, .. } => {
                    if executed && !ex.is_empty() && !sec_ex {
                        self.add(i - 1, Formula::not(ground(table, tuple)));
                        for gamma in violated_of(self.constraints(), ex) {
                            let v = get_info_v(&gamma, &stmt_eff.action, &schema);
                            if v != Formula::True {
                                self.add(i - 1, v);
                            }
                        }
                    }
                }
                Action::Delete { table, tuple, .. } => {
                    if executed && !ex.is_empty() && !sec_ex {
                        self.add(i - 1, ground(table, tuple));
                        for gamma in violated_of(self.constraints(), ex) {
                            let v = get_info_v(&gamma, &stmt_eff.action, &schema);
                            if v != Formula::True {
                                self.add(i - 1, v);
                            }
                        }
                    }
                }
                Action::Grant { .. } | Action::Revoke { .. }
                    // Policy changes are visible: an executed grant or
                    // revoke that changed the policy reveals the condition.
                    if executed && !sec_ex && ex.is_empty() && pre.sec != post.sec => {
                        self.add(i - 1, cond.clone());
                    }
                _ => {}
            }
        }

        // A statement that would have changed the policy but did not run
        // (the policy is unchanged) reveals the condition was false.
        if te.statement.is_none() && !sec_ex && ex.is_empty() && pre.sec == post.sec {
            match &t.stmt {
                TriggerStmt::Grant {
                    op,
                    grantee,
                    privilege,
                } => {
                    let g = crate::kernel::Grant {
                        op: *op,
                        grantee: grantee.clone(),
                        privilege: privilege.clone(),
                        grantor: crate::kernel::actual_user(&t, &self.user),
                    };
                    if !pre.sec.contains(&g) {
                        self.add(i - 1, Formula::not(cond.clone()));
                    }
                }
                TriggerStmt::Revoke { grantee, privilege } => {
                    let revoker = crate::kernel::actual_user(&t, &self.user);
                    let revoked_something = pre.sec.iter().any(|g| {
                        g.grantee == *grantee && g.privilege == *privilege && g.grantor == revoker
                    });
                    if revoked_something {
                        self.add(i - 1, Formula::not(cond.clone()));
                    }
                }
                _ => {}
            }
        }
    }

    /// Rolled-back transactions restore the pre-update state, so knowledge
    /// transfers across the whole segment, and the attempted tuple is
    /// known absent (insert) or present (delete) afterwards.
    fn rollback_segments(&self) -> Vec<(usize, usize, Option<(bool, Name, Vec<Value>)>)> {
        let mut out = Vec::new();
        for p in 1..self.run.len() {
            let Label::Act(action) = self.run.label(p) else {
                continue;
            };
            if action.issuer() != &self.user {
                continue;
            }
            let (is_insert, table, tuple) = match action {
                Action::Insert { table, tuple, .. } => (true, table.clone(), tuple.clone()),
                Action::Delete { table, tuple, .. } => (false, table.clone(), tuple.clone()),
                _ => continue,
            };
            // Direct exception or denial on the update itself.
            let s1 = self.run.state(p + 1);
            if s1.sec_ex() || !s1.ex().is_empty() {
                out.push((p, p + 1, None));
                continue;
            }
            // A trigger tail ending in an exception rolls everything back.
            let mut m = p + 1;
            while m < self.run.len() && matches!(self.run.label(m), Label::Trig(_)) {
                m += 1;
            }
            if m > p + 1 {
                let last = self.run.state(m);
                let aborted = last.sec_ex() || !last.ex().is_empty();
                if aborted && matches!(last.ctx.last, Some(Effect::Trig(_))) {
                    out.push((p, m, Some((is_insert, table, tuple))));
                }
            }
        }
        out
    }

    fn rollback_base_facts(&mut self) {
        for (_, end, info) in self.rollback_segments() {
            if let Some((is_insert, table, tuple)) = info {
                if is_insert {
                    self.add(end, Formula::not(ground(&table, &tuple)));
                } else {
                    self.add(end, ground(&table, &tuple));
                }
            }
        }
    }

    /// One pass of every judgment-dependent rule; returns whether anything
    /// was added.
    fn dependent_pass(&mut self) -> bool {
        let mut changed = false;
        let rollbacks = self.rollback_segments();

        for i in 1..self.run.len() {
            let label = self.run.label(i).clone();
            let pre = self.run.state(i);
            let post = self.run.state(i + 1);
            let sec_ex = post.sec_ex();
            let ex_empty = post.ex().is_empty();

            match &label {
                Label::Act(action) if action.issuer() == &self.user => match action {
                    Action::Select { .. } => {
                        changed |= self.bridge_all(i, i + 1);
                    }
                    Action::Grant { .. } | Action::Revoke { .. } => {
                        changed |= self.bridge_all(i, i + 1);
                    }
                    Action::CreateTrigger { .. } => {
                        changed |= self.bridge_all(i, i + 1);
                    }
                    Action::CreateView { view, .. } => {
                        // Forward: knowledge survives; backward: the new
                        // view must be unfolded first.
                        changed |= self.bridge_forward(i, i + 1);
                        let sentences: Vec<Formula> = self.sets[i].iter().cloned().collect();
                        for s in sentences {
                            let replaced = crate::rc::inline_step(&s, view);
                            changed |= self.add(i, replaced);
                        }
                    }
                    Action::Insert { table, tuple, .. } | Action::Delete { table, tuple, .. } => {
                        if !sec_ex && ex_empty {
                            let is_insert = matches!(action, Action::Insert { .. });
                            changed |= self.bridge_update(i, table, tuple, is_insert);
                            // A change in some known sentence reveals the
                            // tuple's prior absence (insert) or presence
                            // (delete).
                            if self.flip_between(i, i + 1) {
                                let fact = if is_insert {
                                    Formula::not(ground(table, tuple))
                                } else {
                                    ground(table, tuple)
                                };
                                changed |= self.add(i, fact);
                            }
                        }
                    }
                    Action::AddUser { .. } => {}
                },
                Label::Trig(t) => {
                    let invoked = pre.invoker().map(|v| v == &self.user).unwrap_or(false);
                    if !invoked {
                        continue;
                    }
                    let Some(fired) = pre.tpl().cloned() else {
                        continue;
                    };
                    let cond = t.condition_instance(&fired);
                    let Some(Effect::Trig(te)) = &post.ctx.last else {
                        continue;
                    };
                    if sec_ex {
                        continue;
                    }
                    let stmt_eff = te.statement.clone();

                    // Propagation across the trigger step.
                    if ex_empty {
                        match &t.stmt {
                            TriggerStmt::Grant { .. } | TriggerStmt::Revoke { .. } => {
                                changed |= self.bridge_all(i, i + 1);
                            }
                            TriggerStmt::Insert { table, .. }
                            | TriggerStmt::Delete { table, .. } => {
                                changed |= self.bridge_revise(i, i + 1, table);
                                if let Some(eff) = &stmt_eff {
                                    if let Action::Insert { table, tuple, .. }
                                    | Action::Delete { table, tuple, .. } = &eff.action
                                    {
                                        let is_insert = matches!(eff.action, Action::Insert { .. });
                                        if eff.decision && eff.result {
                                            changed |=
                                                self.bridge_update(i, table, tuple, is_insert);
                                        }
                                    }
                                }
                            }
                        }
                        // Known-disabled triggers change nothing.
                        if self.holds(i, &Formula::not(cond.clone())) {
                            changed |= self.bridge_all(i, i + 1);
                        }
                    }

                    // Learning the condition from observed effects.
                    if ex_empty {
                        if let Some(eff) = &stmt_eff {
                            if eff.decision && eff.result {
                                if let Action::Insert { table, tuple, .. }
                                | Action::Delete { table, tuple, .. } = &eff.action
                                {
                                    let is_insert = matches!(eff.action, Action::Insert { .. });
                                    // Forward: a known condition implies the
                                    // statement ran.
                                    if self.holds(i, &cond) {
                                        let fact = if is_insert {
                                            ground(table, tuple)
                                        } else {
                                            Formula::not(ground(table, tuple))
                                        };
                                        changed |= self.add(i + 1, fact);
                                        let schema = self.schema().clone();
                                        for gamma in relevant(self.constraints(), table) {
                                            let s = get_info_s(&gamma, &eff.action, &schema);
                                            if s != Formula::True {
                                                changed |= self.add(i, s.clone());
                                                changed |= self.add(i + 1, s);
                                            }
                                        }
                                    }
                                    // Backward: a flip in knowledge means
                                    // the statement ran, so the condition
                                    // held and the tuple was new (insert)
                                    // or present (delete).
                                    if self.flip_between(i, i + 1) {
                                        changed |= self.add(i, cond.clone());
                                        let fact = if is_insert {
                                            Formula::not(ground(table, tuple))
                                        } else {
                                            ground(table, tuple)
                                        };
                                        changed |= self.add(i, fact);
                                    }
                                }
                            }
                        }
                        // Disabled trigger whose absence of effects is
                        // observable only through the policy rules handled
                        // in the base pass; nothing further here.
                    }
                }
                _ => {}
            }
        }

        for (p, end, _) in rollbacks {
            changed |= self.bridge_all(p, end);
        }

        // Unfolding views valid at each position.
        for pos in 1..=self.run.len() {
            let views = self.run.state(pos).views.clone();
            if views.is_empty() {
                continue;
            }
            let sentences: Vec<Formula> = self.sets[pos - 1].iter().cloned().collect();
            for s in sentences {
                for v in &views {
                    let replaced = crate::rc::inline_step(&s, v);
                    if replaced != s {
                        changed |= self.add(pos, replaced);
                    }
                }
            }
        }
        changed
    }

    /// Copies every sentence between two positions known to share their
    /// database state.
    fn bridge_all(&mut self, a: usize, b: usize) -> bool {
        let mut changed = false;
        let from_a: Vec<Formula> = self.sets[a - 1].iter().cloned().collect();
        for s in from_a {
            changed |= self.add(b, s);
        }
        let from_b: Vec<Formula> = self.sets[b - 1].iter().cloned().collect();
        for s in from_b {
            changed |= self.add(a, s);
        }
        changed
    }

    fn bridge_forward(&mut self, a: usize, b: usize) -> bool {
        let mut changed = false;
        let from_a: Vec<Formula> = self.sets[a - 1].iter().cloned().collect();
        for s in from_a {
            changed |= self.add(b, s);
        }
        changed
    }

    /// Propagation across an update on `table`: sentences not mentioning
    /// the table survive; so does everything when the update is known
    /// vacuous.
    fn bridge_update(&mut self, i: usize, table: &Name, tuple: &[Value], is_insert: bool) -> bool {
        let mut changed = self.bridge_revise(i, i + 1, table);
        let vacuous_fact = if is_insert {
            ground(table, tuple)
        } else {
            Formula::not(ground(table, tuple))
        };
        if self.holds(i, &vacuous_fact) {
            changed |= self.bridge_all(i, i + 1);
        }
        changed
    }

    fn bridge_revise(&mut self, a: usize, b: usize, table: &Name) -> bool {
        let mut changed = false;
        let state = self.run.state(a);
        let from_a: Vec<Formula> = self.sets[a - 1].iter().cloned().collect();
        for s in from_a {
            if !tables_of(&s, state).contains(table) {
                changed |= self.add(b, s);
            }
        }
        let from_b: Vec<Formula> = self.sets[b - 1].iter().cloned().collect();
        for s in from_b {
            if !tables_of(&s, state).contains(table) {
                changed |= self.add(a, s);
            }
        }
        changed
    }

    /// Does the user know some sentence at `a` whose negation he knows at
    /// `b`? That certifies the database changed in between.
    fn flip_between(&self, a: usize, b: usize) -> bool {
        self.sets[a - 1]
            .iter()
            .any(|s| self.sets[b - 1].contains(&canon(&Formula::not(s.clone()))))
    }

    /// Bounded reasoning: ground modus ponens with the constraints, and
    /// pairwise conjunction/disjunction of small derived sentences.
    fn reasoning_pass(&mut self) -> bool {
        let mut changed = false;
        let schema = self.schema().clone();
        let constraints: Vec<Constraint> = self.constraints().to_vec();
        for pos in 1..=self.run.len() {
            let current: Vec<Formula> = self.sets[pos - 1].iter().cloned().collect();
            // Modus ponens with constraint instances on known ground atoms.
            for s in &current {
                if let Formula::Pred(table, args) = s {
                    let values: Option<Vec<Value>> =
                        args.iter().map(|t| t.as_const().cloned()).collect();
                    let Some(tuple) = values else { continue };
                    let action = Action::Insert {
                        user: self.user.clone(),
                        table: table.clone(),
                        tuple: tuple.clone(),
                    };
                    for gamma in relevant(&constraints, table) {
                        // A present tuple plus the constraint entails the
                        // success-template sentence.
                        if let ConstraintKind::Id { from, .. } = &gamma.kind {
                            if from == table {
                                let f = get_info_s(&gamma, &action, &schema);
                                if f != Formula::True {
                                    changed |= self.add(pos, f);
                                }
                            }
                        }
                    }
                }
            }
            // Pairwise conjunction and disjunction of small sentences.
            let small: Vec<Formula> = current
                .iter()
                .filter(|s| s.size() <= self.cfg.reasoning_size_cap)
                .cloned()
                .collect();
            'pairs: for (k, a) in small.iter().enumerate() {
                for b in small.iter().skip(k + 1) {
                    if self.exhausted {
                        break 'pairs;
                    }
                    changed |= self.add(pos, Formula::raw_and(a.clone(), b.clone()));
                    changed |= self.add(pos, Formula::raw_or(a.clone(), b.clone()));
                }
            }
        }
        changed
    }
}

fn ground(table: &Name, tuple: &[Value]) -> Formula {
    Formula::pred(
        table.clone(),
        tuple.iter().cloned().map(Term::Const).collect(),
    )
}

fn relevant(constraints: &[Constraint], table: &Name) -> Vec<Constraint> {
    constraints
        .iter()
        .filter(|c| c.tables().contains(table))
        .cloned()
        .collect()
}

fn violated_of(constraints: &[Constraint], ids: &[Name]) -> Vec<Constraint> {
    constraints
        .iter()
        .filter(|c| ids.contains(&c.id))
        .cloned()
        .collect()
}

/// Saturates the inference rules over the run for the given user.
pub fn derive(run: &Run, user: &Name, cfg: DeriveConfig) -> Derivation {
    let mut engine = Engine {
        run,
        user: user.clone(),
        cfg,
        sets: vec![BTreeSet::new(); run.len()],
        count: 0,
        exhausted: false,
    };
    engine.base_facts();
    while engine.dependent_pass() && !engine.exhausted {}
    for _ in 0..engine.cfg.reasoning_depth {
        let added = engine.reasoning_pass();
        if engine.exhausted {
            break;
        }
        if added {
            while engine.dependent_pass() && !engine.exhausted {}
        } else {
            break;
        }
    }
    Derivation {
        per_position: engine.sets,
        exhausted: engine.exhausted,
    }
}
