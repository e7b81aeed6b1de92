use crate::authz::permissions;
use crate::kernel::{Action, Label, PartialState, Run, SystemState, TriggerDef};
use crate::rc::{eval_query, Mode, Name};

/// A projection label: the user's own action, a trigger the user invoked,
/// or the mask standing for one or more foreign steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Masked {
    Star,
    Act(Action),
    Trig(TriggerDef),
}

/// The user-visible skeleton of a run: masked labels alternating with the
/// surviving state snapshots (indices into the original run's states).
#[derive(Debug, Clone)]
pub struct Projection {
    pub labels: Vec<Masked>,
    /// 1-based positions of the original run, one per projection state.
    pub state_positions: Vec<usize>,
}

impl Projection {
    pub fn len(&self) -> usize {
        self.state_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_positions.is_empty()
    }
}

fn label_owner(run: &Run, idx: usize, user: &Name) -> bool {
    match run.label(idx) {
        Label::Act(a) => a.issuer() == user,
        Label::Trig(_) => run.state(idx).invoker().map(|i| i == user).unwrap_or(false),
    }
}

/// Masks every foreign step and collapses maximal masked sequences.
pub fn u_projection(run: &Run, user: &Name) -> Projection {
    let mut labels: Vec<Masked> = Vec::new();
    let mut positions: Vec<usize> = vec![1];
    for i in 1..run.len() {
        let own = label_owner(run, i, user);
        let masked = if own {
            match run.label(i) {
                Label::Act(a) => Masked::Act(a.clone()),
                Label::Trig(t) => Masked::Trig(t.clone()),
            }
        } else {
            Masked::Star
        };
        match (&masked, labels.last()) {
            (Masked::Star, Some(Masked::Star)) => {
                // Extend the current masked block: replace its endpoint.
                *positions.last_mut().expect("non-empty") = i + 1;
            }
            _ => {
                labels.push(masked);
                positions.push(i + 1);
            }
        }
    }
    Projection {
        labels,
        state_positions: positions,
    }
}

fn effects_match(a: &SystemState, b: &SystemState, is_trigger: bool) -> bool {
    a.res() == b.res()
        && a.sec_ex() == b.sec_ex()
        && (!is_trigger || a.ctx.ac_condition() == b.ctx.ac_condition())
        && a.invoker() == b.invoker()
        && a.ctx.triggers().len() == b.ctx.triggers().len()
        && a.ctx
            .triggers()
            .iter()
            .zip(b.ctx.triggers())
            .all(|(x, y)| x == y)
        && a.tpl() == b.tpl()
        && a.ex() == b.ex()
}

/// Whether two projections are consistent: same shape and labels, the same
/// observable effects at every own step, and trigger queues that are empty
/// together at the end.
pub fn consistent(run_a: &Run, pa: &Projection, run_b: &Run, pb: &Projection) -> bool {
    if pa.len() != pb.len() || pa.labels != pb.labels {
        return false;
    }
    let last_a = run_a.state(*pa.state_positions.last().expect("non-empty"));
    let last_b = run_b.state(*pb.state_positions.last().expect("non-empty"));
    if last_a.ctx.triggers().is_empty() != last_b.ctx.triggers().is_empty() {
        return false;
    }
    for (k, label) in pa.labels.iter().enumerate() {
        if matches!(label, Masked::Star) {
            continue;
        }
        let sa = run_a.state(pa.state_positions[k + 1]);
        let sb = run_b.state(pb.state_positions[k + 1]);
        if !effects_match(sa, sb, matches!(label, Masked::Trig(_))) {
            return false;
        }
    }
    true
}

/// Data indistinguishability of two partial states for a user: equal
/// users, policy, triggers, and views; equal readable tables; and equal
/// materializations of readable owner-mode views.
pub fn data_indistinguishable(
    a: &PartialState,
    b: &PartialState,
    user: &Name,
    schema: &crate::rc::Schema,
) -> bool {
    if a.users != b.users || a.sec != b.sec || a.triggers != b.triggers || a.views != b.views {
        return false;
    }
    let readable = permissions(schema, &a.views, &a.sec, user);
    for (table, _) in schema.tables() {
        if readable.contains(table) && a.db.rows(table) != b.db.rows(table) {
            return false;
        }
    }
    let env_a = crate::rc::ViewEnv::of(a.views.iter());
    let env_b = crate::rc::ViewEnv::of(b.views.iter());
    for v in &a.views {
        if v.mode == Mode::Owner && readable.contains(&v.id) {
            let ma = eval_query(&a.db, &v.query, &env_a);
            let mb = eval_query(&b.db, &v.query, &env_b);
            match (ma, mb) {
                (Ok(x), Ok(y)) if x == y => {}
                _ => return false,
            }
        }
    }
    true
}

/// Run indistinguishability for a user: consistent projections, data
/// indistinguishability at the ends, and data indistinguishability before
/// each of the user's own steps.
pub fn indistinguishable(run_a: &Run, run_b: &Run, user: &Name) -> bool {
    let schema = &run_a.state(1).config.schema;
    let pa = u_projection(run_a, user);
    let pb = u_projection(run_b, user);
    if !consistent(run_a, &pa, run_b, &pb) {
        return false;
    }
    let last_a = run_a.last().partial();
    let last_b = run_b.last().partial();
    if !data_indistinguishable(&last_a, &last_b, user, schema) {
        return false;
    }
    for (k, label) in pa.labels.iter().enumerate() {
        if matches!(label, Masked::Star) {
            continue;
        }
        let sa = run_a.state(pa.state_positions[k]).partial();
        let sb = run_b.state(pb.state_positions[k]).partial();
        if !data_indistinguishable(&sa, &sb, user, schema) {
            return false;
        }
    }
    true
}
