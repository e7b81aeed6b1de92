//! Drives statements through the transition system, producing trace
//! records and checking expectation annotations.

use std::collections::BTreeSet;

use thiserror::Error;

use secdb_core::authz::{PdpConf, PdpF, PdpInt};
use secdb_core::kernel::{
    actual_user, step, Action, AllowAll, Effect, Label, Pdp, Run, StepError, SystemState,
};
use secdb_core::rc::{eval_query, Formula, Name, Query, Term, Tuple, Var};
use secdb_core::surface::{bind, BindError, Bound, Catalog, Statement};

use crate::scenario::{Expectation, Scenario, ScenarioError, Step};
use crate::trace::{StepResult, TraceRecord};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("bind error: {0}")]
    Bind(#[from] BindError),
    #[error("step error: {0}")]
    Step(#[from] StepError),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
}

/// Looks up a decision point by its command-line name.
pub fn pdp_by_name(name: &str) -> Option<Box<dyn Pdp>> {
    match name {
        "f" => Some(Box::new(PdpF)),
        "f_int" => Some(Box::new(PdpInt)),
        "f_conf" => Some(Box::new(PdpConf)),
        "allow-all" => Some(Box::new(AllowAll)),
        _ => None,
    }
}

/// The boolean encoding of a non-boolean read: the answer rows all
/// satisfy the body, and every satisfying tuple is one of the rows.
pub fn encode_row_query(query: &Query, rows: &BTreeSet<Tuple>) -> Formula {
    let memberships =
        Formula::conj(rows.iter().map(|row| {
            query.instantiate(&row.iter().cloned().map(Term::Const).collect::<Vec<_>>())
        }));
    let row_eqs = Formula::disj(rows.iter().map(|row| {
        Formula::conj(
            query
                .head
                .iter()
                .zip(row.iter())
                .map(|(h, v)| Formula::eq(Term::Var(h.clone()), Term::Const(v.clone()))),
        )
    }));
    let completeness = complete_over(&query.head, &query.body, row_eqs);
    Formula::raw_and(memberships, completeness)
}

fn complete_over(head: &[Var], body: &Formula, row_eqs: Formula) -> Formula {
    let mut out = Formula::raw_or(Formula::not(body.clone()), row_eqs);
    for v in head.iter().rev() {
        out = Formula::forall(v.clone(), out);
    }
    out
}

/// The outcome of one submitted statement: the trace records of the whole
/// transaction and the rows of a non-boolean read.
#[derive(Debug, Clone)]
pub struct Submitted {
    pub records: Vec<TraceRecord>,
    pub rows: Option<BTreeSet<Tuple>>,
}

pub struct Session {
    pub state: SystemState,
    pub run: Run,
    pub pdp: Box<dyn Pdp>,
    step_no: usize,
}

impl Session {
    pub fn new(initial: SystemState, pdp: Box<dyn Pdp>) -> Self {
        Session {
            run: Run::new(initial.clone()),
            state: initial,
            pdp,
            step_no: 0,
        }
    }

    pub fn from_scenario(scenario: &Scenario, pdp: Box<dyn Pdp>) -> Result<Self, SessionError> {
        Ok(Session::new(scenario.initial_state()?, pdp))
    }

    /// Binds and executes one statement, firing scheduled triggers to
    /// quiescence.
    pub fn submit(
        &mut self,
        user: &Name,
        statement: &Statement,
        label_text: &str,
    ) -> Result<Submitted, SessionError> {
        let catalog = Catalog::of_state(&self.state);
        let bound = bind(statement, user, &catalog)?;
        let (action, rows) = match bound {
            Bound::Act(action) => (action, None),
            Bound::SelectRows { user, query } => {
                let rows = eval_query(&self.state.db, &query, &self.state.view_env())
                    .map_err(|e| SessionError::Eval(e.to_string()))?;
                let sentence = encode_row_query(&query, &rows);
                (
                    Action::Select {
                        user,
                        query: sentence,
                    },
                    Some(rows),
                )
            }
        };
        let mut records = Vec::new();
        let (rule, next) = step(&self.state, &Label::Act(action.clone()), self.pdp.as_ref())?;
        self.run.push(Label::Act(action.clone()), next.clone());
        self.state = next;
        self.step_no += 1;
        records.push(self.record_for(user.clone(), label_text.to_string(), rule));
        while let Some(t) = self.state.trigger().cloned() {
            let invoker = self
                .state
                .invoker()
                .cloned()
                .unwrap_or_else(|| user.clone());
            let executing = actual_user(&t, &invoker);
            let (rule, next) = step(&self.state, &Label::Trig(t.clone()), self.pdp.as_ref())?;
            self.run.push(Label::Trig(t.clone()), next.clone());
            self.state = next;
            self.step_no += 1;
            records.push(self.record_for(executing, format!("TRIGGER {}", t.id), rule));
        }
        Ok(Submitted { records, rows })
    }

    fn record_for(&self, user: Name, label: String, rule: &'static str) -> TraceRecord {
        let permitted = !self.state.sec_ex();
        let violations = self.state.ex();
        let result = match &self.state.ctx.last {
            Some(Effect::Act(a)) => {
                if !a.decision {
                    StepResult::False
                } else if matches!(a.action, Action::Select { .. }) {
                    if a.result {
                        StepResult::True
                    } else {
                        StepResult::False
                    }
                } else if a.result {
                    StepResult::Ok
                } else {
                    StepResult::False
                }
            }
            Some(Effect::Trig(t)) => {
                let executed = t
                    .statement
                    .as_ref()
                    .map(|s| s.decision && s.result)
                    .unwrap_or(false);
                if permitted && violations.is_empty() && executed {
                    StepResult::Ok
                } else {
                    StepResult::False
                }
            }
            None => StepResult::False,
        };
        TraceRecord {
            step: self.step_no,
            user,
            label,
            permitted,
            result,
            violations,
            rule,
        }
    }
}

/// Whether a transaction's records satisfy an expectation: `PERMIT` wants
/// every step permitted without integrity exceptions, `DENY` wants some
/// denied step, `INTEGRITY_EX` a permitted step with violations.
pub fn expectation_met(expect: Expectation, records: &[TraceRecord]) -> bool {
    match expect {
        Expectation::Permit => records
            .iter()
            .all(|r| r.permitted && r.violations.is_empty()),
        Expectation::Deny => records.iter().any(|r| !r.permitted),
        Expectation::IntegrityEx => records
            .iter()
            .any(|r| r.permitted && !r.violations.is_empty()),
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub run: Run,
    pub records: Vec<TraceRecord>,
    pub violations: Vec<String>,
}

/// Executes a whole scenario, collecting the trace and every violated
/// expectation.
pub fn run_scenario(scenario: &Scenario, pdp: Box<dyn Pdp>) -> Result<RunOutcome, SessionError> {
    let mut session = Session::from_scenario(scenario, pdp)?;
    let mut records = Vec::new();
    let mut violations = Vec::new();
    for (idx, step) in scenario.steps.iter().enumerate() {
        let canonical = step.statement.to_string();
        let submitted = session.submit(&step.user, &step.statement, &canonical)?;
        if let Some(expect) = step.expect {
            if !expectation_met(expect, &submitted.records) {
                violations.push(format!(
                    "statement {} ('{}') expected {expect}",
                    idx + 1,
                    step.text
                ));
            }
        }
        records.extend(submitted.records);
    }
    Ok(RunOutcome {
        run: session.run,
        records,
        violations,
    })
}

/// Convenience for tests: execute a scenario under a named decision point.
pub fn run_scenario_named(scenario: &Scenario, pdp_name: &str) -> Result<RunOutcome, SessionError> {
    let pdp = pdp_by_name(pdp_name).unwrap_or_else(|| panic!("unknown decision point {pdp_name}"));
    run_scenario(scenario, pdp)
}

/// Re-exported step type for binary consumers.
pub type ScenarioStep = Step;
