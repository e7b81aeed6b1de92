//! Line-oriented, machine-parseable trace records:
//!
//! ```text
//! step=<n> user=<id> label=<canonical-statement> decision=PERMIT|DENY result=TRUE|FALSE|OK ex=<comma-list>
//! ```
//!
//! `result` is `TRUE`/`FALSE` for reads and for trigger steps (a disabled
//! or aborted trigger reports `FALSE`), and `OK` for successful
//! state-changing commands. `ex` lists the violated constraints or `-`.

use std::fmt;

use secdb_core::rc::Name;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepResult {
    True,
    False,
    Ok,
}

impl fmt::Display for StepResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepResult::True => f.write_str("TRUE"),
            StepResult::False => f.write_str("FALSE"),
            StepResult::Ok => f.write_str("OK"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub step: usize,
    pub user: Name,
    pub label: String,
    pub permitted: bool,
    pub result: StepResult,
    pub violations: Vec<Name>,
    /// The transition rule that fired; shown in the REPL, not part of the
    /// stable trace format.
    pub rule: &'static str,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decision = if self.permitted { "PERMIT" } else { "DENY" };
        let ex = if self.violations.is_empty() {
            "-".to_string()
        } else {
            self.violations
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "step={} user={} label={} decision={} result={} ex={}",
            self.step, self.user, self.label, decision, self.result, ex
        )
    }
}
