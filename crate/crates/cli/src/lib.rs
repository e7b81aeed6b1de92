//! Scenario files, trace records, and the session driver shared by the
//! command-line front end and the test suites.

pub mod repl;
pub mod scenario;
pub mod session;
pub mod trace;

pub use scenario::{Expectation, Scenario, ScenarioError, Step};
pub use session::{encode_row_query, pdp_by_name, run_scenario, RunOutcome, Session};
pub use trace::TraceRecord;
