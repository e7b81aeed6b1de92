//! A small relational database engine (safe-range relational calculus,
//! views, functional and inclusion dependencies, AFTER triggers, dynamic
//! GRANT/REVOKE) together with an access-control decision point that
//! enforces both database integrity and data confidentiality, and an
//! executable attacker model used as a testing oracle.
//!
//! The crate is organised as follows:
//!
//! - [`rc`]: schemas, database states, relational-calculus formulas and
//!   their evaluation, views, and tuple-level updates.
//! - [`surface`]: the textual SQL-fragment parser and statement binder.
//! - [`kernel`]: the labelled transition system: system states with
//!   contexts, the step relation, revoke-with-cascade, trigger scheduling
//!   and rollback.
//! - [`authz`]: the two halves of the decision point (`integrity` and
//!   `confidentiality`) and their composition.
//! - [`attacker`]: the attacker inference engine, run indistinguishability,
//!   and the brute-force security oracle.
//! - [`testkit`]: seeded random generators for configurations, states and
//!   runs, used by the property and acceptance suites.

pub mod attacker;
pub mod authz;
pub mod kernel;
pub mod rc;
pub mod surface;
pub mod testkit;
