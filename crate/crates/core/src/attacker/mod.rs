//! The attacker model as an executable inference engine, belief revision,
//! run indistinguishability, and the brute-force secure-judgment oracle.

mod derive;
mod indist;
mod oracle;
#[cfg(test)]
mod tests;

pub use derive::{canon, derive, revise_belief, Derivation, DeriveConfig, Judgment};
pub use indist::{
    consistent, data_indistinguishable, indistinguishable, u_projection, Masked, Projection,
};
pub use oracle::{enumerate_db_states, secure_data_oracle, OracleError};
