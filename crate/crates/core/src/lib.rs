//! Temporal numeric planning with pattern-based SMT encodings.
//!
//! The pipeline: parse and ground PDDL2.1 ([`pddl`]), analyse interference
//! and rolling ([`analysis`]), build a pattern of snap actions
//! ([`pattern`]), compile the pattern into an SMT formula ([`encoding`]),
//! solve it with an external solver ([`smt`]) for increasing bounds
//! ([`solve`]), and check every extracted plan independently ([`validate`]).

pub mod analysis;
pub mod encoding;
pub mod fixtures;
pub mod formula;
pub mod model;
pub mod pattern;
pub mod pddl;
pub mod plan;
pub mod rational;
pub mod report;
pub mod smt;
pub mod solve;
pub mod symbolic;
pub mod validate;
