//! Code-aware combinatorial interaction testing.
//!
//! Measures how strongly each input parameter moves code coverage, turns
//! those measurements into pairwise correlations, compiles them into a
//! mixed-strength coverage plan, generates covering suites for it, and
//! scores suites against seeded faults.

pub mod cagen;
pub mod correlate;
pub mod doc;
pub mod evaluate;
pub mod impact;
pub mod model;
