//! Command-line front end for the code-aware combinatorial testing pipeline.

pub mod commands;
pub mod config;
pub mod error;
