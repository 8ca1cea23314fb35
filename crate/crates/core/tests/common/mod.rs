//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

pub mod experiments;
pub mod invariants;
pub mod metric_checks;
pub mod oracles;
