//! Scenario configuration, the closed-loop simulator, Monte Carlo runs and
//! CSV output.

pub mod config;
pub mod engine;
pub mod montecarlo;
pub mod output;
