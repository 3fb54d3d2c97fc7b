//! Experiment runner around the estimator library: config loading, command
//! dispatch, CSV output, and the pinned acceptance suite.

pub mod acceptance;
pub mod config;
pub mod output;
pub mod runner;
