//! Experiment harness for the multiobjective learner: configuration files,
//! seeded batch runs with CSV logs, aggregation and SVG plots.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod runlog;
pub mod stats;
pub mod svg;
