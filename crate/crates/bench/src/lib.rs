//! Benchmark harness for the warm-start initializers: seeded dataset
//! generators, an experiment-plan grammar, and the run loop behind the
//! `otinit` binary.

pub mod config;
pub mod datasets;
pub mod runner;
