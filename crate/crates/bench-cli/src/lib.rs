//! Benchmark harness for particle-based inference.

pub mod commands;
pub mod config;
pub mod dataset;
