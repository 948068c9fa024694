//! Benchmark harness: named synthetic scenarios, oracle-verified timing of
//! every index, workload-shift and ablation experiments.

pub mod commands;
pub mod runner;
pub mod scenarios;
