//! Scheduling laboratory for LLM inference serving: a batch-level simulator
//! with pluggable schedulers and cache replacement policies, roofline and
//! calibrated cost models, workload generators, and an exact schedule
//! optimizer with LP export.

pub mod cli;
pub mod costmodel;
pub mod csp;
pub mod domain;
pub mod scheduler;
pub mod simulator;
pub mod workload;
