//! Experiment harness for the distributed-source well model: scenario
//! configuration, the convergence/kernel/rotation/comparison studies, and
//! CSV/VTK export.

pub mod config;
pub mod experiments;
pub mod io;
