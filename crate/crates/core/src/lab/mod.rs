//! Numerical experiments: oscillation and Carleson integrals, growth fits,
//! scenario orchestration and report persistence.

pub mod bmo;
pub mod carleson;
pub mod config;
pub mod fit;
pub mod report;
pub mod scenarios;
