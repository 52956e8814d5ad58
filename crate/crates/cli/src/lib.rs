//! Experiment driver around the certification library: JSON configuration,
//! the per-mesh pipeline, CSV/JSON artifact emission, reference comparison,
//! and table rendering. The binary in `main.rs` is a thin argument parser
//! over these modules.

pub mod check;
pub mod config;
pub mod report;
pub mod runner;
pub mod table;
