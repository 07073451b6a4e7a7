//! Cycle-level model of a clustered FHE accelerator: hardware inventory,
//! kernel graphs for CKKS, TFHE and conversion operations, NTT mapping
//! strategies, role allocation, list scheduling and utilization reports.

mod config;
mod graph;
mod mapping;
mod report;
mod scenarios;
mod sim;

pub use config::HardwareConfig;
pub use graph::*;
pub use mapping::*;
pub use report::*;
pub use scenarios::*;
pub use sim::*;
