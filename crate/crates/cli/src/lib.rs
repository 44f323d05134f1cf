//! Command-line front end for the MoCoMR pipeline: configuration, stage
//! orchestration, data export, and the simulator API verb mapping.

pub mod config;
pub mod export;
pub mod pipeline;
pub mod verbs;
