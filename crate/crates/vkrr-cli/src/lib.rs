//! Operational surface of the vkrr workspace: configuration parsing,
//! experiment orchestration with a worker pool, artifact emission, and
//! plain-text model persistence. The `vkrr` binary is a thin wrapper over
//! this library.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod model_io;
pub mod report;
pub mod sobolev;
