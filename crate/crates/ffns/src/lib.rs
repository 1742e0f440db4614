//! Spectral solver, far-field evaluation, checks and scenario runner.

pub mod checks;
pub mod config;
pub mod duhamel;
pub mod error;
pub mod farfield;
pub mod io;
pub mod probe;
pub mod runner;
pub mod solver;
pub mod spectral;
