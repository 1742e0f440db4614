//! Free-space kernels, forcing models and decay-fit verdicts for studying the
//! far-field behaviour of forced incompressible Navier–Stokes flows.
//!
//! Everything in this crate is pure computation over caller-provided samples:
//! no IO, no threads, no FFTs. The `ffns` crate builds the spectral solver,
//! file formats and the scenario runner on top of it.
#![no_std]

extern crate alloc;

mod error;
mod math;

pub mod dim;
pub mod fit;
pub mod forcing;
pub mod grid;
pub mod initial;
pub mod kernel;
pub mod log_bound;
pub mod profile;
pub mod quad;
pub mod special;
pub mod sphere;
pub mod tensor;
pub mod verdict;

pub use dim::Dim;
pub use error::{Error, Result};
pub use tensor::{GradKernelTensor, KernelTensor, Vector};
