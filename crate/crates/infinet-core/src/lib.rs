//! Core numerics for kernel-based feature interaction networks.
//!
//! Everything in this crate is pure computation over heap-allocated dense
//! tensors: no files, no clocks, no threads. The companion `infinet` crate
//! layers IO, file formats, and the CLI on top.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod autograd;
pub mod data;
pub mod error;
pub mod interaction;
pub mod layers;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod tensor;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;
