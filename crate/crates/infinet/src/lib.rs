//! Filesystem, serialization, and training-run plumbing around
//! [`infinet_core`]: CIFAR-10 file loading, the parameter container and
//! config sidecar, metrics CSV emission, and the epoch-level training
//! runner behind the command-line interface.

pub mod checkpoint;
pub mod cifar;
pub mod error;
pub mod metrics;
pub mod runner;

pub use error::{AppError, Result};
