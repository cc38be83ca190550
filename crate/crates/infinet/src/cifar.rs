//! CIFAR-10 binary files on disk, delegating the record codec to
//! [`infinet_core::data`]. Each file is a sequence of 3073-byte records:
//! one label byte, then 3×1024 pixel bytes in planar R,G,B row-major order.

use std::fs;
use std::path::Path;

use infinet_core::data::{decode_cifar10_bin, encode_cifar10_bin, Sample};
use infinet_core::scalar::Scalar;

use crate::error::{AppError, Result};

/// Standard training shards of a CIFAR-10 binary distribution directory.
pub const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];

/// Standard held-out shard.
pub const TEST_FILE: &str = "test_batch.bin";

/// Loads one binary file of 3073-byte records.
pub fn load_cifar10_bin<T: Scalar>(path: &Path) -> Result<Vec<Sample<T>>> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    decode_cifar10_bin(&bytes)
        .map_err(|e| AppError::Format(format!("{}: {e}", path.display())))
}

/// Writes samples as one binary file in the same record layout. Images must
/// be 32×32; values are quantized to bytes.
pub fn save_cifar10_bin<T: Scalar>(path: &Path, samples: &[Sample<T>]) -> Result<()> {
    let bytes = encode_cifar10_bin(samples)?;
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

/// Loads a CIFAR-10 distribution directory: the five training shards
/// concatenated in order, and the test shard, as (train, test).
pub fn load_cifar10_dir<T: Scalar>(dir: &Path) -> Result<(Vec<Sample<T>>, Vec<Sample<T>>)> {
    let mut train = Vec::new();
    for name in TRAIN_FILES {
        train.extend(load_cifar10_bin(&dir.join(name))?);
    }
    let test = load_cifar10_bin(&dir.join(TEST_FILE))?;
    Ok((train, test))
}
