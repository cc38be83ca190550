use core::fmt::{Debug, Display};
use core::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Element type for all tensors: `f32` for training runs, `f64` for
/// verification suites and oracles.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Element tag used in the parameter container format (0 = f32, 1 = f64).
    const TYPE_TAG: u8;

    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn to_le_byte_vec(self) -> alloc::vec::Vec<u8>;
    fn from_le_byte_slice(bytes: &[u8]) -> Self;
    /// Size of one element in bytes.
    const WIDTH: usize;
}

impl Scalar for f32 {
    const TYPE_TAG: u8 = 0;
    const WIDTH: usize = 4;

    fn to_le_byte_vec(self) -> alloc::vec::Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_byte_slice(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 4];
        buf.copy_from_slice(&bytes[..4]);
        f32::from_le_bytes(buf)
    }
}

impl Scalar for f64 {
    const TYPE_TAG: u8 = 1;
    const WIDTH: usize = 8;

    fn to_le_byte_vec(self) -> alloc::vec::Vec<u8> {
        self.to_le_bytes().to_vec()
    }

    fn from_le_byte_slice(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(&bytes[..8]);
        f64::from_le_bytes(buf)
    }
}
