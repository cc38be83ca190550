//! Dense row-major N-dimensional arrays.
//!
//! The layout convention for feature maps is channels-last `(N, H, W, C)`,
//! so per-position channel vectors are contiguous. A scalar is a tensor with
//! an empty shape and one element; public constructors reject empty shapes,
//! reductions produce them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Dense tensor of `T` elements in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
}

/// Kinds of elementwise binary arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
    Div,
}

/// Kinds of elementwise unary maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryKind {
    Neg,
    Exp,
    Square,
    Sqrt,
    Relu,
    Gelu,
}

/// Kinds of reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
    Max,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidArgument(String::from(
            "constructor shape must have at least one dimension",
        )));
    }
    let mut n: usize = 1;
    for &d in shape {
        if d == 0 {
            return Err(Error::InvalidArgument(format!(
                "shape {shape:?} has a zero dimension"
            )));
        }
        n = n.checked_mul(d).ok_or_else(|| {
            Error::Overflow(format!("element count of shape {shape:?} overflows usize"))
        })?;
    }
    Ok(n)
}

impl<T: Scalar> Tensor<T> {
    /// Wraps a flat row-major buffer. `data.len()` must equal the shape's
    /// element count; an empty shape is the scalar case and needs one element.
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() || (shape.iter().any(|&d| d == 0)) {
            return Err(Error::ShapeMismatch(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    /// Scalar tensor: empty shape, one element.
    pub fn scalar(value: T) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::full(shape, T::zero())
    }

    pub fn ones(shape: &[usize]) -> Result<Self> {
        Self::full(shape, T::one())
    }

    pub fn full(shape: &[usize], value: T) -> Result<Self> {
        let n = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        })
    }

    /// Gaussian samples, deterministic for a fixed `(shape, seed)` pair.
    /// Sampling happens in f64 so f32 and f64 runs see the same stream.
    pub fn rand_normal(shape: &[usize], mean: f64, stddev: f64, seed: u64) -> Result<Self> {
        let n = check_shape(shape)?;
        if stddev < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "stddev must be nonnegative, got {stddev}"
            )));
        }
        let mut r = rng::seeded(seed);
        let dist = Normal::new(mean, stddev)
            .map_err(|_| Error::InvalidArgument(String::from("invalid normal parameters")))?;
        let data = (0..n).map(|_| T::cast(dist.sample(&mut r))).collect();
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Draws with `|z - mean| <= 2 stddev` enforced by resampling.
    pub fn rand_trunc_normal<R: Rng>(
        shape: &[usize],
        mean: f64,
        stddev: f64,
        r: &mut R,
    ) -> Result<Self> {
        let n = check_shape(shape)?;
        if stddev < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "stddev must be nonnegative, got {stddev}"
            )));
        }
        let dist: Normal<f64> = Normal::new(0.0, 1.0).expect("unit normal");
        let data = (0..n)
            .map(|_| {
                let mut z: f64 = dist.sample(r);
                while z.abs() > 2.0 {
                    z = dist.sample(r);
                }
                T::cast(mean + stddev * z)
            })
            .collect();
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// The single element of a scalar (or 1-element) tensor.
    pub fn item(&self) -> Result<T> {
        if self.data.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "item() needs exactly one element, shape is {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    /// Flat offset of a multi-index: `(i, j, k)` of shape `(A, B, C)` sits at
    /// `i*B*C + j*C + k`.
    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "index rank {} vs tensor rank {}",
                index.len(),
                self.shape.len()
            )));
        }
        let mut flat = 0;
        for (&i, &d) in index.iter().zip(&self.shape) {
            if i >= d {
                return Err(Error::InvalidArgument(format!(
                    "index {index:?} out of bounds for shape {:?}",
                    self.shape
                )));
            }
            flat = flat * d + i;
        }
        Ok(flat)
    }

    pub fn at(&self, index: &[usize]) -> Result<T> {
        Ok(self.data[self.flat_index(index)?])
    }

    /// Same data, new shape; element counts must agree.
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot reshape {:?} ({} elements) to {:?}",
                self.shape,
                self.data.len(),
                shape
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: self.data.clone(),
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise arithmetic with trailing-dimension broadcasting: shapes are
    /// aligned at the right, and size-1 dimensions stretch.
    pub fn binary(&self, kind: BinaryKind, other: &Self) -> Result<Self> {
        let out_shape = broadcast_shape(&self.shape, &other.shape)?;
        let n: usize = out_shape.iter().product::<usize>().max(1);
        let sa = broadcast_strides(&self.shape, &out_shape);
        let sb = broadcast_strides(&other.shape, &out_shape);
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; out_shape.len()];
        for _ in 0..n {
            let (mut oa, mut ob) = (0usize, 0usize);
            for (k, &i) in idx.iter().enumerate() {
                oa += i * sa[k];
                ob += i * sb[k];
            }
            let (a, b) = (self.data[oa], other.data[ob]);
            let v = match kind {
                BinaryKind::Add => a + b,
                BinaryKind::Sub => a - b,
                BinaryKind::Mul => a * b,
                BinaryKind::Div => {
                    if b == T::zero() {
                        return Err(Error::InvalidArgument(String::from(
                            "division by zero element",
                        )));
                    }
                    a / b
                }
            };
            data.push(v);
            for k in (0..out_shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < out_shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(Self {
            shape: out_shape,
            data,
        })
    }

    pub fn unary(&self, kind: UnaryKind) -> Result<Self> {
        let mut data = Vec::with_capacity(self.data.len());
        for &v in &self.data {
            let y = match kind {
                UnaryKind::Neg => -v,
                UnaryKind::Exp => {
                    let y = v.exp();
                    if !y.is_finite() {
                        return Err(Error::NonFinite(format!("exp({v}) is not finite")));
                    }
                    y
                }
                UnaryKind::Square => v * v,
                UnaryKind::Sqrt => {
                    if v < T::zero() {
                        return Err(Error::InvalidArgument(format!("sqrt of negative {v}")));
                    }
                    v.sqrt()
                }
                UnaryKind::Relu => relu(v),
                UnaryKind::Gelu => gelu(v),
            };
            data.push(y);
        }
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    /// Rank-2 matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "matmul needs rank-2 operands, got {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (other.shape[0], other.shape[1]);
        if k != k2 {
            return Err(Error::ShapeMismatch(format!(
                "matmul inner dims: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        let mut data = vec![T::zero(); m * n];
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                let row = &other.data[p * n..(p + 1) * n];
                let out = &mut data[i * n..(i + 1) * n];
                for j in 0..n {
                    out[j] = out[j] + a * row[j];
                }
            }
        }
        Ok(Self {
            shape: vec![m, n],
            data,
        })
    }

    /// Reduces along `axis`, or over everything when `axis` is `None`.
    /// The reduced axis is removed; a full reduction yields a scalar tensor.
    pub fn reduce(&self, kind: ReduceKind, axis: Option<usize>) -> Result<Self> {
        match axis {
            None => {
                let v = match kind {
                    ReduceKind::Sum => self.data.iter().copied().fold(T::zero(), |a, b| a + b),
                    ReduceKind::Mean => {
                        let s = self.data.iter().copied().fold(T::zero(), |a, b| a + b);
                        s / T::cast(self.data.len() as f64)
                    }
                    ReduceKind::Max => self
                        .data
                        .iter()
                        .copied()
                        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a }),
                };
                Ok(Self::scalar(v))
            }
            Some(ax) => {
                if ax >= self.rank() {
                    return Err(Error::InvalidArgument(format!(
                        "axis {ax} out of range for rank {}",
                        self.rank()
                    )));
                }
                let outer: usize = self.shape[..ax].iter().product();
                let mid = self.shape[ax];
                let inner: usize = self.shape[ax + 1..].iter().product();
                let mut out_shape = self.shape.clone();
                out_shape.remove(ax);
                let init = match kind {
                    ReduceKind::Max => T::neg_infinity(),
                    _ => T::zero(),
                };
                let mut data = vec![init; outer * inner];
                for o in 0..outer {
                    for m in 0..mid {
                        let base = (o * mid + m) * inner;
                        let dst = &mut data[o * inner..(o + 1) * inner];
                        match kind {
                            ReduceKind::Sum | ReduceKind::Mean => {
                                for i in 0..inner {
                                    dst[i] = dst[i] + self.data[base + i];
                                }
                            }
                            ReduceKind::Max => {
                                for i in 0..inner {
                                    let v = self.data[base + i];
                                    if v > dst[i] {
                                        dst[i] = v;
                                    }
                                }
                            }
                        }
                    }
                }
                if kind == ReduceKind::Mean {
                    let inv = T::one() / T::cast(mid as f64);
                    for v in &mut data {
                        *v = *v * inv;
                    }
                }
                if out_shape.is_empty() {
                    Ok(Self::scalar(data[0]))
                } else {
                    Self::from_vec(out_shape, data)
                }
            }
        }
    }

    /// Accumulates `other` into `self` elementwise (shapes must match).
    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "add_assign {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
        Ok(())
    }

    /// Rank-2 transpose.
    pub fn transpose2(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "transpose2 needs rank 2, got {:?}",
                self.shape
            )));
        }
        let (m, n) = (self.shape[0], self.shape[1]);
        let mut data = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = self.data[i * n + j];
            }
        }
        Ok(Self {
            shape: vec![n, m],
            data,
        })
    }

    /// Identity matrix of side `n`.
    pub fn identity(n: usize) -> Result<Self> {
        let mut t = Self::zeros(&[n, n])?;
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        Ok(t)
    }

    /// Converts elements to another scalar type through f64.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::cast(v.as_f64())).collect(),
        }
    }
}

pub fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// GELU, tanh approximation: `0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))`.
pub fn gelu<T: Scalar>(v: T) -> T {
    let c = (T::cast(2.0) / T::PI()).sqrt();
    let half = T::cast(0.5);
    let k = T::cast(0.044715);
    half * v * (T::one() + (c * (v + k * v * v * v)).tanh())
}

/// Derivative of the tanh-approximation GELU.
pub fn gelu_grad<T: Scalar>(v: T) -> T {
    let c = (T::cast(2.0) / T::PI()).sqrt();
    let half = T::cast(0.5);
    let k = T::cast(0.044715);
    let u = c * (v + k * v * v * v);
    let t = u.tanh();
    let sech2 = T::one() - t * t;
    let du = c * (T::one() + T::cast(3.0) * k * v * v);
    half * (T::one() + t) + half * v * sech2 * du
}

/// Broadcast shape under the trailing-dimension rule.
pub fn broadcast_shape(a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0usize; rank];
    for k in 0..rank {
        let da = if k < rank - a.len() {
            1
        } else {
            a[k - (rank - a.len())]
        };
        let db = if k < rank - b.len() {
            1
        } else {
            b[k - (rank - b.len())]
        };
        out[k] = if da == db {
            da
        } else if da == 1 {
            db
        } else if db == 1 {
            da
        } else {
            return Err(Error::ShapeMismatch(format!(
                "shapes {a:?} and {b:?} do not broadcast"
            )));
        };
    }
    Ok(out)
}

/// Row-major strides of `shape` stretched into `out_shape`, with stride 0 on
/// broadcast dimensions.
fn broadcast_strides(shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let rank = out_shape.len();
    let offset = rank - shape.len();
    let mut strides = vec![0usize; rank];
    let mut s = 1usize;
    for k in (0..shape.len()).rev() {
        if shape[k] != 1 {
            strides[offset + k] = s;
        }
        s *= shape[k];
    }
    strides
}
