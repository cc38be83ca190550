//! Differentiable network building blocks over channels-last `(N,H,W,C)`
//! feature maps: pointwise linear channel mixers, depthwise convolution,
//! LayerNorm, a two-layer MLP, and the strided (stem/downsample)
//! convolution — plus the parameter store that owns every trainable tensor.
//!
//! Each operation exists in two forms: a raw compute kernel and a [`Graph`]
//! recording method with an analytic backward rule. Inner loops run over the
//! contiguous channel axis in a fixed order, so results are deterministic
//! for identical inputs.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::autograd::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Handle to one parameter tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Owns every trainable tensor of a model, with a stable order, a unique
/// name per tensor, and a flag controlling whether weight decay applies
/// (true for weights, false for biases and norm parameters).
pub struct ParamStore<T: Scalar> {
    tensors: Vec<Tensor<T>>,
    names: Vec<String>,
    decay: Vec<bool>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            tensors: Vec::new(),
            names: Vec::new(),
            decay: Vec::new(),
        }
    }

    pub fn register(&mut self, name: String, tensor: Tensor<T>, decay: bool) -> Result<ParamId> {
        if self.names.iter().any(|n| *n == name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter name {name}"
            )));
        }
        let id = ParamId(self.tensors.len());
        self.tensors.push(tensor);
        self.names.push(name);
        self.decay.push(decay);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn decays(&self, id: ParamId) -> bool {
        self.decay[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn element_count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Converts every parameter to another precision through f64.
    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            tensors: self.tensors.iter().map(|t| t.cast()).collect(),
            names: self.names.clone(),
            decay: self.decay.clone(),
        }
    }
}

impl<T: Scalar> Default for ParamStore<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Node ids of every parameter bound onto one [`Graph`] tape, index-aligned
/// with the [`ParamStore`] that produced them.
pub struct BoundParams {
    ids: Vec<NodeId>,
}

impl BoundParams {
    pub fn id(&self, p: ParamId) -> NodeId {
        self.ids[p.0]
    }

    /// Binding from explicit node ids, index-aligned with a store's
    /// parameter order. Used by gradient checks that perturb parameters
    /// as plain graph inputs.
    pub(crate) fn from_ids(ids: Vec<NodeId>) -> Self {
        Self { ids }
    }
}

/// Copies every parameter onto the tape as a leaf; `trainable` controls
/// whether gradients flow to them.
pub fn bind_params<T: Scalar>(
    graph: &mut Graph<T>,
    store: &ParamStore<T>,
    trainable: bool,
) -> BoundParams {
    let ids = store
        .ids()
        .map(|p| graph.leaf(store.get(p).clone(), trainable))
        .collect();
    BoundParams { ids }
}

/// Standard deviation used for conv/linear weight initialization.
pub const INIT_STD: f64 = 0.02;

fn init_weight<T: Scalar, R: Rng>(shape: &[usize], rng: &mut R) -> Result<Tensor<T>> {
    Tensor::rand_trunc_normal(shape, 0.0, INIT_STD, rng)
}

/// Pointwise channel mixer: `y[n,h,w,:] = x[n,h,w,:] W + b`.
#[derive(Debug, Clone, Copy)]
pub struct LinearLayer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub c_in: usize,
    pub c_out: usize,
}

impl LinearLayer {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        c_in: usize,
        c_out: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let weight = store.register(
            format!("{name}.weight"),
            init_weight(&[c_in, c_out], rng)?,
            true,
        )?;
        let bias = store.register(format!("{name}.bias"), Tensor::zeros(&[c_out])?, false)?;
        Ok(Self {
            weight,
            bias,
            c_in,
            c_out,
        })
    }

    pub fn param_count(c_in: usize, c_out: usize) -> usize {
        c_in * c_out + c_out
    }

    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        graph.linear(x, bound.id(self.weight), bound.id(self.bias))
    }
}

/// One K×K filter per channel, stride 1, zero padding (K−1)/2: spatial size
/// and channel count are preserved.
#[derive(Debug, Clone, Copy)]
pub struct DepthwiseConv {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub k: usize,
    pub c: usize,
}

impl DepthwiseConv {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        k: usize,
        c: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if k % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "depthwise kernel size must be odd, got {k}"
            )));
        }
        let kernel = store.register(
            format!("{name}.kernel"),
            init_weight(&[k, k, c], rng)?,
            true,
        )?;
        let bias = store.register(format!("{name}.bias"), Tensor::zeros(&[c])?, false)?;
        Ok(Self { kernel, bias, k, c })
    }

    pub fn param_count(k: usize, c: usize) -> usize {
        k * k * c + c
    }

    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        graph.dwconv(x, bound.id(self.kernel), bound.id(self.bias))
    }
}

/// Channel-wise affine normalization over the channel axis per position.
#[derive(Debug, Clone, Copy)]
pub struct LayerNormLayer {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub c: usize,
    pub eps: f64,
}

/// Default LayerNorm epsilon.
pub const LAYERNORM_EPS: f64 = 1e-6;

impl LayerNormLayer {
    pub fn new<T: Scalar>(store: &mut ParamStore<T>, name: &str, c: usize) -> Result<Self> {
        let gamma = store.register(format!("{name}.gamma"), Tensor::ones(&[c])?, false)?;
        let beta = store.register(format!("{name}.beta"), Tensor::zeros(&[c])?, false)?;
        Ok(Self {
            gamma,
            beta,
            c,
            eps: LAYERNORM_EPS,
        })
    }

    pub fn param_count(c: usize) -> usize {
        2 * c
    }

    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        graph.layer_norm(x, bound.id(self.gamma), bound.id(self.beta), self.eps)
    }
}

/// Two pointwise linear layers around a GELU: `fc2(gelu(fc1(x)))`.
#[derive(Debug, Clone, Copy)]
pub struct MlpLayer {
    pub fc1: LinearLayer,
    pub fc2: LinearLayer,
}

impl MlpLayer {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        c: usize,
        ratio: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let hidden = c * ratio;
        let fc1 = LinearLayer::new(store, &format!("{name}.fc1"), c, hidden, rng)?;
        let fc2 = LinearLayer::new(store, &format!("{name}.fc2"), hidden, c, rng)?;
        Ok(Self { fc1, fc2 })
    }

    pub fn param_count(c: usize, ratio: usize) -> usize {
        LinearLayer::param_count(c, c * ratio) + LinearLayer::param_count(c * ratio, c)
    }

    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        let h = self.fc1.forward(graph, bound, x)?;
        let h = graph.gelu(h)?;
        self.fc2.forward(graph, bound, h)
    }
}

/// Full (non-depthwise) convolution with no padding, used as the stem
/// (K=4, stride 4) and the stage downsamplers (K=2, stride 2).
#[derive(Debug, Clone, Copy)]
pub struct StridedConv {
    pub kernel: ParamId,
    pub bias: ParamId,
    pub k: usize,
    pub stride: usize,
    pub c_in: usize,
    pub c_out: usize,
}

impl StridedConv {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        k: usize,
        stride: usize,
        c_in: usize,
        c_out: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if k < 1 || stride < 1 {
            return Err(Error::InvalidArgument(format!(
                "conv needs k, stride >= 1, got k={k} stride={stride}"
            )));
        }
        let kernel = store.register(
            format!("{name}.kernel"),
            init_weight(&[k, k, c_in, c_out], rng)?,
            true,
        )?;
        let bias = store.register(format!("{name}.bias"), Tensor::zeros(&[c_out])?, false)?;
        Ok(Self {
            kernel,
            bias,
            k,
            stride,
            c_in,
            c_out,
        })
    }

    pub fn param_count(k: usize, c_in: usize, c_out: usize) -> usize {
        k * k * c_in * c_out + c_out
    }

    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        graph.strided_conv(x, bound.id(self.kernel), bound.id(self.bias), self.stride)
    }
}

fn expect_rank4<T: Scalar>(x: &Tensor<T>, what: &str) -> Result<(usize, usize, usize, usize)> {
    if x.rank() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "{what} needs (N,H,W,C) input, got {:?}",
            x.shape()
        )));
    }
    let s = x.shape();
    Ok((s[0], s[1], s[2], s[3]))
}

// ---------------------------------------------------------------------------
// Raw kernels. All treat the channel axis as the contiguous inner loop.
// ---------------------------------------------------------------------------

/// `y = xW + b` applied to the trailing axis; x may be rank 2 (rows, C_in)
/// or rank 4 (N,H,W,C_in).
fn linear_raw<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if w.rank() != 2 || b.rank() != 1 || b.len() != w.shape()[1] {
        return Err(Error::ShapeMismatch(format!(
            "linear needs weight (C_in,C_out) and bias (C_out), got {:?} and {:?}",
            w.shape(),
            b.shape()
        )));
    }
    let (c_in, c_out) = (w.shape()[0], w.shape()[1]);
    if x.rank() < 1 || *x.shape().last().unwrap() != c_in {
        return Err(Error::ShapeMismatch(format!(
            "linear input {:?} does not end in C_in={c_in}",
            x.shape()
        )));
    }
    let rows = x.len() / c_in;
    let mut out = vec![T::zero(); rows * c_out];
    let (xd, wd, bd) = (x.data(), w.data(), b.data());
    for r in 0..rows {
        let orow = &mut out[r * c_out..(r + 1) * c_out];
        orow.copy_from_slice(bd);
        let xrow = &xd[r * c_in..(r + 1) * c_in];
        for (ci, &xv) in xrow.iter().enumerate() {
            let wrow = &wd[ci * c_out..(ci + 1) * c_out];
            for (o, &wv) in orow.iter_mut().zip(wrow) {
                *o = *o + xv * wv;
            }
        }
    }
    let mut shape = x.shape().to_vec();
    *shape.last_mut().unwrap() = c_out;
    Tensor::from_vec(shape, out)
}

fn linear_backward<T: Scalar>(
    g: &Tensor<T>,
    x: &Tensor<T>,
    w: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (c_in, c_out) = (w.shape()[0], w.shape()[1]);
    let rows = x.len() / c_in;
    let (gd, xd, wd) = (g.data(), x.data(), w.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dw = vec![T::zero(); w.len()];
    let mut db = vec![T::zero(); c_out];
    for r in 0..rows {
        let grow = &gd[r * c_out..(r + 1) * c_out];
        let xrow = &xd[r * c_in..(r + 1) * c_in];
        let dxrow = &mut dx[r * c_in..(r + 1) * c_in];
        for (db_c, &gv) in db.iter_mut().zip(grow) {
            *db_c = *db_c + gv;
        }
        for ci in 0..c_in {
            let wrow = &wd[ci * c_out..(ci + 1) * c_out];
            let dwrow = &mut dw[ci * c_out..(ci + 1) * c_out];
            // dx[r,ci] = Σ_co g[r,co] w[ci,co]; dw[ci,co] += x[r,ci] g[r,co]
            let mut acc = T::zero();
            let xv = xrow[ci];
            for ((&gv, &wv), dwv) in grow.iter().zip(wrow).zip(dwrow.iter_mut()) {
                acc = acc + gv * wv;
                *dwv = *dwv + xv * gv;
            }
            dxrow[ci] = acc;
        }
    }
    Ok((
        Tensor::from_vec(x.shape().to_vec(), dx)?,
        Tensor::from_vec(w.shape().to_vec(), dw)?,
        Tensor::from_vec(vec![c_out], db)?,
    ))
}

/// Depthwise cross-correlation, stride 1, zero padding (K−1)/2.
fn dwconv_raw<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, h, w, c) = expect_rank4(x, "dwconv")?;
    if kernel.rank() != 3 || kernel.shape()[0] != kernel.shape()[1] {
        return Err(Error::ShapeMismatch(format!(
            "dwconv kernel must be (K,K,C), got {:?}",
            kernel.shape()
        )));
    }
    let k = kernel.shape()[0];
    if k % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "dwconv kernel size must be odd, got {k}"
        )));
    }
    if kernel.shape()[2] != c || bias.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "dwconv kernel {:?} / bias {:?} do not match C={c}",
            kernel.shape(),
            bias.shape()
        )));
    }
    let pad = (k - 1) / 2;
    let (xd, kd, bd) = (x.data(), kernel.data(), bias.data());
    let mut out = vec![T::zero(); n * h * w * c];
    for ni in 0..n {
        for oh in 0..h {
            let orow = &mut out[(ni * h + oh) * w * c..(ni * h + oh + 1) * w * c];
            for ow in 0..w {
                orow[ow * c..(ow + 1) * c].copy_from_slice(bd);
            }
            for kh in 0..k {
                let ih = (oh + kh) as isize - pad as isize;
                if ih < 0 || ih >= h as isize {
                    continue;
                }
                let xrow = &xd[(ni * h + ih as usize) * w * c..(ni * h + ih as usize + 1) * w * c];
                for kw in 0..k {
                    let krow = &kd[(kh * k + kw) * c..(kh * k + kw + 1) * c];
                    // valid ow range keeps iw = ow + kw − pad inside [0, w)
                    let ow_lo = pad.saturating_sub(kw);
                    let ow_hi = (w + pad).saturating_sub(kw).min(w);
                    for ow in ow_lo..ow_hi {
                        let iw = ow + kw - pad;
                        let xs = &xrow[iw * c..(iw + 1) * c];
                        let os = &mut orow[ow * c..(ow + 1) * c];
                        for ((o, &xv), &kv) in os.iter_mut().zip(xs).zip(krow) {
                            *o = *o + xv * kv;
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(vec![n, h, w, c], out)
}

fn dwconv_backward<T: Scalar>(
    g: &Tensor<T>,
    x: &Tensor<T>,
    kernel: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, h, w, c) = expect_rank4(x, "dwconv")?;
    let k = kernel.shape()[0];
    let pad = (k - 1) / 2;
    let (gd, xd, kd) = (g.data(), x.data(), kernel.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dk = vec![T::zero(); kernel.len()];
    let mut db = vec![T::zero(); c];
    for ni in 0..n {
        for oh in 0..h {
            let grow_base = (ni * h + oh) * w * c;
            for ow in 0..w {
                let gs = &gd[grow_base + ow * c..grow_base + (ow + 1) * c];
                for (d, &gv) in db.iter_mut().zip(gs) {
                    *d = *d + gv;
                }
            }
            for kh in 0..k {
                let ih = (oh + kh) as isize - pad as isize;
                if ih < 0 || ih >= h as isize {
                    continue;
                }
                let xrow_base = (ni * h + ih as usize) * w * c;
                for kw in 0..k {
                    let kbase = (kh * k + kw) * c;
                    let ow_lo = pad.saturating_sub(kw);
                    let ow_hi = (w + pad).saturating_sub(kw).min(w);
                    for ow in ow_lo..ow_hi {
                        let iw = ow + kw - pad;
                        let gs = &gd[grow_base + ow * c..grow_base + (ow + 1) * c];
                        let xs = &xd[xrow_base + iw * c..xrow_base + (iw + 1) * c];
                        let dxs = &mut dx[xrow_base + iw * c..xrow_base + (iw + 1) * c];
                        let krow = &kd[kbase..kbase + c];
                        let dkrow = &mut dk[kbase..kbase + c];
                        for ci in 0..c {
                            dxs[ci] = dxs[ci] + gs[ci] * krow[ci];
                            dkrow[ci] = dkrow[ci] + gs[ci] * xs[ci];
                        }
                    }
                }
            }
        }
    }
    Ok((
        Tensor::from_vec(x.shape().to_vec(), dx)?,
        Tensor::from_vec(kernel.shape().to_vec(), dk)?,
        Tensor::from_vec(vec![c], db)?,
    ))
}

/// Per-position channel statistics for LayerNorm: mean and reciprocal
/// standard deviation `1/√(σ² + eps)` (population variance).
fn layernorm_stats<T: Scalar>(x: &Tensor<T>, c: usize, eps: f64) -> (Vec<T>, Vec<T>) {
    let rows = x.len() / c;
    let xd = x.data();
    let invc = T::one() / T::cast(c as f64);
    let epsc = T::cast(eps);
    let mut mean = Vec::with_capacity(rows);
    let mut rstd = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &xd[r * c..(r + 1) * c];
        let mut s = T::zero();
        for &v in row {
            s = s + v;
        }
        let mu = s * invc;
        let mut var = T::zero();
        for &v in row {
            let d = v - mu;
            var = var + d * d;
        }
        var = var * invc;
        mean.push(mu);
        rstd.push(T::one() / (var + epsc).sqrt());
    }
    (mean, rstd)
}

fn layernorm_raw<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: f64,
) -> Result<Tensor<T>> {
    let c = *x.shape().last().ok_or_else(|| {
        Error::ShapeMismatch(String::from("layer_norm needs at least one axis"))
    })?;
    if gamma.len() != c || beta.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "layer_norm gamma/beta length {} / {} vs C={c}",
            gamma.len(),
            beta.len()
        )));
    }
    let rows = x.len() / c;
    let (mean, rstd) = layernorm_stats(x, c, eps);
    let (xd, gd, bd) = (x.data(), gamma.data(), beta.data());
    let mut out = vec![T::zero(); x.len()];
    for r in 0..rows {
        let row = &xd[r * c..(r + 1) * c];
        let orow = &mut out[r * c..(r + 1) * c];
        let (mu, rs) = (mean[r], rstd[r]);
        for ci in 0..c {
            orow[ci] = gd[ci] * (row[ci] - mu) * rs + bd[ci];
        }
    }
    Tensor::from_vec(x.shape().to_vec(), out)
}

fn layernorm_backward<T: Scalar>(
    g: &Tensor<T>,
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    eps: f64,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let c = *x.shape().last().unwrap();
    let rows = x.len() / c;
    let (mean, rstd) = layernorm_stats(x, c, eps);
    let (gd, xd, gam) = (g.data(), x.data(), gamma.data());
    let invc = T::one() / T::cast(c as f64);
    let mut dx = vec![T::zero(); x.len()];
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for r in 0..rows {
        let grow = &gd[r * c..(r + 1) * c];
        let xrow = &xd[r * c..(r + 1) * c];
        let (mu, rs) = (mean[r], rstd[r]);
        // h = g·γ; dx = (h − mean(h) − x̂·mean(h·x̂)) · rstd
        let mut h_mean = T::zero();
        let mut hx_mean = T::zero();
        for ci in 0..c {
            let xhat = (xrow[ci] - mu) * rs;
            let h = grow[ci] * gam[ci];
            h_mean = h_mean + h;
            hx_mean = hx_mean + h * xhat;
            dgamma[ci] = dgamma[ci] + grow[ci] * xhat;
            dbeta[ci] = dbeta[ci] + grow[ci];
        }
        h_mean = h_mean * invc;
        hx_mean = hx_mean * invc;
        let dxrow = &mut dx[r * c..(r + 1) * c];
        for ci in 0..c {
            let xhat = (xrow[ci] - mu) * rs;
            let h = grow[ci] * gam[ci];
            dxrow[ci] = (h - h_mean - xhat * hx_mean) * rs;
        }
    }
    Ok((
        Tensor::from_vec(x.shape().to_vec(), dx)?,
        Tensor::from_vec(vec![c], dgamma)?,
        Tensor::from_vec(vec![c], dbeta)?,
    ))
}

fn strided_out_dim(h: usize, k: usize, stride: usize) -> Result<usize> {
    if h < k || (h - k) % stride != 0 {
        return Err(Error::ShapeMismatch(format!(
            "spatial dim {h} incompatible with kernel {k} stride {stride} (no padding)"
        )));
    }
    Ok((h - k) / stride + 1)
}

/// Unpadded strided cross-correlation with a full `(K,K,C_in,C_out)` kernel.
fn strided_conv_raw<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>> {
    let (n, h, w, c_in) = expect_rank4(x, "strided_conv")?;
    if kernel.rank() != 4 || kernel.shape()[0] != kernel.shape()[1] {
        return Err(Error::ShapeMismatch(format!(
            "strided_conv kernel must be (K,K,C_in,C_out), got {:?}",
            kernel.shape()
        )));
    }
    let k = kernel.shape()[0];
    let c_out = kernel.shape()[3];
    if kernel.shape()[2] != c_in || bias.len() != c_out {
        return Err(Error::ShapeMismatch(format!(
            "strided_conv kernel {:?} / bias {:?} vs C_in={c_in}",
            kernel.shape(),
            bias.shape()
        )));
    }
    let oh = strided_out_dim(h, k, stride)?;
    let ow = strided_out_dim(w, k, stride)?;
    let (xd, kd, bd) = (x.data(), kernel.data(), bias.data());
    let mut out = vec![T::zero(); n * oh * ow * c_out];
    for ni in 0..n {
        for oi in 0..oh {
            for oj in 0..ow {
                let obase = ((ni * oh + oi) * ow + oj) * c_out;
                out[obase..obase + c_out].copy_from_slice(bd);
                for kh in 0..k {
                    let ih = oi * stride + kh;
                    for kw in 0..k {
                        let iw = oj * stride + kw;
                        let xbase = ((ni * h + ih) * w + iw) * c_in;
                        let kbase = (kh * k + kw) * c_in * c_out;
                        for ci in 0..c_in {
                            let xv = xd[xbase + ci];
                            let krow = &kd[kbase + ci * c_out..kbase + (ci + 1) * c_out];
                            let orow = &mut out[obase..obase + c_out];
                            for (o, &kv) in orow.iter_mut().zip(krow) {
                                *o = *o + xv * kv;
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(vec![n, oh, ow, c_out], out)
}

fn strided_conv_backward<T: Scalar>(
    g: &Tensor<T>,
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, h, w, c_in) = expect_rank4(x, "strided_conv")?;
    let k = kernel.shape()[0];
    let c_out = kernel.shape()[3];
    let (oh, ow) = (strided_out_dim(h, k, stride)?, strided_out_dim(w, k, stride)?);
    let (gd, xd, kd) = (g.data(), x.data(), kernel.data());
    let mut dx = vec![T::zero(); x.len()];
    let mut dk = vec![T::zero(); kernel.len()];
    let mut db = vec![T::zero(); c_out];
    for ni in 0..n {
        for oi in 0..oh {
            for oj in 0..ow {
                let obase = ((ni * oh + oi) * ow + oj) * c_out;
                let gs = &gd[obase..obase + c_out];
                for (d, &gv) in db.iter_mut().zip(gs) {
                    *d = *d + gv;
                }
                for kh in 0..k {
                    let ih = oi * stride + kh;
                    for kw in 0..k {
                        let iw = oj * stride + kw;
                        let xbase = ((ni * h + ih) * w + iw) * c_in;
                        let kbase = (kh * k + kw) * c_in * c_out;
                        for ci in 0..c_in {
                            let krow = &kd[kbase + ci * c_out..kbase + (ci + 1) * c_out];
                            let dkrow = &mut dk[kbase + ci * c_out..kbase + (ci + 1) * c_out];
                            let xv = xd[xbase + ci];
                            let mut acc = T::zero();
                            for ((&gv, &kv), dkv) in gs.iter().zip(krow).zip(dkrow.iter_mut()) {
                                acc = acc + gv * kv;
                                *dkv = *dkv + gv * xv;
                            }
                            dx[xbase + ci] = dx[xbase + ci] + acc;
                        }
                    }
                }
            }
        }
    }
    Ok((
        Tensor::from_vec(x.shape().to_vec(), dx)?,
        Tensor::from_vec(kernel.shape().to_vec(), dk)?,
        Tensor::from_vec(vec![c_out], db)?,
    ))
}

/// Mean over the two spatial axes: `(N,H,W,C) → (N,C)`.
fn global_avg_pool_raw<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, h, w, c) = expect_rank4(x, "global_avg_pool")?;
    let inv = T::one() / T::cast((h * w) as f64);
    let xd = x.data();
    let mut out = vec![T::zero(); n * c];
    for ni in 0..n {
        let orow = &mut out[ni * c..(ni + 1) * c];
        for p in 0..h * w {
            let xs = &xd[(ni * h * w + p) * c..(ni * h * w + p + 1) * c];
            for (o, &xv) in orow.iter_mut().zip(xs) {
                *o = *o + xv;
            }
        }
        for o in orow.iter_mut() {
            *o = *o * inv;
        }
    }
    Tensor::from_vec(vec![n, c], out)
}

// ---------------------------------------------------------------------------
// Graph-recorded versions with analytic backward rules.
// ---------------------------------------------------------------------------

impl<T: Scalar> Graph<T> {
    /// Pointwise linear map over the trailing (channel) axis.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let value = linear_raw(self.value(x), self.value(w), self.value(b))?;
        let backward = Box::new(
            |g: &Tensor<T>, _out: &Tensor<T>, parents: &[&Tensor<T>]| {
                let (dx, dw, db) = linear_backward(g, parents[0], parents[1])?;
                Ok(vec![dx, dw, db])
            },
        );
        Ok(self.push(value, vec![x, w, b], backward))
    }

    /// Depthwise convolution, stride 1, same-size zero padding.
    pub fn dwconv(&mut self, x: NodeId, kernel: NodeId, bias: NodeId) -> Result<NodeId> {
        let value = dwconv_raw(self.value(x), self.value(kernel), self.value(bias))?;
        let backward = Box::new(
            |g: &Tensor<T>, _out: &Tensor<T>, parents: &[&Tensor<T>]| {
                let (dx, dk, db) = dwconv_backward(g, parents[0], parents[1])?;
                Ok(vec![dx, dk, db])
            },
        );
        Ok(self.push(value, vec![x, kernel, bias], backward))
    }

    /// LayerNorm over the trailing (channel) axis with affine parameters.
    pub fn layer_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        eps: f64,
    ) -> Result<NodeId> {
        let value = layernorm_raw(self.value(x), self.value(gamma), self.value(beta), eps)?;
        let backward = Box::new(
            move |g: &Tensor<T>, _out: &Tensor<T>, parents: &[&Tensor<T>]| {
                let (dx, dgamma, dbeta) = layernorm_backward(g, parents[0], parents[1], eps)?;
                Ok(vec![dx, dgamma, dbeta])
            },
        );
        Ok(self.push(value, vec![x, gamma, beta], backward))
    }

    /// Unpadded strided convolution (stem and downsample layers).
    pub fn strided_conv(
        &mut self,
        x: NodeId,
        kernel: NodeId,
        bias: NodeId,
        stride: usize,
    ) -> Result<NodeId> {
        let value = strided_conv_raw(
            self.value(x),
            self.value(kernel),
            self.value(bias),
            stride,
        )?;
        let backward = Box::new(
            move |g: &Tensor<T>, _out: &Tensor<T>, parents: &[&Tensor<T>]| {
                let (dx, dk, db) = strided_conv_backward(g, parents[0], parents[1], stride)?;
                Ok(vec![dx, dk, db])
            },
        );
        Ok(self.push(value, vec![x, kernel, bias], backward))
    }

    /// Spatial mean pooling `(N,H,W,C) → (N,C)`.
    pub fn global_avg_pool(&mut self, x: NodeId) -> Result<NodeId> {
        let value = global_avg_pool_raw(self.value(x))?;
        let backward = Box::new(
            |g: &Tensor<T>, _out: &Tensor<T>, parents: &[&Tensor<T>]| {
                let x = parents[0];
                let (n, h, w, c) = expect_rank4(x, "global_avg_pool")?;
                let inv = T::one() / T::cast((h * w) as f64);
                let gd = g.data();
                let mut dx = vec![T::zero(); x.len()];
                for ni in 0..n {
                    let grow = &gd[ni * c..(ni + 1) * c];
                    for p in 0..h * w {
                        let ds = &mut dx[(ni * h * w + p) * c..(ni * h * w + p + 1) * c];
                        for (d, &gv) in ds.iter_mut().zip(grow) {
                            *d = gv * inv;
                        }
                    }
                }
                Ok(vec![Tensor::from_vec(x.shape().to_vec(), dx)?])
            },
        );
        Ok(self.push(value, vec![x], backward))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::grad_check_multi;
    use crate::rng;
    use crate::tensor::gelu;

    fn randn(shape: &[usize], seed: u64) -> Tensor<f64> {
        Tensor::rand_normal(shape, 0.0, 1.0, seed).unwrap()
    }

    #[test]
    fn linear_identity_weight_is_identity() {
        let x = randn(&[2, 3, 3, 4], 1);
        let w = Tensor::<f64>::identity(4).unwrap();
        let b = Tensor::<f64>::zeros(&[4]).unwrap();
        let y = linear_raw(&x, &w, &b).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn linear_1x1_spatial_reduces_to_matmul() {
        let x = randn(&[5, 1, 1, 3], 2);
        let w = randn(&[3, 4], 3);
        let b = randn(&[4], 4);
        let y = linear_raw(&x, &w, &b).unwrap();
        let xm = x.reshape(&[5, 3]).unwrap();
        let want = xm.matmul(&w).unwrap();
        for r in 0..5 {
            for j in 0..4 {
                let expect = want.data()[r * 4 + j] + b.data()[j];
                let got = y.data()[r * 4 + j];
                assert!((got - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_gradcheck() {
        let x = randn(&[2, 2, 2, 3], 5);
        let w = randn(&[3, 4], 6);
        let b = randn(&[4], 7);
        let report = grad_check_multi(
            |g, ids| {
                let y = g.linear(ids[0], ids[1], ids[2])?;
                g.sum_all(y)
            },
            &[x, w, b],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn dwconv_delta_kernel_is_identity() {
        for (h, w, c) in [(1usize, 1usize, 1usize), (4, 5, 3), (7, 7, 2)] {
            let x = randn(&[2, h, w, c], 11);
            let mut kernel = Tensor::<f64>::zeros(&[3, 3, c]).unwrap();
            for ci in 0..c {
                kernel.data_mut()[(1 * 3 + 1) * c + ci] = 1.0; // center tap
            }
            let bias = Tensor::<f64>::zeros(&[c]).unwrap();
            let y = dwconv_raw(&x, &kernel, &bias).unwrap();
            assert_eq!(y, x, "shape ({h},{w},{c})");
        }
    }

    #[test]
    fn dwconv_ones_kernel_counts_neighbors() {
        // All-ones 3×3 kernel over constant-1 input sums the 3×3 window:
        // 9 at interior pixels.
        let x = Tensor::<f64>::ones(&[1, 5, 5, 1]).unwrap();
        let kernel = Tensor::<f64>::ones(&[3, 3, 1]).unwrap();
        let bias = Tensor::<f64>::zeros(&[1]).unwrap();
        let y = dwconv_raw(&x, &kernel, &bias).unwrap();
        for i in 1..4 {
            for j in 1..4 {
                assert_eq!(y.at(&[0, i, j, 0]).unwrap(), 9.0);
            }
        }
        // Corner sees a 2×2 window.
        assert_eq!(y.at(&[0, 0, 0, 0]).unwrap(), 4.0);
    }

    #[test]
    fn dwconv_translation_equivariance_interior() {
        let h = 6;
        let x = randn(&[1, h, 6, 2], 13);
        // xs[h] = x[h−1], zero first row.
        let mut xs = Tensor::<f64>::zeros(&[1, h, 6, 2]).unwrap();
        for i in 1..h {
            for j in 0..6 {
                for c in 0..2 {
                    let v = x.at(&[0, i - 1, j, c]).unwrap();
                    let idx = xs.flat_index(&[0, i, j, c]).unwrap();
                    xs.data_mut()[idx] = v;
                }
            }
        }
        let kernel = randn(&[3, 3, 2], 14);
        let bias = randn(&[2], 15);
        let y = dwconv_raw(&x, &kernel, &bias).unwrap();
        let ys = dwconv_raw(&xs, &kernel, &bias).unwrap();
        // Rows whose 3×3 support avoids the padded border in both images.
        for i in 2..h - 1 {
            for j in 1..5 {
                for c in 0..2 {
                    let a = ys.at(&[0, i, j, c]).unwrap();
                    let b = y.at(&[0, i - 1, j, c]).unwrap();
                    assert!((a - b).abs() < 1e-12, "({i},{j},{c})");
                }
            }
        }
    }

    #[test]
    fn dwconv_rejects_even_kernel() {
        let x = randn(&[1, 4, 4, 1], 16);
        let kernel = Tensor::<f64>::ones(&[2, 2, 1]).unwrap();
        let bias = Tensor::<f64>::zeros(&[1]).unwrap();
        assert!(dwconv_raw(&x, &kernel, &bias).is_err());
        let mut store = ParamStore::<f64>::new();
        let mut r = rng::seeded(0);
        assert!(DepthwiseConv::new(&mut store, "dw", 4, 8, &mut r).is_err());
    }

    #[test]
    fn dwconv_gradcheck() {
        let x = randn(&[1, 4, 4, 2], 17);
        let kernel = randn(&[3, 3, 2], 18);
        let bias = randn(&[2], 19);
        let report = grad_check_multi(
            |g, ids| {
                let y = g.dwconv(ids[0], ids[1], ids[2])?;
                // Square the output so the gradient depends on x nontrivially.
                let sq = g.square(y)?;
                g.sum_all(sq)
            },
            &[x, kernel, bias],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn layernorm_normalizes_per_position() {
        let c = 16;
        let x = randn(&[2, 3, 3, c], 21);
        let gamma = Tensor::<f64>::ones(&[c]).unwrap();
        let beta = Tensor::<f64>::zeros(&[c]).unwrap();
        let y = layernorm_raw(&x, &gamma, &beta, LAYERNORM_EPS).unwrap();
        let rows = y.len() / c;
        for r in 0..rows {
            let row = &y.data()[r * c..(r + 1) * c];
            let mean: f64 = row.iter().sum::<f64>() / c as f64;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            assert!(mean.abs() < 1e-6, "row {r} mean {mean}");
            assert!((var - 1.0).abs() < 1e-4, "row {r} var {var}");
        }
    }

    #[test]
    fn layernorm_constant_vector_gives_beta() {
        let c = 8;
        let x = Tensor::<f64>::full(&[1, 1, 1, c], 3.7).unwrap();
        let gamma = Tensor::<f64>::ones(&[c]).unwrap();
        let beta = Tensor::<f64>::full(&[c], 0.25).unwrap();
        let y = layernorm_raw(&x, &gamma, &beta, LAYERNORM_EPS).unwrap();
        for &v in y.data() {
            assert!((v - 0.25).abs() < 1e-9, "got {v}");
        }
    }

    #[test]
    fn layernorm_shift_invariant() {
        let c = 12;
        let x = randn(&[1, 2, 2, c], 22);
        let shifted = x.map(|v| v + 5.0);
        let gamma = Tensor::<f64>::ones(&[c]).unwrap();
        let beta = Tensor::<f64>::zeros(&[c]).unwrap();
        let a = layernorm_raw(&x, &gamma, &beta, LAYERNORM_EPS).unwrap();
        let b = layernorm_raw(&shifted, &gamma, &beta, LAYERNORM_EPS).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn layernorm_gradcheck() {
        let c = 5;
        let x = randn(&[1, 2, 2, c], 23);
        let gamma = randn(&[c], 24).map(|v| 1.0 + 0.2 * v);
        let beta = randn(&[c], 25);
        let report = grad_check_multi(
            |g, ids| {
                let y = g.layer_norm(ids[0], ids[1], ids[2], LAYERNORM_EPS)?;
                let sq = g.square(y)?;
                g.sum_all(sq)
            },
            &[x, gamma, beta],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn mlp_zero_weights_yield_fc2_bias() {
        let mut store = ParamStore::<f64>::new();
        let mut r = rng::seeded(1);
        let mlp = MlpLayer::new(&mut store, "mlp", 4, 4, &mut r).unwrap();
        // Zero both weight matrices; set fc2 bias to a marker value.
        for id in [mlp.fc1.weight, mlp.fc2.weight] {
            let t = store.get_mut(id);
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        for v in store.get_mut(mlp.fc2.bias).data_mut() {
            *v = 0.125;
        }
        let mut graph = Graph::new();
        let bound = bind_params(&mut graph, &store, false);
        let x = graph.leaf(randn(&[1, 2, 2, 4], 26), false);
        let y = mlp.forward(&mut graph, &bound, x).unwrap();
        for &v in graph.value(y).data() {
            assert_eq!(v, 0.125);
        }
    }

    #[test]
    fn mlp_identity_layers_apply_gelu_once() {
        // ρ=1 with identity weights and zero biases: mlp(x) = gelu(x).
        let c = 3;
        let mut store = ParamStore::<f64>::new();
        let mut r = rng::seeded(2);
        let mlp = MlpLayer::new(&mut store, "mlp", c, 1, &mut r).unwrap();
        for id in [mlp.fc1.weight, mlp.fc2.weight] {
            *store.get_mut(id) = Tensor::identity(c).unwrap();
        }
        let x = randn(&[1, 1, 2, c], 27);
        let mut graph = Graph::new();
        let bound = bind_params(&mut graph, &store, false);
        let xid = graph.leaf(x.clone(), false);
        let y = mlp.forward(&mut graph, &bound, xid).unwrap();
        for (got, &xv) in graph.value(y).data().iter().zip(x.data()) {
            assert!((got - gelu(xv)).abs() < 1e-15);
        }
    }

    #[test]
    fn mlp_gradcheck_through_params() {
        let c = 3;
        let mut store = ParamStore::<f64>::new();
        let mut r = rng::seeded(3);
        let mlp = MlpLayer::new(&mut store, "mlp", c, 2, &mut r).unwrap();
        let x = randn(&[1, 2, 2, c], 28);
        // Check every parameter tensor and the input jointly.
        let inputs: Vec<Tensor<f64>> = core::iter::once(x)
            .chain(store.ids().map(|id| store.get(id).clone()))
            .collect();
        let report = grad_check_multi(
            |g, ids| {
                // Rebuild a store-shaped binding from the perturbed tensors.
                let bound = BoundParams {
                    ids: ids[1..].to_vec(),
                };
                let y = mlp.forward(g, &bound, ids[0])?;
                let sq = g.square(y)?;
                g.sum_all(sq)
            },
            &inputs,
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn strided_conv_averaging_preserves_constant() {
        let x = Tensor::<f64>::full(&[1, 4, 4, 1], 2.5).unwrap();
        let kernel = Tensor::<f64>::full(&[2, 2, 1, 1], 0.25).unwrap();
        let bias = Tensor::<f64>::zeros(&[1]).unwrap();
        let y = strided_conv_raw(&x, &kernel, &bias, 2).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2, 1]);
        for &v in y.data() {
            assert!((v - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn strided_conv_shapes() {
        let x = randn(&[1, 8, 8, 3], 31);
        let kernel = randn(&[4, 4, 3, 7], 32);
        let bias = randn(&[7], 33);
        let y = strided_conv_raw(&x, &kernel, &bias, 4).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2, 7]);
        // Indivisible input rejected.
        let bad = randn(&[1, 7, 8, 3], 34);
        assert!(strided_conv_raw(&bad, &kernel, &bias, 4).is_err());
    }

    #[test]
    fn strided_conv_matches_naive_loop_oracle() {
        let (n, h, w, c_in, c_out, k, s) = (2, 6, 6, 3, 4, 2, 2);
        let x = randn(&[n, h, w, c_in], 35);
        let kernel = randn(&[k, k, c_in, c_out], 36);
        let bias = randn(&[c_out], 37);
        let y = strided_conv_raw(&x, &kernel, &bias, s).unwrap();
        let (oh, ow) = ((h - k) / s + 1, (w - k) / s + 1);
        for ni in 0..n {
            for oi in 0..oh {
                for oj in 0..ow {
                    for co in 0..c_out {
                        let mut acc = bias.data()[co];
                        for kh in 0..k {
                            for kw in 0..k {
                                for ci in 0..c_in {
                                    acc += x.at(&[ni, oi * s + kh, oj * s + kw, ci]).unwrap()
                                        * kernel.at(&[kh, kw, ci, co]).unwrap();
                                }
                            }
                        }
                        let got = y.at(&[ni, oi, oj, co]).unwrap();
                        assert!((got - acc).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn strided_conv_gradcheck() {
        let x = randn(&[1, 4, 4, 2], 38);
        let kernel = randn(&[2, 2, 2, 3], 39);
        let bias = randn(&[3], 40);
        let report = grad_check_multi(
            |g, ids| {
                let y = g.strided_conv(ids[0], ids[1], ids[2], 2)?;
                let sq = g.square(y)?;
                g.sum_all(sq)
            },
            &[x, kernel, bias],
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn global_avg_pool_values_and_grad() {
        let x = randn(&[2, 3, 4, 5], 41);
        let y = global_avg_pool_raw(&x).unwrap();
        assert_eq!(y.shape(), &[2, 5]);
        // Oracle: mean via the generic reduce path.
        let by_axis = x
            .reduce(crate::tensor::ReduceKind::Mean, Some(1))
            .unwrap()
            .reduce(crate::tensor::ReduceKind::Mean, Some(1))
            .unwrap();
        for (a, b) in y.data().iter().zip(by_axis.data()) {
            assert!((a - b).abs() < 1e-12);
        }
        let report = grad_check_multi(
            |g, ids| {
                let p = g.global_avg_pool(ids[0])?;
                let sq = g.square(p)?;
                g.sum_all(sq)
            },
            core::slice::from_ref(&x),
            1e-5,
            1e-6,
        )
        .unwrap();
        assert!(report.pass, "max rel err {}", report.max);
    }

    #[test]
    fn param_counts_match_hand_arithmetic() {
        assert_eq!(DepthwiseConv::param_count(7, 64), 3200);
        assert_eq!(LinearLayer::param_count(64, 128), 64 * 128 + 128);
        assert_eq!(LayerNormLayer::param_count(64), 128);
        assert_eq!(MlpLayer::param_count(64, 4), 64 * 256 + 256 + 256 * 64 + 64);
        assert_eq!(StridedConv::param_count(4, 3, 64), 4 * 4 * 3 * 64 + 64);

        // Registered element counts agree with the formulas.
        let mut store = ParamStore::<f64>::new();
        let mut r = rng::seeded(4);
        DepthwiseConv::new(&mut store, "dw", 7, 64, &mut r).unwrap();
        assert_eq!(store.element_count(), 3200);
        LinearLayer::new(&mut store, "fc", 64, 128, &mut r).unwrap();
        assert_eq!(store.element_count(), 3200 + 64 * 128 + 128);
    }

    #[test]
    fn param_store_names_flags_and_init() {
        let mut store = ParamStore::<f64>::new();
        let mut r = rng::seeded(5);
        let lin = LinearLayer::new(&mut store, "head", 8, 4, &mut r).unwrap();
        let ln = LayerNormLayer::new(&mut store, "norm", 8).unwrap();
        assert_eq!(store.name(lin.weight), "head.weight");
        assert!(store.decays(lin.weight));
        assert!(!store.decays(lin.bias));
        assert!(!store.decays(ln.gamma));
        assert_eq!(store.by_name("norm.beta"), Some(ln.beta));
        assert_eq!(store.by_name("absent"), None);
        // Truncated normal: every weight within 2 std of zero.
        for &v in store.get(lin.weight).data() {
            assert!(v.abs() <= 2.0 * INIT_STD + 1e-12);
        }
        for &v in store.get(lin.bias).data() {
            assert_eq!(v, 0.0);
        }
        for &v in store.get(ln.gamma).data() {
            assert_eq!(v, 1.0);
        }
        // Duplicate names rejected.
        assert!(LinearLayer::new(&mut store, "head", 8, 4, &mut r).is_err());
    }
}
