//! Feature-interaction operators and kernels.
//!
//! The central object is [`Graph::interact`]: at every spatial position it
//! gathers one scalar per branch from each of two branch stacks into
//! r-vectors `u` and `v`, applies a scalar interaction (sum, inner product,
//! polynomial kernel, or RBF kernel), and writes the result back to that
//! position. The module also carries the combinatorial and analytic oracles
//! used to verify the kernel view: monomial enumeration, the dimension
//! formula for degree-k interaction spaces, symbolic quadratic expansion,
//! a truncated series form of the RBF kernel, and Gram-matrix/PSD checks.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::autograd::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;
use crate::tensor::Tensor;

/// Scalar interaction applied to the gathered branch vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionKind {
    /// Pure superposition `Σᵢ (uᵢ + vᵢ)` — the no-interaction baseline.
    Add,
    /// Inner product `Σᵢ uᵢ vᵢ`.
    Hadamard,
    /// Inhomogeneous polynomial kernel `(⟨u,v⟩ + c)^d`.
    Polynomial { c: f64, d: u32 },
    /// Gaussian kernel `exp(−‖u−v‖² / (2σ²))`.
    Rbf { sigma: f64 },
}

impl InteractionKind {
    /// Checks the parameter constraints: `c ≥ 0`, `d ≥ 1`, `sigma > 0`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            InteractionKind::Polynomial { c, d } => {
                if !(c >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "polynomial kernel needs c >= 0, got {c}"
                    )));
                }
                if d < 1 {
                    return Err(Error::InvalidArgument(String::from(
                        "polynomial kernel needs degree >= 1",
                    )));
                }
            }
            InteractionKind::Rbf { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "rbf kernel needs sigma > 0, got {sigma}"
                    )));
                }
            }
            InteractionKind::Add | InteractionKind::Hadamard => {}
        }
        Ok(())
    }

    /// Short lowercase name used in logs and result tables.
    pub fn name(&self) -> &'static str {
        match self {
            InteractionKind::Add => "add",
            InteractionKind::Hadamard => "hadamard",
            InteractionKind::Polynomial { d: 2, .. } => "poly2",
            InteractionKind::Polynomial { d: 3, .. } => "poly3",
            InteractionKind::Polynomial { .. } => "poly",
            InteractionKind::Rbf { .. } => "rbf",
        }
    }
}

impl Default for InteractionKind {
    /// The production setting: RBF with σ = 1, the parameter-free choice.
    fn default() -> Self {
        InteractionKind::Rbf { sigma: 1.0 }
    }
}

/// Ordered list of `r` same-shape feature maps, one scalar per branch at
/// every position.
#[derive(Debug, Clone)]
pub struct BranchStack<T: Scalar> {
    branches: Vec<Tensor<T>>,
}

impl<T: Scalar> BranchStack<T> {
    pub fn new(branches: Vec<Tensor<T>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidArgument(String::from(
                "branch stack needs r >= 1 branches",
            )));
        }
        let shape = branches[0].shape().to_vec();
        for b in &branches[1..] {
            if b.shape() != shape.as_slice() {
                return Err(Error::ShapeMismatch(format!(
                    "branch shapes differ: {:?} vs {:?}",
                    shape,
                    b.shape()
                )));
            }
        }
        Ok(Self { branches })
    }

    pub fn r(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> &[Tensor<T>] {
        &self.branches
    }
}

/// Dimension of the space spanned by degree-`k` monomials in `n` variables:
/// the binomial coefficient C(n+k−1, k), evaluated by iterated
/// multiply-then-exact-divide so intermediates never exceed the result.
pub fn interaction_dim(n: u64, k: u64) -> Result<u64> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidArgument(format!(
            "interaction_dim needs n, k >= 1, got n={n}, k={k}"
        )));
    }
    // result_i = C(n−1+i, i); each step multiplies by (n−1+i)/i, so the
    // running value is itself a binomial and is monotonically nondecreasing.
    let mut result: u128 = 1;
    for i in 1..=k {
        result = result * (n as u128 - 1 + i as u128) / (i as u128);
        if result > u64::MAX as u128 {
            return Err(Error::Overflow(format!(
                "interaction_dim({n}, {k}) exceeds 64-bit range"
            )));
        }
    }
    Ok(result as u64)
}

/// Maximum number of monomials [`enumerate_monomials`] will materialize.
pub const MONOMIAL_CAP: u64 = 1_000_000;

/// All exponent vectors `(d₁,…,d_n)` with `Σ dᵢ = k`, in descending
/// lexicographic order, e.g. `(2,2) → [(2,0),(1,1),(0,2)]`.
pub fn enumerate_monomials(n: usize, k: u32) -> Result<Vec<Vec<u32>>> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidArgument(format!(
            "enumerate_monomials needs n, k >= 1, got n={n}, k={k}"
        )));
    }
    let count = interaction_dim(n as u64, k as u64)?;
    if count > MONOMIAL_CAP {
        return Err(Error::InvalidArgument(format!(
            "enumerate_monomials({n}, {k}) would produce {count} monomials, cap is {MONOMIAL_CAP}"
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0u32; n];
    fn fill(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
        if pos == current.len() - 1 {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        // Descending exponent at this position gives descending lex order.
        for e in (0..=remaining).rev() {
            current[pos] = e;
            fill(out, current, pos + 1, remaining - e);
        }
    }
    fill(&mut out, &mut current, 0, k);
    Ok(out)
}

/// Symmetric coefficient form of the product `(w_a·x)(w_b·x)`: the upper
/// triangle `α_{ij}` (i ≤ j) such that the product equals `Σ_{i≤j} α_{ij}
/// xᵢ xⱼ` for every x. Coefficients are stored row-major over the upper
/// triangle: (0,0), (0,1), …, (0,n−1), (1,1), ….
#[derive(Debug, Clone)]
pub struct QuadraticExpansion {
    n: usize,
    alpha: Vec<f64>,
}

impl QuadraticExpansion {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored coefficients: n(n+1)/2.
    pub fn coefficient_count(&self) -> usize {
        self.alpha.len()
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        i * self.n - i * (i + 1) / 2 + j
    }

    /// Coefficient of `xᵢ xⱼ` for `i ≤ j` (0-based).
    pub fn alpha(&self, i: usize, j: usize) -> Result<f64> {
        if i > j || j >= self.n {
            return Err(Error::InvalidArgument(format!(
                "alpha index ({i},{j}) outside upper triangle of n={}",
                self.n
            )));
        }
        Ok(self.alpha[self.index(i, j)])
    }

    /// Evaluates `Σ_{i≤j} α_{ij} xᵢ xⱼ`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "evaluate input length {} vs n={}",
                x.len(),
                self.n
            )));
        }
        let mut y = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                y += self.alpha[self.index(i, j)] * x[i] * x[j];
            }
        }
        Ok(y)
    }
}

/// Expands `(w_a·x)(w_b·x)` into monomial coefficients:
/// `α_{ii} = w_{ai} w_{bi}` and `α_{ij} = w_{ai} w_{bj} + w_{aj} w_{bi}`
/// for `i < j`.
pub fn quadratic_expand(w_a: &Tensor<f64>, w_b: &Tensor<f64>) -> Result<QuadraticExpansion> {
    if w_a.shape() != w_b.shape() || w_a.rank() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "quadratic_expand needs two equal-length vectors, got {:?} and {:?}",
            w_a.shape(),
            w_b.shape()
        )));
    }
    let n = w_a.len();
    let (a, b) = (w_a.data(), w_b.data());
    let mut alpha = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            alpha.push(if i == j {
                a[i] * b[i]
            } else {
                a[i] * b[j] + a[j] * b[i]
            });
        }
    }
    Ok(QuadraticExpansion { n, alpha })
}

fn check_vector_pair<T: Scalar>(s: &Tensor<T>, t: &Tensor<T>) -> Result<()> {
    if s.rank() != 1 || t.rank() != 1 || s.len() != t.len() {
        return Err(Error::ShapeMismatch(format!(
            "kernel arguments must be equal-length vectors, got {:?} and {:?}",
            s.shape(),
            t.shape()
        )));
    }
    Ok(())
}

fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    let mut acc = T::zero();
    for (&a, &b) in u.iter().zip(v) {
        acc = acc + a * b;
    }
    acc
}

fn squared_distance<T: Scalar>(u: &[T], v: &[T]) -> T {
    let mut acc = T::zero();
    for (&a, &b) in u.iter().zip(v) {
        let d = a - b;
        acc = acc + d * d;
    }
    acc
}

/// Polynomial kernel `(sᵀt + c)^d`.
pub fn poly_kernel<T: Scalar>(s: &Tensor<T>, t: &Tensor<T>, c: f64, d: u32) -> Result<T> {
    check_vector_pair(s, t)?;
    InteractionKind::Polynomial { c, d }.validate()?;
    Ok((dot(s.data(), t.data()) + T::cast(c)).powi(d as i32))
}

/// Gaussian kernel `exp(−‖s−t‖² / (2σ²))`; lies in (0, 1], equals 1 exactly
/// when `s == t`.
pub fn rbf_kernel<T: Scalar>(s: &Tensor<T>, t: &Tensor<T>, sigma: f64) -> Result<T> {
    check_vector_pair(s, t)?;
    InteractionKind::Rbf { sigma }.validate()?;
    let sq = squared_distance(s.data(), t.data());
    Ok((-sq / T::cast(2.0 * sigma * sigma)).exp())
}

/// Truncated series form of the σ=1 RBF kernel:
/// `Σ_{j=0}^{J} (sᵀt)^j / j! · exp(−(‖s‖² + ‖t‖²)/2)`.
///
/// Each series term is the contribution of the degree-j monomial block of
/// the kernel's feature map, so the partial sums converge to
/// `rbf_kernel(s, t, 1)` as J grows.
pub fn rbf_series_truncated<T: Scalar>(s: &Tensor<T>, t: &Tensor<T>, j_max: u32) -> Result<T> {
    check_vector_pair(s, t)?;
    let st = dot(s.data(), t.data());
    let prefactor =
        (-(dot(s.data(), s.data()) + dot(t.data(), t.data())) / T::cast(2.0)).exp();
    let mut term = T::one(); // (sᵀt)^0 / 0!
    let mut sum = term;
    for j in 1..=j_max {
        term = term * st / T::cast(j as f64);
        sum = sum + term;
    }
    Ok(sum * prefactor)
}

/// Kernel matrix `K[i][j] = K(points[i], points[j])` for the two genuine
/// kernels. Add and Hadamard are rejected: they are branch reductions, not
/// positive semi-definite kernels over the stack.
pub fn gram_matrix<T: Scalar>(points: &[Tensor<T>], kind: InteractionKind) -> Result<Tensor<T>> {
    kind.validate()?;
    let eval: &dyn Fn(&Tensor<T>, &Tensor<T>) -> Result<T> = match kind {
        InteractionKind::Polynomial { c, d } => &move |s, t| poly_kernel(s, t, c, d),
        InteractionKind::Rbf { sigma } => &move |s, t| rbf_kernel(s, t, sigma),
        InteractionKind::Add | InteractionKind::Hadamard => {
            return Err(Error::InvalidArgument(format!(
                "gram_matrix needs a kernel kind, got {}",
                kind.name()
            )));
        }
    };
    let m = points.len();
    if m == 0 || m > 64 {
        return Err(Error::InvalidArgument(format!(
            "gram_matrix needs 1..=64 points, got {m}"
        )));
    }
    let mut gram = Tensor::zeros(&[m, m])?;
    for i in 0..m {
        for j in i..m {
            let k = eval(&points[i], &points[j])?;
            gram.data_mut()[i * m + j] = k;
            gram.data_mut()[j * m + i] = k;
        }
    }
    Ok(gram)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// Used as the oracle for positive semi-definiteness of Gram matrices.
pub fn symmetric_eigenvalues(matrix: &Tensor<f64>) -> Result<Vec<f64>> {
    if matrix.rank() != 2 || matrix.shape()[0] != matrix.shape()[1] {
        return Err(Error::ShapeMismatch(format!(
            "eigenvalues need a square matrix, got {:?}",
            matrix.shape()
        )));
    }
    let n = matrix.shape()[0];
    let mut a = matrix.data().to_vec();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..n {
        for j in 0..n {
            if (a[i * n + j] - a[j * n + i]).abs() > 1e-9 * scale {
                return Err(Error::InvalidArgument(String::from(
                    "eigenvalues need a symmetric matrix",
                )));
            }
        }
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off.sqrt() <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                // tan of the rotation angle, the smaller root.
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eigs)
}

fn check_stacks<'t, T: Scalar>(
    a: &[&'t Tensor<T>],
    b: &[&'t Tensor<T>],
) -> Result<(usize, usize)> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "interact needs equal nonzero branch counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let shape = a[0].shape();
    for t in a.iter().chain(b.iter()) {
        if t.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "interact branch shapes differ: {:?} vs {:?}",
                shape,
                t.shape()
            )));
        }
    }
    Ok((a.len(), a[0].len()))
}

/// Position-wise interaction of two branch stacks. At each element position
/// the r branch values form vectors u and v; the output holds the scalar
/// interaction of u and v at that position.
///
/// Loops run branch-outer / position-inner so the inner loop walks
/// contiguous memory in a fixed order: fast and bitwise deterministic.
pub fn interact_raw<T: Scalar>(
    a: &[&Tensor<T>],
    b: &[&Tensor<T>],
    kind: InteractionKind,
) -> Result<Tensor<T>> {
    kind.validate()?;
    let (r, len) = check_stacks(a, b)?;
    let shape = a[0].shape().to_vec();
    let mut acc = vec![T::zero(); len];
    match kind {
        InteractionKind::Add => {
            for i in 0..r {
                let (ai, bi) = (a[i].data(), b[i].data());
                for p in 0..len {
                    acc[p] = acc[p] + ai[p] + bi[p];
                }
            }
        }
        InteractionKind::Hadamard => {
            for i in 0..r {
                let (ai, bi) = (a[i].data(), b[i].data());
                for p in 0..len {
                    acc[p] = acc[p] + ai[p] * bi[p];
                }
            }
        }
        InteractionKind::Polynomial { c, d } => {
            for i in 0..r {
                let (ai, bi) = (a[i].data(), b[i].data());
                for p in 0..len {
                    acc[p] = acc[p] + ai[p] * bi[p];
                }
            }
            let c = T::cast(c);
            for v in &mut acc {
                *v = (*v + c).powi(d as i32);
            }
        }
        InteractionKind::Rbf { sigma } => {
            for i in 0..r {
                let (ai, bi) = (a[i].data(), b[i].data());
                for p in 0..len {
                    let diff = ai[p] - bi[p];
                    acc[p] = acc[p] + diff * diff;
                }
            }
            let inv = T::one() / T::cast(2.0 * sigma * sigma);
            for v in &mut acc {
                *v = (-*v * inv).exp();
            }
        }
    }
    Tensor::from_vec(shape, acc)
}

/// Convenience wrapper for [`interact_raw`] over [`BranchStack`] values.
pub fn interact_stacks<T: Scalar>(
    a: &BranchStack<T>,
    b: &BranchStack<T>,
    kind: InteractionKind,
) -> Result<Tensor<T>> {
    let ar: Vec<&Tensor<T>> = a.branches().iter().collect();
    let br: Vec<&Tensor<T>> = b.branches().iter().collect();
    interact_raw(&ar, &br, kind)
}

/// Gradients of `interact` with respect to every branch of both stacks,
/// given the upstream gradient and the forward output.
fn interact_backward<T: Scalar>(
    g: &Tensor<T>,
    out: &Tensor<T>,
    a: &[&Tensor<T>],
    b: &[&Tensor<T>],
    kind: InteractionKind,
) -> Result<Vec<Tensor<T>>> {
    let (r, len) = check_stacks(a, b)?;
    let shape = a[0].shape().to_vec();
    let gd = g.data();
    let mut grads: Vec<Tensor<T>> = Vec::with_capacity(2 * r);
    match kind {
        InteractionKind::Add => {
            // d/duᵢ = d/dvᵢ = 1.
            for _ in 0..2 * r {
                grads.push(g.clone());
            }
        }
        InteractionKind::Hadamard => {
            // d/duᵢ = vᵢ, d/dvᵢ = uᵢ.
            for i in 0..r {
                let bi = b[i].data();
                let data = (0..len).map(|p| gd[p] * bi[p]).collect();
                grads.push(Tensor::from_vec(shape.clone(), data)?);
            }
            for i in 0..r {
                let ai = a[i].data();
                let data = (0..len).map(|p| gd[p] * ai[p]).collect();
                grads.push(Tensor::from_vec(shape.clone(), data)?);
            }
        }
        InteractionKind::Polynomial { c, d } => {
            // t = ⟨u,v⟩ + c; d/duᵢ = d·t^{d−1}·vᵢ.
            let mut scale = vec![T::zero(); len];
            for i in 0..r {
                let (ai, bi) = (a[i].data(), b[i].data());
                for p in 0..len {
                    scale[p] = scale[p] + ai[p] * bi[p];
                }
            }
            let c = T::cast(c);
            let dd = T::cast(d as f64);
            for v in &mut scale {
                *v = dd * (*v + c).powi(d as i32 - 1);
            }
            for i in 0..r {
                let bi = b[i].data();
                let data = (0..len).map(|p| gd[p] * scale[p] * bi[p]).collect();
                grads.push(Tensor::from_vec(shape.clone(), data)?);
            }
            for i in 0..r {
                let ai = a[i].data();
                let data = (0..len).map(|p| gd[p] * scale[p] * ai[p]).collect();
                grads.push(Tensor::from_vec(shape.clone(), data)?);
            }
        }
        InteractionKind::Rbf { sigma } => {
            // K = exp(−‖u−v‖²/(2σ²)); dK/duᵢ = K·(vᵢ−uᵢ)/σ², dK/dvᵢ = −dK/duᵢ.
            let inv = T::one() / T::cast(sigma * sigma);
            let od = out.data();
            let scale: Vec<T> = (0..len).map(|p| gd[p] * od[p] * inv).collect();
            for i in 0..r {
                let (ai, bi) = (a[i].data(), b[i].data());
                let data = (0..len).map(|p| scale[p] * (bi[p] - ai[p])).collect();
                grads.push(Tensor::from_vec(shape.clone(), data)?);
            }
            for i in 0..r {
                let (ai, bi) = (a[i].data(), b[i].data());
                let data = (0..len).map(|p| scale[p] * (ai[p] - bi[p])).collect();
                grads.push(Tensor::from_vec(shape.clone(), data)?);
            }
        }
    }
    Ok(grads)
}

impl<T: Scalar> Graph<T> {
    /// Records the position-wise interaction of branch stacks `a` and `b`
    /// (each a list of same-shape nodes) with analytic backward rules for
    /// all four kinds.
    pub fn interact(&mut self, a: &[NodeId], b: &[NodeId], kind: InteractionKind) -> Result<NodeId> {
        kind.validate()?;
        let r = a.len();
        let a_vals: Vec<&Tensor<T>> = a.iter().map(|&id| self.value(id)).collect();
        let b_vals: Vec<&Tensor<T>> = b.iter().map(|&id| self.value(id)).collect();
        let value = interact_raw(&a_vals, &b_vals, kind)?;
        let parents: Vec<NodeId> = a.iter().chain(b.iter()).copied().collect();
        let backward = Box::new(
            move |g: &Tensor<T>, out: &Tensor<T>, parents: &[&Tensor<T>]| {
                interact_backward(g, out, &parents[..r], &parents[r..], kind)
            },
        );
        Ok(self.push(value, parents, backward))
    }
}
