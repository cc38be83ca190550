//! Reusable verification suites shared by the CLI check commands and the
//! integration tests: closed-form dimension counts against brute-force
//! monomial enumeration, kernel identities and Gram-matrix positive
//! semidefiniteness, and finite-difference gradient checks at every
//! granularity from a single layer to the full micro network.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;
use rand::Rng;

use crate::autograd::{grad_check_multi, grad_check_sampled, Graph, NodeId};
use crate::error::{Error, Result};
use crate::interaction::{
    enumerate_monomials, gram_matrix, interaction_dim, poly_kernel, quadratic_expand, rbf_kernel,
    rbf_series_truncated, symmetric_eigenvalues, InteractionKind,
};
use crate::layers::{
    BoundParams, DepthwiseConv, LayerNormLayer, LinearLayer, MlpLayer, ParamStore, StridedConv,
};
use crate::model::{build_model, BlockConfig, InfiBlock, Variant};
use crate::rng;
use crate::tensor::Tensor;

/// Finite-difference step used by every gradient suite.
pub const FD_EPS: f64 = 1e-5;
/// Relative-error tolerance for single layers, interaction operators, and
/// one block.
pub const UNIT_TOL: f64 = 1e-4;
/// Relative-error tolerance for the end-to-end micro network, which chains
/// enough floating-point work that unit-level agreement is unattainable.
pub const MODEL_TOL: f64 = 1e-3;
/// Seeds used when a caller does not pick their own.
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
/// Coordinates probed per tensor in the sampled full-model check.
pub const MODEL_COORDS_PER_TENSOR: usize = 8;

/// Outcome of one verification suite: the worst deviation observed over all
/// cases, against the tolerance the suite was run at.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    /// What was checked, e.g. `"rbf-series"` or `"gradcheck linear"`.
    pub name: String,
    /// Number of individual comparisons behind `max_error`.
    pub cases: usize,
    /// Worst deviation observed (suite-specific measure, see each suite).
    pub max_error: f64,
    /// Largest `max_error` the suite accepts.
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl core::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}: {} cases, max error {:.3e} (tol {:.3e}) ... {}",
            self.name,
            self.cases,
            self.max_error,
            self.tolerance,
            if self.pass() { "ok" } else { "FAIL" }
        )
    }
}

// ---------------------------------------------------------------------------
// Dimension and expansion identities
// ---------------------------------------------------------------------------

/// Checks `interaction_dim` against brute-force monomial enumeration for all
/// `1 ≤ n ≤ max_n`, `1 ≤ k ≤ max_k`, plus the quadratic `n(n+1)/2` and cubic
/// `(n+2)(n+1)n/6` closed forms. `max_error` is the number of mismatches.
pub fn dim_suite(max_n: u64, max_k: u64) -> Result<SuiteReport> {
    let mut cases = 0usize;
    let mut mismatches = 0u64;
    for n in 1..=max_n {
        for k in 1..=max_k {
            let formula = interaction_dim(n, k)?;
            let enumerated = enumerate_monomials(n as usize, k as u32)?.len() as u64;
            cases += 1;
            if formula != enumerated {
                mismatches += 1;
            }
            if k == 2 {
                cases += 1;
                if formula != n * (n + 1) / 2 {
                    mismatches += 1;
                }
            }
            if k == 3 {
                cases += 1;
                if formula != (n + 2) * (n + 1) * n / 6 {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(SuiteReport {
        name: String::from("dim-equivalence"),
        cases,
        max_error: mismatches as f64,
        tolerance: 0.0,
    })
}

/// Checks that the explicit coefficient expansion of `⟨W_a x, W_b x⟩` with
/// one output row reproduces the product `(w_aᵀx)(w_bᵀx)` on random inputs
/// of width up to `max_n`.
pub fn quadratic_suite(trials: usize, max_n: usize, seed: u64) -> Result<SuiteReport> {
    if trials == 0 || max_n == 0 {
        return Err(Error::InvalidArgument(String::from(
            "quadratic_suite needs trials >= 1 and max_n >= 1",
        )));
    }
    let mut gen = rng::seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = gen.gen_range(1..=max_n);
        let draw = |gen: &mut rng::ChaCha8Rng| -> Vec<f64> {
            (0..n).map(|_| gen.sample(rand_distr::StandardNormal)).collect()
        };
        let wa = draw(&mut gen);
        let wb = draw(&mut gen);
        let x = draw(&mut gen);
        let expansion = quadratic_expand(
            &Tensor::from_vec(vec![n], wa.clone())?,
            &Tensor::from_vec(vec![n], wb.clone())?,
        )?;
        let direct: f64 = wa.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>()
            * wb.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
        worst = worst.max((expansion.evaluate(&x)? - direct).abs());
    }
    Ok(SuiteReport {
        name: String::from("quadratic-expansion"),
        cases: trials,
        max_error: worst,
        tolerance: 1e-10,
    })
}

// ---------------------------------------------------------------------------
// Kernel identities
// ---------------------------------------------------------------------------

/// Random vector of the given length with norm drawn uniformly from
/// `[0, max_norm]`.
fn vector_with_norm<R: Rng>(len: usize, max_norm: f64, gen: &mut R) -> Tensor<f64> {
    let raw: Vec<f64> = (0..len).map(|_| gen.sample(rand_distr::StandardNormal)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = gen.gen::<f64>() * max_norm;
    let scale = if norm > 0.0 { target / norm } else { 0.0 };
    let data: Vec<f64> = raw.iter().map(|v| v * scale).collect();
    Tensor::from_vec(vec![len], data).unwrap()
}

/// Upper bound on `|rbf_series_truncated(J) − rbf_kernel(σ=1)|` over all
/// pairs with norms at most `max_norm`: the series drops the exponential
/// tail `Σ_{j>J} uʲ/j!` of `exp(u)`, `u = sᵀt`, scaled by
/// `exp(−(‖s‖²+‖t‖²)/2) ≤ exp(−|u|)`, and `exp(−a)·Σ_{j>J} aʲ/j!` is
/// increasing in `a`, so the worst case sits at `a = max_norm²`.
pub fn rbf_series_tail_bound(max_norm: f64, j_max: u32) -> f64 {
    let a = max_norm * max_norm;
    if a == 0.0 {
        return 0.0;
    }
    let mut term = 1.0f64;
    let mut tail = 0.0f64;
    let mut j = 0u32;
    loop {
        j += 1;
        term *= a / f64::from(j);
        if j > j_max {
            tail += term;
            if term < tail * 1e-18 {
                break;
            }
        }
        if j > j_max + 400 {
            break;
        }
    }
    tail * (-a).exp()
}

/// Compares the truncated product-form series against the closed-form RBF
/// kernel (σ = 1) on random pairs; the tolerance is the analytic tail bound
/// for the worst admissible pair.
pub fn rbf_series_suite(
    trials: usize,
    max_norm: f64,
    j_max: u32,
    seed: u64,
) -> Result<SuiteReport> {
    if trials == 0 || max_norm < 0.0 {
        return Err(Error::InvalidArgument(String::from(
            "rbf_series_suite needs trials >= 1 and max_norm >= 0",
        )));
    }
    let mut gen = rng::seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let len = gen.gen_range(1..=8);
        let s = vector_with_norm(len, max_norm, &mut gen);
        let t = vector_with_norm(len, max_norm, &mut gen);
        let series = rbf_series_truncated(&s, &t, j_max)?;
        let exact = rbf_kernel(&s, &t, 1.0)?;
        worst = worst.max((series - exact).abs());
    }
    Ok(SuiteReport {
        name: format!("rbf-series J={j_max}"),
        cases: trials,
        max_error: worst,
        tolerance: rbf_series_tail_bound(max_norm, j_max),
    })
}

/// Checks that the series truncation error is nonincreasing as terms are
/// added, sampled at J ∈ {0, 5, 10, 15, 20}. `max_error` is the largest
/// observed increase; the tolerance leaves room for last-ulp jitter once
/// both errors have converged below double precision.
pub fn rbf_monotone_suite(trials: usize, max_norm: f64, seed: u64) -> Result<SuiteReport> {
    if trials == 0 || max_norm < 0.0 {
        return Err(Error::InvalidArgument(String::from(
            "rbf_monotone_suite needs trials >= 1 and max_norm >= 0",
        )));
    }
    const LADDER: [u32; 5] = [0, 5, 10, 15, 20];
    let mut gen = rng::seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let len = gen.gen_range(1..=8);
        let s = vector_with_norm(len, max_norm, &mut gen);
        let t = vector_with_norm(len, max_norm, &mut gen);
        let exact = rbf_kernel(&s, &t, 1.0)?;
        let mut previous = f64::INFINITY;
        for j_max in LADDER {
            let err = (rbf_series_truncated(&s, &t, j_max)? - exact).abs();
            worst = worst.max(err - previous);
            previous = err;
        }
    }
    Ok(SuiteReport {
        name: String::from("rbf-series-monotone"),
        cases: trials * (LADDER.len() - 1),
        max_error: worst.max(0.0),
        tolerance: 1e-12,
    })
}

/// Checks `K(s,t) = K(t,s)` exactly for the RBF and polynomial kernels.
pub fn kernel_symmetry_suite(trials: usize, max_norm: f64, seed: u64) -> Result<SuiteReport> {
    if trials == 0 || max_norm < 0.0 {
        return Err(Error::InvalidArgument(String::from(
            "kernel_symmetry_suite needs trials >= 1 and max_norm >= 0",
        )));
    }
    let mut gen = rng::seeded(seed);
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for _ in 0..trials {
        let len = gen.gen_range(1..=8);
        let s = vector_with_norm(len, max_norm, &mut gen);
        let t = vector_with_norm(len, max_norm, &mut gen);
        worst = worst.max((rbf_kernel(&s, &t, 1.0)? - rbf_kernel(&t, &s, 1.0)?).abs());
        for d in [2u32, 3] {
            worst = worst.max((poly_kernel(&s, &t, 1.0, d)? - poly_kernel(&t, &s, 1.0, d)?).abs());
        }
        cases += 3;
    }
    Ok(SuiteReport {
        name: String::from("kernel-symmetry"),
        cases,
        max_error: worst,
        tolerance: 0.0,
    })
}

/// Checks the RBF range contract: `0 < K(s,t) ≤ 1` with `K(s,s) = 1`.
/// `max_error` is the worst violation of any of the three bounds.
pub fn rbf_range_suite(trials: usize, max_norm: f64, seed: u64) -> Result<SuiteReport> {
    if trials == 0 || max_norm < 0.0 {
        return Err(Error::InvalidArgument(String::from(
            "rbf_range_suite needs trials >= 1 and max_norm >= 0",
        )));
    }
    let mut gen = rng::seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let len = gen.gen_range(1..=8);
        let s = vector_with_norm(len, max_norm, &mut gen);
        let t = vector_with_norm(len, max_norm, &mut gen);
        let k = rbf_kernel(&s, &t, 1.0)?;
        worst = worst.max(k - 1.0); // above one
        worst = worst.max(if k > 0.0 { 0.0 } else { 1.0 }); // not strictly positive
        worst = worst.max((rbf_kernel(&s, &s, 1.0)? - 1.0).abs()); // self-similarity
    }
    Ok(SuiteReport {
        name: String::from("rbf-range"),
        cases: trials * 3,
        max_error: worst,
        tolerance: 0.0,
    })
}

/// Checks Gram matrices of `m` random points for positive semidefiniteness
/// across `num_seeds` draws and every given kernel kind. `max_error` is the
/// worst `−λ_min/λ_max` ratio, floored at zero.
pub fn gram_psd_suite(
    m: usize,
    num_seeds: u64,
    kinds: &[InteractionKind],
) -> Result<SuiteReport> {
    if m == 0 || num_seeds == 0 || kinds.is_empty() {
        return Err(Error::InvalidArgument(String::from(
            "gram_psd_suite needs m >= 1, num_seeds >= 1, and at least one kind",
        )));
    }
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for seed in 0..num_seeds {
        let points: Vec<Tensor<f64>> = (0..m)
            .map(|j| Tensor::rand_normal(&[7], 0.0, 0.5, 1000 * seed + j as u64))
            .collect::<Result<_>>()?;
        for kind in kinds {
            let gram = gram_matrix(&points, *kind)?;
            let eigs = symmetric_eigenvalues(&gram)?;
            let min = eigs.first().copied().unwrap_or(0.0);
            let max = eigs.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
            worst = worst.max(-min / max);
            cases += 1;
        }
    }
    Ok(SuiteReport {
        name: String::from("gram-psd"),
        cases,
        max_error: worst.max(0.0),
        tolerance: 1e-8,
    })
}

/// Kernel kinds whose Gram matrices the default check covers.
pub fn gram_kernel_kinds() -> [InteractionKind; 3] {
    [
        InteractionKind::Rbf { sigma: 1.0 },
        InteractionKind::Polynomial { c: 1.0, d: 2 },
        InteractionKind::Polynomial { c: 1.0, d: 3 },
    ]
}

/// The full kernel-check battery at one setting, in print order.
pub fn kernel_check_all(trials: usize, max_norm: f64, terms: u32) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        rbf_series_suite(trials, max_norm, terms, 11)?,
        rbf_monotone_suite(trials, max_norm, 13)?,
        kernel_symmetry_suite(trials, max_norm, 17)?,
        rbf_range_suite(trials, max_norm, 19)?,
        gram_psd_suite(8, 20, &gram_kernel_kinds())?,
    ])
}

// ---------------------------------------------------------------------------
// Gradient suites
// ---------------------------------------------------------------------------

/// `Σ y²` — a loss whose upstream gradient varies per coordinate, so
/// backward paths cannot pass by accident of a uniform upstream.
fn square_sum(graph: &mut Graph<f64>, y: NodeId) -> Result<NodeId> {
    let squared = graph.square(y)?;
    graph.sum_all(squared)
}

/// Re-draws every parameter at a generic O(0.3) scale. The training-time
/// 0.02 init leaves branch pre-activations so close to the ReLU kinks, and
/// gradients so far below the loss magnitude, that central differences stop
/// resolving them; a generic parameter point exercises the same backward
/// code without the measurement artifacts.
fn redraw_params(store: &mut ParamStore<f64>, stddev: f64, seed: u64) -> Result<()> {
    let ids: Vec<_> = store.ids().collect();
    for (j, id) in ids.into_iter().enumerate() {
        let shape = store.get(id).shape().to_vec();
        *store.get_mut(id) =
            Tensor::rand_normal(&shape, 0.0, stddev, seed.wrapping_mul(1009).wrapping_add(j as u64))?;
    }
    Ok(())
}

/// Input tensor followed by every parameter, in store order — the layout
/// the gradcheck closures expect.
fn input_then_params(store: &ParamStore<f64>, x: Tensor<f64>) -> Vec<Tensor<f64>> {
    core::iter::once(x)
        .chain(store.ids().map(|id| store.get(id).clone()))
        .collect()
}

fn merge_seed_report(
    name: &str,
    total_cases: usize,
    worst: f64,
    tolerance: f64,
) -> SuiteReport {
    SuiteReport {
        name: format!("gradcheck {name}"),
        cases: total_cases,
        max_error: worst,
        tolerance,
    }
}

/// Finite-difference check of one layer unit over the given seeds.
fn check_unit<B>(name: &str, seeds: &[u64], build: B) -> Result<SuiteReport>
where
    B: Fn(
        &mut ParamStore<f64>,
        &mut rng::ChaCha8Rng,
    ) -> Result<(
        Tensor<f64>,
        alloc::boxed::Box<dyn Fn(&mut Graph<f64>, &[NodeId]) -> Result<NodeId>>,
    )>,
{
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for &seed in seeds {
        let mut store = ParamStore::<f64>::new();
        let mut gen = rng::seeded(seed);
        let (x, f) = build(&mut store, &mut gen)?;
        redraw_params(&mut store, 0.5, 7000 + seed)?;
        let inputs = input_then_params(&store, x);
        let report = grad_check_multi(|g, ids| f(g, ids), &inputs, FD_EPS, UNIT_TOL)?;
        worst = worst.max(report.max);
        cases += report.per_param.len();
    }
    Ok(merge_seed_report(name, cases, worst, UNIT_TOL))
}

/// Gradient checks for every layer type: linear, depthwise convolution at
/// K=3 and at K=7 on a map smaller than the kernel, layer norm, the MLP,
/// and the strided stem/downsampler convolutions.
pub fn gradcheck_layers_suite(seeds: &[u64]) -> Result<Vec<SuiteReport>> {
    let mut reports = Vec::new();
    reports.push(check_unit("linear", seeds, |store, gen| {
        let layer = LinearLayer::new(store, "unit", 5, 3, gen)?;
        let x = Tensor::rand_normal(&[2, 5], 0.0, 1.0, 31)?;
        Ok((
            x,
            alloc::boxed::Box::new(move |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = layer.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            }),
        ))
    })?);
    reports.push(check_unit("dwconv k3", seeds, |store, gen| {
        let layer = DepthwiseConv::new(store, "unit", 3, 3, gen)?;
        let x = Tensor::rand_normal(&[1, 5, 5, 3], 0.0, 1.0, 37)?;
        Ok((
            x,
            alloc::boxed::Box::new(move |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = layer.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            }),
        ))
    })?);
    reports.push(check_unit("dwconv k7", seeds, |store, gen| {
        let layer = DepthwiseConv::new(store, "unit", 7, 2, gen)?;
        let x = Tensor::rand_normal(&[1, 4, 4, 2], 0.0, 1.0, 41)?;
        Ok((
            x,
            alloc::boxed::Box::new(move |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = layer.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            }),
        ))
    })?);
    reports.push(check_unit("layernorm", seeds, |store, _gen| {
        let layer = LayerNormLayer::new(store, "unit", 4)?;
        let x = Tensor::rand_normal(&[2, 3, 3, 4], 0.0, 1.0, 43)?;
        Ok((
            x,
            alloc::boxed::Box::new(move |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = layer.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            }),
        ))
    })?);
    reports.push(check_unit("mlp", seeds, |store, gen| {
        let layer = MlpLayer::new(store, "unit", 4, 2, gen)?;
        let x = Tensor::rand_normal(&[1, 2, 2, 4], 0.0, 1.0, 47)?;
        Ok((
            x,
            alloc::boxed::Box::new(move |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = layer.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            }),
        ))
    })?);
    reports.push(check_unit("stem conv", seeds, |store, gen| {
        let layer = StridedConv::new(store, "unit", 4, 4, 3, 5, gen)?;
        let x = Tensor::rand_normal(&[1, 8, 8, 3], 0.0, 1.0, 53)?;
        Ok((
            x,
            alloc::boxed::Box::new(move |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = layer.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            }),
        ))
    })?);
    reports.push(check_unit("downsample conv", seeds, |store, gen| {
        let layer = StridedConv::new(store, "unit", 2, 2, 4, 6, gen)?;
        let x = Tensor::rand_normal(&[1, 6, 6, 4], 0.0, 1.0, 59)?;
        Ok((
            x,
            alloc::boxed::Box::new(move |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = layer.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            }),
        ))
    })?);
    Ok(reports)
}

/// Interaction operators checked by the gradient suite, in report order.
pub fn interact_kinds() -> [InteractionKind; 5] {
    [
        InteractionKind::Add,
        InteractionKind::Hadamard,
        InteractionKind::Polynomial { c: 1.0, d: 2 },
        InteractionKind::Polynomial { c: 1.0, d: 3 },
        InteractionKind::Rbf { sigma: 1.0 },
    ]
}

/// Gradient checks of the interaction operator itself, for every kind, with
/// gradients flowing into both branch stacks.
pub fn gradcheck_interact_suite(seeds: &[u64]) -> Result<Vec<SuiteReport>> {
    let r = 3usize;
    let mut reports = Vec::new();
    for kind in interact_kinds() {
        let mut worst = 0.0f64;
        let mut cases = 0usize;
        for &seed in seeds {
            let branches: Vec<Tensor<f64>> = (0..2 * r)
                .map(|j| Tensor::rand_normal(&[2, 2, 2, 3], 0.0, 0.8, 100 * seed + j as u64))
                .collect::<Result<_>>()?;
            let report = grad_check_multi(
                |g, ids| {
                    let y = g.interact(&ids[..r], &ids[r..], kind)?;
                    square_sum(g, y)
                },
                &branches,
                FD_EPS,
                UNIT_TOL,
            )?;
            worst = worst.max(report.max);
            cases += report.per_param.len();
        }
        reports.push(merge_seed_report(kind.name(), cases, worst, UNIT_TOL));
    }
    Ok(reports)
}

/// Gradient check of one full block — both branch stacks, the interaction,
/// the bypass, norms, MLP, and the residual path — at a generic parameter
/// point.
pub fn gradcheck_block_suite(seeds: &[u64]) -> Result<SuiteReport> {
    let c = 4usize;
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for &seed in seeds {
        let mut store = ParamStore::<f64>::new();
        let mut gen = rng::seeded(seed);
        let config = BlockConfig {
            r: 2,
            ..BlockConfig::new(c)
        };
        let block = InfiBlock::new(&mut store, "block", config, &mut gen)?;
        redraw_params(&mut store, 0.3, 8000 + seed)?;
        let x = Tensor::rand_normal(&[1, 4, 4, c], 0.0, 1.0, 53 + seed)?;
        let inputs = input_then_params(&store, x);
        let report = grad_check_multi(
            |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = block.forward(g, &bound, ids[0])?;
                g.sum_all(y)
            },
            &inputs,
            FD_EPS,
            UNIT_TOL,
        )?;
        worst = worst.max(report.max);
        cases += report.per_param.len();
    }
    Ok(merge_seed_report("block", cases, worst, UNIT_TOL))
}

/// Gradient check of the full micro network on a 32×32 input. Every
/// parameter tensor is probed at `per_tensor` sampled coordinates (the
/// analytic side is always a complete backward pass); the looser model
/// tolerance absorbs the longer floating-point chains.
pub fn gradcheck_model_suite(seeds: &[u64], per_tensor: usize) -> Result<SuiteReport> {
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for &seed in seeds {
        let mut store = ParamStore::<f64>::new();
        let net = build_model(
            Variant::Micro,
            10,
            InteractionKind::default(),
            &mut store,
            seed,
        )?;
        redraw_params(&mut store, 0.3, 9000 + seed)?;
        let x = Tensor::rand_normal(&[1, 32, 32, 3], 0.0, 1.0, 61 + seed)?;
        let inputs = input_then_params(&store, x);
        let report = grad_check_sampled(
            |g, ids| {
                let bound = BoundParams::from_ids(ids[1..].to_vec());
                let y = net.forward(g, &bound, ids[0])?;
                square_sum(g, y)
            },
            &inputs,
            FD_EPS,
            MODEL_TOL,
            per_tensor,
            971 + seed,
        )?;
        worst = worst.max(report.max);
        cases += report.per_param.len();
    }
    Ok(merge_seed_report("model", cases, worst, MODEL_TOL))
}
