//! Network assembly: the InfiBlock, the 4-stage hierarchical family
//! (tiny/small/base/large/xlarge plus a micro test variant), and the
//! isotropic 8-block demo network used for interaction-kind comparisons.
//!
//! An InfiBlock computes
//!
//! ```text
//! x̂   = LayerNorm(x)
//! Z_a = [relu(dwconv_ai(x̂ W_a))]  i = 1..r
//! Z_b = [relu(dwconv_bi(x̂ W_b))]  i = 1..r
//! Z_c = dwconv_c(x̂)
//! out = MLP(LayerNorm(interact(Z_a, Z_b, kind) + Z_c)) + x
//! ```
//!
//! so the interaction operator sees r-vectors gathered across branch maps at
//! every spatial position, and the block is a residual unit that preserves
//! `(N,H,W,C)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::autograd::{Graph, NodeId};
use crate::error::{Error, Result};
use crate::interaction::InteractionKind;
use crate::layers::{
    BoundParams, DepthwiseConv, LayerNormLayer, LinearLayer, MlpLayer, ParamStore, StridedConv,
};
use crate::rng;
use crate::scalar::Scalar;

/// Kernel size of every depthwise convolution in a block.
pub const BRANCH_KERNEL: usize = 7;
/// Stem convolution: 4×4, stride 4.
pub const STEM_KERNEL: usize = 4;
/// Stage downsampler: 2×2, stride 2.
pub const DOWNSAMPLE_KERNEL: usize = 2;
/// Default branch count r.
pub const DEFAULT_R: usize = 7;
/// Default MLP expansion ratio ρ.
pub const DEFAULT_MLP_RATIO: usize = 4;

/// Per-block hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockConfig {
    /// Channel width C.
    pub c: usize,
    /// Branch count r.
    pub r: usize,
    /// Interaction operator applied between the two branch stacks.
    pub kind: InteractionKind,
    /// MLP expansion ratio ρ.
    pub mlp_ratio: usize,
}

impl BlockConfig {
    /// Production defaults at width `c`: r = 7, RBF σ=1, ρ = 4.
    pub fn new(c: usize) -> Self {
        Self {
            c,
            r: DEFAULT_R,
            kind: InteractionKind::default(),
            mlp_ratio: DEFAULT_MLP_RATIO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 1 || self.r < 1 || self.mlp_ratio < 1 {
            return Err(Error::InvalidArgument(format!(
                "block config needs C, r, mlp_ratio >= 1, got C={} r={} ratio={}",
                self.c, self.r, self.mlp_ratio
            )));
        }
        self.kind.validate()
    }
}

/// Residual interaction block; see the module docs for the exact dataflow.
#[derive(Debug, Clone)]
pub struct InfiBlock {
    pub config: BlockConfig,
    pub norm1: LayerNormLayer,
    pub proj_a: LinearLayer,
    pub proj_b: LinearLayer,
    pub convs_a: Vec<DepthwiseConv>,
    pub convs_b: Vec<DepthwiseConv>,
    pub conv_c: DepthwiseConv,
    pub norm2: LayerNormLayer,
    pub mlp: MlpLayer,
}

impl InfiBlock {
    pub fn new<T: Scalar, R: Rng>(
        store: &mut ParamStore<T>,
        name: &str,
        config: BlockConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let c = config.c;
        let norm1 = LayerNormLayer::new(store, &format!("{name}.norm1"), c)?;
        let proj_a = LinearLayer::new(store, &format!("{name}.proj_a"), c, c, rng)?;
        let proj_b = LinearLayer::new(store, &format!("{name}.proj_b"), c, c, rng)?;
        let mut convs_a = Vec::with_capacity(config.r);
        let mut convs_b = Vec::with_capacity(config.r);
        for i in 0..config.r {
            convs_a.push(DepthwiseConv::new(
                store,
                &format!("{name}.branch_a{i}"),
                BRANCH_KERNEL,
                c,
                rng,
            )?);
        }
        for i in 0..config.r {
            convs_b.push(DepthwiseConv::new(
                store,
                &format!("{name}.branch_b{i}"),
                BRANCH_KERNEL,
                c,
                rng,
            )?);
        }
        let conv_c = DepthwiseConv::new(store, &format!("{name}.conv_c"), BRANCH_KERNEL, c, rng)?;
        let norm2 = LayerNormLayer::new(store, &format!("{name}.norm2"), c)?;
        let mlp = MlpLayer::new(store, &format!("{name}.mlp"), c, config.mlp_ratio, rng)?;
        Ok(Self {
            config,
            norm1,
            proj_a,
            proj_b,
            convs_a,
            convs_b,
            conv_c,
            norm2,
            mlp,
        })
    }

    /// Scalar parameters in one block — a pure function of the config.
    pub fn param_count(config: &BlockConfig) -> u64 {
        let c = config.c;
        let dw = DepthwiseConv::param_count(BRANCH_KERNEL, c) as u64;
        (2 * LayerNormLayer::param_count(c)
            + 2 * LinearLayer::param_count(c, c)
            + MlpLayer::param_count(c, config.mlp_ratio)) as u64
            + (2 * config.r as u64 + 1) * dw
    }

    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        let xhat = self.norm1.forward(graph, bound, x)?;
        let proj_a = self.proj_a.forward(graph, bound, xhat)?;
        let proj_b = self.proj_b.forward(graph, bound, xhat)?;
        let mut stack_a = Vec::with_capacity(self.config.r);
        for conv in &self.convs_a {
            let z = conv.forward(graph, bound, proj_a)?;
            stack_a.push(graph.relu(z)?);
        }
        let mut stack_b = Vec::with_capacity(self.config.r);
        for conv in &self.convs_b {
            let z = conv.forward(graph, bound, proj_b)?;
            stack_b.push(graph.relu(z)?);
        }
        let inter = graph.interact(&stack_a, &stack_b, self.config.kind)?;
        let z_c = self.conv_c.forward(graph, bound, xhat)?;
        let summed = graph.add(inter, z_c)?;
        let normed = self.norm2.forward(graph, bound, summed)?;
        let mlp_out = self.mlp.forward(graph, bound, normed)?;
        graph.add(mlp_out, x)
    }
}

/// Named widths/depths of the hierarchical family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Test-size config (C=4, one block per stage), outside the standard
    /// ladder; exists so end-to-end checks run in seconds.
    Micro,
    Tiny,
    Small,
    Base,
    Large,
    XLarge,
}

impl Variant {
    pub fn all() -> [Variant; 6] {
        [
            Variant::Micro,
            Variant::Tiny,
            Variant::Small,
            Variant::Base,
            Variant::Large,
            Variant::XLarge,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Micro => "micro",
            Variant::Tiny => "tiny",
            Variant::Small => "small",
            Variant::Base => "base",
            Variant::Large => "large",
            Variant::XLarge => "xlarge",
        }
    }

    pub fn from_name(name: &str) -> Option<Variant> {
        Variant::all().into_iter().find(|v| v.name() == name)
    }

    /// Stage-1 channel width C; stages run [C, 2C, 4C, 8C].
    pub fn base_channels(&self) -> usize {
        match self {
            Variant::Micro => 4,
            Variant::Tiny => 64,
            Variant::Small => 96,
            Variant::Base | Variant::Large => 128,
            Variant::XLarge => 192,
        }
    }

    pub fn depths(&self) -> [usize; 4] {
        match self {
            Variant::Micro => [1, 1, 1, 1],
            Variant::Tiny | Variant::Small | Variant::Base => [2, 2, 18, 2],
            Variant::Large | Variant::XLarge => [3, 3, 27, 3],
        }
    }

    /// Full model config for this variant.
    pub fn config(&self, num_classes: usize, kind: InteractionKind) -> ModelConfig {
        let c = self.base_channels();
        ModelConfig {
            variant: String::from(self.name()),
            stage_channels: vec![c, 2 * c, 4 * c, 8 * c],
            stage_depths: self.depths().to_vec(),
            num_classes,
            r: DEFAULT_R,
            kind,
            mlp_ratio: DEFAULT_MLP_RATIO,
        }
    }
}

/// Architecture description: enough to rebuild a network and to name a
/// checkpoint's shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub variant: String,
    pub stage_channels: Vec<usize>,
    pub stage_depths: Vec<usize>,
    pub num_classes: usize,
    pub r: usize,
    pub kind: InteractionKind,
    pub mlp_ratio: usize,
}

/// Width and depth of the isotropic demo network.
pub const DEMO_CHANNELS: usize = 64;
pub const DEMO_DEPTH: usize = 8;

/// Config of the 8-block isotropic demo network; variants differ only in
/// the interaction operator.
pub fn demo_config(kind: InteractionKind, num_classes: usize) -> ModelConfig {
    ModelConfig {
        variant: String::from("demo"),
        stage_channels: vec![DEMO_CHANNELS],
        stage_depths: vec![DEMO_DEPTH],
        num_classes,
        r: DEFAULT_R,
        kind,
        mlp_ratio: DEFAULT_MLP_RATIO,
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage_channels.is_empty()
            || self.stage_channels.len() != self.stage_depths.len()
        {
            return Err(Error::InvalidArgument(format!(
                "config needs matching nonempty stage lists, got {} channels / {} depths",
                self.stage_channels.len(),
                self.stage_depths.len()
            )));
        }
        if self.stage_depths.iter().any(|&d| d < 1)
            || self.stage_channels.iter().any(|&c| c < 1)
        {
            return Err(Error::InvalidArgument(String::from(
                "stage depths and channels must all be >= 1",
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "num_classes must be >= 2, got {}",
                self.num_classes
            )));
        }
        // The named hierarchical variants are exactly 4 stages wide at
        // [C, 2C, 4C, 8C].
        if Variant::from_name(&self.variant).is_some() {
            let c = self.stage_channels[0];
            if self.stage_channels != vec![c, 2 * c, 4 * c, 8 * c] {
                return Err(Error::InvalidArgument(format!(
                    "variant {} needs stage channels [C,2C,4C,8C], got {:?}",
                    self.variant, self.stage_channels
                )));
            }
        }
        self.block_config(0).validate()
    }

    fn block_config(&self, stage: usize) -> BlockConfig {
        BlockConfig {
            c: self.stage_channels[stage],
            r: self.r,
            kind: self.kind,
            mlp_ratio: self.mlp_ratio,
        }
    }

    /// Parameter counts piece by piece — stem, each downsampler and stage,
    /// and the classifier head — in network order.
    pub fn param_breakdown(&self) -> Vec<(String, u64)> {
        let mut parts = vec![(
            String::from("stem"),
            StridedConv::param_count(STEM_KERNEL, 3, self.stage_channels[0]) as u64,
        )];
        for (si, (&c, &depth)) in self
            .stage_channels
            .iter()
            .zip(&self.stage_depths)
            .enumerate()
        {
            if si > 0 {
                parts.push((
                    format!("down{si}"),
                    StridedConv::param_count(
                        DOWNSAMPLE_KERNEL,
                        self.stage_channels[si - 1],
                        c,
                    ) as u64,
                ));
            }
            parts.push((
                format!("stage{si}"),
                depth as u64 * InfiBlock::param_count(&self.block_config(si)),
            ));
        }
        let last = *self.stage_channels.last().unwrap();
        parts.push((
            String::from("head"),
            (LayerNormLayer::param_count(last) + LinearLayer::param_count(last, self.num_classes))
                as u64,
        ));
        parts
    }

    /// Total trainable parameter count — a pure function of the config.
    pub fn param_count(&self) -> u64 {
        self.param_breakdown().iter().map(|(_, n)| n).sum()
    }
}

/// A built network: stem, block stages joined by downsamplers, and the
/// pooled classifier head. Parameter tensors live in the [`ParamStore`]
/// that was passed to [`build_network`].
#[derive(Debug, Clone)]
pub struct Network {
    pub config: ModelConfig,
    pub stem: StridedConv,
    pub stages: Vec<Vec<InfiBlock>>,
    pub downsamples: Vec<StridedConv>,
    pub head_norm: LayerNormLayer,
    pub head: LinearLayer,
}

/// Builds the network described by `config`, registering parameters into
/// `store` with initialization drawn from a generator seeded by `seed`.
pub fn build_network<T: Scalar>(
    config: &ModelConfig,
    store: &mut ParamStore<T>,
    seed: u64,
) -> Result<Network> {
    config.validate()?;
    let mut r = rng::seeded(seed);
    let stem = StridedConv::new(
        store,
        "stem",
        STEM_KERNEL,
        STEM_KERNEL,
        3,
        config.stage_channels[0],
        &mut r,
    )?;
    let mut stages = Vec::with_capacity(config.stage_depths.len());
    let mut downsamples = Vec::new();
    for (si, (&c, &depth)) in config
        .stage_channels
        .iter()
        .zip(&config.stage_depths)
        .enumerate()
    {
        if si > 0 {
            downsamples.push(StridedConv::new(
                store,
                &format!("down{si}"),
                DOWNSAMPLE_KERNEL,
                DOWNSAMPLE_KERNEL,
                config.stage_channels[si - 1],
                c,
                &mut r,
            )?);
        }
        let mut blocks = Vec::with_capacity(depth);
        for bi in 0..depth {
            blocks.push(InfiBlock::new(
                store,
                &format!("stage{si}.block{bi}"),
                config.block_config(si),
                &mut r,
            )?);
        }
        stages.push(blocks);
    }
    let last = *config.stage_channels.last().unwrap();
    let head_norm = LayerNormLayer::new(store, "head_norm", last)?;
    let head = LinearLayer::new(store, "head", last, config.num_classes, &mut r)?;
    Ok(Network {
        config: config.clone(),
        stem,
        stages,
        downsamples,
        head_norm,
        head,
    })
}

/// Builds a variant of the hierarchical family.
pub fn build_model<T: Scalar>(
    variant: Variant,
    num_classes: usize,
    kind: InteractionKind,
    store: &mut ParamStore<T>,
    seed: u64,
) -> Result<Network> {
    build_network(&variant.config(num_classes, kind), store, seed)
}

/// Builds the 8-block isotropic demo network.
pub fn build_demo_net<T: Scalar>(
    kind: InteractionKind,
    num_classes: usize,
    store: &mut ParamStore<T>,
    seed: u64,
) -> Result<Network> {
    build_network(&demo_config(kind, num_classes), store, seed)
}

impl Network {
    /// Records the full forward pass: `(N,H,W,3) → (N, num_classes)`.
    pub fn forward<T: Scalar>(
        &self,
        graph: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        let mut h = self.stem.forward(graph, bound, x)?;
        for (si, stage) in self.stages.iter().enumerate() {
            if si > 0 {
                h = self.downsamples[si - 1].forward(graph, bound, h)?;
            }
            for block in stage {
                h = block.forward(graph, bound, h)?;
            }
        }
        let pooled = graph.global_avg_pool(h)?;
        let normed = self.head_norm.forward(graph, bound, pooled)?;
        self.head.forward(graph, bound, normed)
    }
}
