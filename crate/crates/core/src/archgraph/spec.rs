use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShapeNCHW {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl ShapeNCHW {
    pub fn new(n: usize, c: usize, h: usize, w: usize) -> Result<Self> {
        let s = Self { n, c, h, w };
        if s.dims().iter().any(|&d| d == 0) {
            return Err(Error::invalid(format!("shape {s} has a zero extent")));
        }
        Ok(s)
    }

    /// Square image batch, `n × c × size × size`.
    pub fn image(n: usize, c: usize, size: usize) -> Result<Self> {
        Self::new(n, c, size, size)
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.n, self.c, self.h, self.w]
    }

    pub fn numel(&self) -> u64 {
        (self.n * self.c * self.h * self.w) as u64
    }

    pub(crate) fn with_c(self, c: usize) -> Self {
        Self { c, ..self }
    }
}

impl fmt::Display for ShapeNCHW {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}×{}×{}×{}", self.n, self.c, self.h, self.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvSpec {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
    pub bias: bool,
}

impl ConvSpec {
    /// Square kernel with "same" padding for odd kernels, no bias, one group.
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad: kernel / 2,
            groups: 1,
            bias: false,
        }
    }

    pub fn with_bias(mut self) -> Self {
        self.bias = true;
        self
    }

    pub fn with_pad(mut self, pad: usize) -> Self {
        self.pad = pad;
        self
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    /// Channels of the offset tensor a deformable convolution with this kernel consumes.
    pub fn offset_channels(&self) -> usize {
        2 * self.kernel * self.kernel
    }

    /// The offset-predicting convolution that feeds a deformable convolution.
    pub fn offset_conv(&self) -> ConvSpec {
        ConvSpec {
            in_ch: self.in_ch,
            out_ch: self.offset_channels(),
            kernel: self.kernel,
            stride: self.stride,
            pad: self.pad,
            groups: 1,
            bias: true,
        }
    }

    pub fn out_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let span = |x: usize| (x + 2 * self.pad).checked_sub(self.kernel).map(|v| v / self.stride + 1);
        Some((span(h)?, span(w)?))
    }

    fn validate(&self, node: &str) -> Result<()> {
        if self.in_ch == 0 || self.out_ch == 0 || self.kernel == 0 || self.stride == 0 || self.groups == 0 {
            return Err(Error::InvalidGraph(format!(
                "`{node}`: conv extents must be positive: {self:?}"
            )));
        }
        if self.in_ch % self.groups != 0 || self.out_ch % self.groups != 0 {
            return Err(Error::InvalidGraph(format!(
                "`{node}`: groups {} must divide in_ch {} and out_ch {}",
                self.groups, self.in_ch, self.out_ch
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// Slope 0.1.
    LeakyRelu,
    Mish,
    Silu,
    Sigmoid,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerKind {
    Conv2d(ConvSpec),
    /// Deformable convolution. Owns its offset-predicting convolution
    /// ([`ConvSpec::offset_conv`]); only stride/pad/kernel of `groups == 1` are supported.
    DeformConv2d(ConvSpec),
    BatchNorm {
        channels: usize,
    },
    Activation(Activation),
    UpsampleNearest2x,
    /// Channel-axis concatenation.
    Concat,
    Add,
    MaxPool {
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    /// Average pool that excludes padding from the divisor.
    AvgPool {
        kernel: usize,
        stride: usize,
        pad: usize,
        ceil_mode: bool,
    },
    /// Concatenation of the input with stride-1 max-pools of each size.
    Spp {
        pool_sizes: Vec<usize>,
    },
    /// Convolution over the input with two coordinate channels prepended;
    /// `in_ch` counts the input tensor only.
    CoordConv(ConvSpec),
    DropBlock {
        block_size: usize,
        keep_prob: f32,
    },
}

impl LayerKind {
    pub fn label(&self) -> &'static str {
        match self {
            LayerKind::Conv2d(_) => "Conv2d",
            LayerKind::DeformConv2d(_) => "DeformConv2d",
            LayerKind::BatchNorm { .. } => "BatchNorm",
            LayerKind::Activation(_) => "Activation",
            LayerKind::UpsampleNearest2x => "UpsampleNearest2x",
            LayerKind::Concat => "Concat",
            LayerKind::Add => "Add",
            LayerKind::MaxPool { .. } => "MaxPool",
            LayerKind::AvgPool { .. } => "AvgPool",
            LayerKind::Spp { .. } => "SPP",
            LayerKind::CoordConv(_) => "CoordConv",
            LayerKind::DropBlock { .. } => "DropBlock",
        }
    }

    fn arity_ok(&self, n: usize) -> bool {
        match self {
            LayerKind::Concat => n >= 1,
            LayerKind::Add => n >= 2,
            _ => n == 1,
        }
    }

    fn validate(&self, node: &str) -> Result<()> {
        match self {
            LayerKind::Conv2d(c) => c.validate(node),
            LayerKind::DeformConv2d(c) | LayerKind::CoordConv(c) => {
                c.validate(node)?;
                if c.groups != 1 {
                    return Err(Error::InvalidGraph(format!(
                        "`{node}`: grouped {} is unsupported",
                        self.label()
                    )));
                }
                Ok(())
            }
            LayerKind::BatchNorm { channels: 0 } => Err(Error::InvalidGraph(format!("`{node}`: zero channels"))),
            LayerKind::MaxPool { kernel, stride, .. } | LayerKind::AvgPool { kernel, stride, .. }
                if *kernel == 0 || *stride == 0 =>
            {
                Err(Error::InvalidGraph(format!(
                    "`{node}`: pool kernel and stride must be positive"
                )))
            }
            LayerKind::Spp { pool_sizes } if pool_sizes.iter().any(|k| k % 2 == 0) => {
                Err(Error::InvalidGraph(format!("`{node}`: SPP pool sizes must be odd")))
            }
            LayerKind::DropBlock { block_size, keep_prob } => {
                if *block_size == 0 || block_size % 2 == 0 || !(*keep_prob > 0.0 && *keep_prob <= 1.0) {
                    Err(Error::InvalidGraph(format!(
                        "`{node}`: DropBlock needs an odd block size and keep_prob in (0, 1]"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub inputs: Vec<String>,
    /// Backbone stage index: 0 for the stem, 1..=4 for the residual stages.
    /// `None` outside the backbone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<usize>,
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, kind: LayerKind, inputs: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            stage: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub nodes: Vec<LayerSpec>,
    /// Named entry tensors.
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Backbone stages `0..=frozen_stages` (stem included) are non-trainable
    /// when this is nonzero.
    pub frozen_stages: usize,
}

impl GraphSpec {
    pub fn node(&self, name: &str) -> Option<&LayerSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn is_frozen(&self, node: &LayerSpec) -> bool {
        self.frozen_stages > 0 && node.stage.is_some_and(|s| s <= self.frozen_stages)
    }

    pub fn count_kind(&self, pred: impl Fn(&LayerKind) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(&n.kind)).count()
    }

    /// Checks naming, arity, topological order and output resolution.
    pub fn validate(&self) -> Result<()> {
        let mut seen: HashSet<&str> = HashSet::new();
        for input in &self.inputs {
            if !seen.insert(input) {
                return Err(Error::InvalidGraph(format!("duplicate entry `{input}`")));
            }
        }
        for node in &self.nodes {
            node.kind.validate(&node.name)?;
            if !node.kind.arity_ok(node.inputs.len()) {
                return Err(Error::InvalidGraph(format!(
                    "`{}`: {} cannot take {} inputs",
                    node.name,
                    node.kind.label(),
                    node.inputs.len()
                )));
            }
            for up in &node.inputs {
                if !seen.contains(up.as_str()) {
                    return Err(Error::InvalidGraph(format!(
                        "`{}` reads `{up}`, which is not an entry or an earlier node",
                        node.name
                    )));
                }
            }
            if !seen.insert(&node.name) {
                return Err(Error::InvalidGraph(format!("duplicate node name `{}`", node.name)));
            }
        }
        for out in &self.outputs {
            if !seen.contains(out.as_str()) {
                return Err(Error::InvalidGraph(format!("output `{out}` does not resolve")));
            }
        }
        Ok(())
    }

    /// Copy of the graph with every DropBlock node bypassed.
    pub fn without_dropblock(&self) -> GraphSpec {
        let mut alias = std::collections::HashMap::<String, String>::new();
        let resolve = |alias: &std::collections::HashMap<String, String>, name: &str| {
            let mut cur = name.to_string();
            while let Some(next) = alias.get(&cur) {
                cur = next.clone();
            }
            cur
        };
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            if let LayerKind::DropBlock { .. } = node.kind {
                let target = resolve(&alias, &node.inputs[0]);
                alias.insert(node.name.clone(), target);
                continue;
            }
            let mut node = node.clone();
            node.inputs = node.inputs.iter().map(|i| resolve(&alias, i)).collect();
            nodes.push(node);
        }
        GraphSpec {
            nodes,
            inputs: self.inputs.clone(),
            outputs: self.outputs.iter().map(|o| resolve(&alias, o)).collect(),
            frozen_stages: self.frozen_stages,
        }
    }
}
