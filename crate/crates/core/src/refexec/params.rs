use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::archgraph::{ConvSpec, GraphSpec, LayerKind};
use crate::TensorF32;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeParams {
    Conv {
        weight: TensorF32,
        bias: Option<TensorF32>,
    },
    Deform {
        weight: TensorF32,
        bias: Option<TensorF32>,
        offset_weight: TensorF32,
        offset_bias: TensorF32,
    },
    BatchNorm {
        gamma: Vec<f32>,
        beta: Vec<f32>,
        mean: Vec<f32>,
        var: Vec<f32>,
    },
}

/// Weights for every parameterized node, keyed by node name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: HashMap<String, NodeParams>,
}

// FNV-1a, so that a node's stream depends on its name only.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn uniform_weight(rng: &mut ChaCha8Rng, spec: &ConvSpec, extra_in: usize) -> TensorF32 {
    let icg = (spec.in_ch + extra_in) / spec.groups;
    let fan_in = (icg * spec.kernel * spec.kernel) as f32;
    let bound = (3.0 / fan_in).sqrt();
    TensorF32::from_fn(&[spec.out_ch, icg, spec.kernel, spec.kernel], |_| {
        rng.random_range(-bound..bound)
    })
}

impl ParamStore {
    /// Deterministic variance-preserving weights, zero biases, identity batch
    /// norms and zero deformable offsets (so deformable layers start out as
    /// plain convolutions).
    pub fn init(graph: &GraphSpec, seed: u64) -> Self {
        let mut params = HashMap::new();
        for node in &graph.nodes {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(&node.name));
            let zeros = |n: usize| TensorF32::zeros(&[n]);
            let p = match &node.kind {
                LayerKind::Conv2d(c) => NodeParams::Conv {
                    weight: uniform_weight(&mut rng, c, 0),
                    bias: c.bias.then(|| zeros(c.out_ch)),
                },
                LayerKind::CoordConv(c) => NodeParams::Conv {
                    weight: uniform_weight(&mut rng, c, 2),
                    bias: c.bias.then(|| zeros(c.out_ch)),
                },
                LayerKind::DeformConv2d(c) => {
                    let off = c.offset_conv();
                    NodeParams::Deform {
                        weight: uniform_weight(&mut rng, c, 0),
                        bias: c.bias.then(|| zeros(c.out_ch)),
                        offset_weight: TensorF32::zeros(&[off.out_ch, off.in_ch, off.kernel, off.kernel]),
                        offset_bias: zeros(off.out_ch),
                    }
                }
                LayerKind::BatchNorm { channels } => NodeParams::BatchNorm {
                    gamma: vec![1.0; *channels],
                    beta: vec![0.0; *channels],
                    mean: vec![0.0; *channels],
                    var: vec![1.0; *channels],
                },
                _ => continue,
            };
            params.insert(node.name.clone(), p);
        }
        Self { params }
    }

    pub fn get(&self, node: &str) -> Option<&NodeParams> {
        self.params.get(node)
    }

    pub fn insert(&mut self, node: impl Into<String>, params: NodeParams) {
        self.params.insert(node.into(), params);
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
}
