//! Parameter and FLOPs accounting.
//!
//! FLOPs count a multiply-add as two operations:
//!
//! | layer | FLOPs |
//! |---|---|
//! | convolution | `2·out_elems·(in_ch/groups)·k²` (+`out_elems` with bias) |
//! | deformable convolution | main and offset convolutions as above, plus 7 per bilinear sample |
//! | batch norm | `2·elems` |
//! | activation | `elems` (0 for linear) |
//! | max/avg pool, SPP | `k²` per pooled element |
//! | add | `elems` per extra operand |
//! | upsample, concat, DropBlock | 0 |
//!
//! [`paddle_macs`] is the narrower convention of Paddle's FLOPs counter: one
//! multiply-accumulate per conv weight application (plus bias), nothing for
//! elementwise layers, and nothing for the deformable sampling convolution,
//! which that counter does not recognize.

use std::collections::{BTreeMap, HashMap};

use super::shapes::{infer_shapes, ShapeMap};
use super::spec::{Activation, ConvSpec, GraphSpec, LayerKind, LayerSpec, ShapeNCHW};
use crate::Result;

fn conv_weights(c: &ConvSpec, extra_in: usize) -> u64 {
    let k2 = (c.kernel * c.kernel) as u64;
    ((c.in_ch + extra_in) / c.groups) as u64 * c.out_ch as u64 * k2 + if c.bias { c.out_ch as u64 } else { 0 }
}

/// Learnable parameters of one node; batch-norm running statistics excluded.
pub fn node_params(kind: &LayerKind) -> u64 {
    match kind {
        LayerKind::Conv2d(c) => conv_weights(c, 0),
        LayerKind::DeformConv2d(c) => conv_weights(c, 0) + conv_weights(&c.offset_conv(), 0),
        LayerKind::CoordConv(c) => conv_weights(c, 2),
        LayerKind::BatchNorm { channels } => 2 * *channels as u64,
        _ => 0,
    }
}

/// Running mean and variance across all batch-norm nodes.
pub fn bn_running_stats(graph: &GraphSpec) -> u64 {
    graph
        .nodes
        .iter()
        .map(|n| match n.kind {
            LayerKind::BatchNorm { channels } => 2 * channels as u64,
            _ => 0,
        })
        .sum()
}

/// Total learnable parameters, or only those outside frozen stages.
pub fn count_params(graph: &GraphSpec, trainable_only: bool) -> u64 {
    graph
        .nodes
        .iter()
        .filter(|n| !(trainable_only && graph.is_frozen(n)))
        .map(|n| node_params(&n.kind))
        .sum()
}

/// Parameters grouped by backbone stage (`None` collects the nodes outside the backbone).
pub fn params_by_stage(graph: &GraphSpec) -> BTreeMap<Option<usize>, u64> {
    let mut out = BTreeMap::new();
    for n in &graph.nodes {
        *out.entry(n.stage).or_insert(0) += node_params(&n.kind);
    }
    out
}

fn conv_flops(c: &ConvSpec, extra_in: usize, out: ShapeNCHW) -> u64 {
    let per_output = ((c.in_ch + extra_in) / c.groups * c.kernel * c.kernel) as u64;
    2 * out.numel() * per_output + if c.bias { out.numel() } else { 0 }
}

/// FLOPs of one node given its input and output shapes.
pub fn node_flops(node: &LayerSpec, ins: &[ShapeNCHW], out: ShapeNCHW) -> u64 {
    match &node.kind {
        LayerKind::Conv2d(c) => conv_flops(c, 0, out),
        LayerKind::CoordConv(c) => conv_flops(c, 2, out),
        LayerKind::DeformConv2d(c) => {
            let off = c.offset_conv();
            let off_shape = out.with_c(off.out_ch);
            let samples = (out.n * c.in_ch * c.kernel * c.kernel * out.h * out.w) as u64;
            conv_flops(c, 0, out) + conv_flops(&off, 0, off_shape) + 7 * samples
        }
        LayerKind::BatchNorm { .. } => 2 * out.numel(),
        LayerKind::Activation(Activation::Linear) => 0,
        LayerKind::Activation(_) => out.numel(),
        LayerKind::MaxPool { kernel, .. } | LayerKind::AvgPool { kernel, .. } => out.numel() * (kernel * kernel) as u64,
        LayerKind::Spp { pool_sizes } => pool_sizes.iter().map(|k| ins[0].numel() * (k * k) as u64).sum(),
        LayerKind::Add => out.numel() * (ins.len() as u64 - 1),
        LayerKind::UpsampleNearest2x | LayerKind::Concat | LayerKind::DropBlock { .. } => 0,
    }
}

fn node_macs_paddle(node: &LayerSpec, out: ShapeNCHW) -> u64 {
    let macs = |c: &ConvSpec, extra_in: usize, out: ShapeNCHW| {
        out.numel() * (((c.in_ch + extra_in) / c.groups * c.kernel * c.kernel) as u64 + u64::from(c.bias))
    };
    match &node.kind {
        LayerKind::Conv2d(c) => macs(c, 0, out),
        LayerKind::CoordConv(c) => macs(c, 2, out),
        LayerKind::DeformConv2d(c) => {
            let off = c.offset_conv();
            macs(&off, 0, out.with_c(off.out_ch))
        }
        _ => 0,
    }
}

fn shapes_for(graph: &GraphSpec, entry: ShapeNCHW) -> Result<ShapeMap> {
    infer_shapes(graph, entry)
}

pub(crate) fn per_node_flops(graph: &GraphSpec, shapes: &HashMap<String, ShapeNCHW>) -> Vec<u64> {
    graph
        .nodes
        .iter()
        .map(|n| {
            let ins: Vec<_> = n.inputs.iter().map(|i| shapes[i]).collect();
            node_flops(n, &ins, shapes[&n.name])
        })
        .collect()
}

/// Total FLOPs of a single-entry graph at the given entry shape.
pub fn count_flops(graph: &GraphSpec, entry: ShapeNCHW) -> Result<u64> {
    let shapes = shapes_for(graph, entry)?;
    Ok(per_node_flops(graph, &shapes).into_iter().sum())
}

/// Multiply-accumulates under Paddle's counter convention (see module docs).
pub fn paddle_macs(graph: &GraphSpec, entry: ShapeNCHW) -> Result<u64> {
    let shapes = shapes_for(graph, entry)?;
    Ok(graph.nodes.iter().map(|n| node_macs_paddle(n, shapes[&n.name])).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_conv(spec: ConvSpec) -> GraphSpec {
        GraphSpec {
            nodes: vec![LayerSpec::new("conv", LayerKind::Conv2d(spec), &["x"])],
            inputs: vec!["x".into()],
            outputs: vec!["conv".into()],
            frozen_stages: 0,
        }
    }

    #[test]
    fn conv_params_with_bias() {
        assert_eq!(
            node_params(&LayerKind::Conv2d(ConvSpec::new(3, 16, 3, 1).with_bias())),
            448
        );
    }

    #[test]
    fn grouped_conv_params() {
        assert_eq!(
            node_params(&LayerKind::Conv2d(ConvSpec::new(8, 8, 3, 1).with_groups(8))),
            72
        );
    }

    #[test]
    fn conv_flops_example() {
        let g = one_conv(ConvSpec::new(3, 16, 3, 1));
        let flops = count_flops(&g, ShapeNCHW::new(1, 3, 32, 32).unwrap()).unwrap();
        assert_eq!(flops, 884_736);
        assert_eq!(flops, 2 * 16 * 32 * 32 * 27);
    }

    #[test]
    fn deform_counts_offset_conv() {
        let c = ConvSpec::new(4, 8, 3, 1);
        let expected = 4 * 8 * 9 + (4 * 18 * 9 + 18);
        assert_eq!(node_params(&LayerKind::DeformConv2d(c)), expected);
    }

    #[test]
    fn coordconv_adds_two_input_channels() {
        assert_eq!(node_params(&LayerKind::CoordConv(ConvSpec::new(6, 4, 1, 1))), 8 * 4);
    }

    #[test]
    fn batchnorm_trainable_vs_running() {
        let g = GraphSpec {
            nodes: vec![LayerSpec::new("bn", LayerKind::BatchNorm { channels: 5 }, &["x"])],
            inputs: vec!["x".into()],
            outputs: vec![],
            frozen_stages: 0,
        };
        assert_eq!(count_params(&g, false), 10);
        assert_eq!(bn_running_stats(&g), 10);
    }

    #[test]
    fn paddle_macs_is_half_of_conv_flops_without_bias() {
        let g = one_conv(ConvSpec::new(3, 16, 3, 1));
        let entry = ShapeNCHW::new(1, 3, 32, 32).unwrap();
        assert_eq!(2 * paddle_macs(&g, entry).unwrap(), count_flops(&g, entry).unwrap());
    }
}
