use std::collections::HashMap;

use rand::Rng;

use super::activations;
use super::conv::{conv2d_naive, Conv2dArgs};
use super::deform::deform_conv2d_naive;
use super::dropblock::apply_dropblock;
use super::params::{NodeParams, ParamStore};
use crate::archgraph::{infer_shapes_multi, ConvSpec, GraphSpec, LayerKind, LayerSpec, ShapeNCHW};
use crate::{Error, Result, TensorF32};

const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// DropBlock active; batch norm still uses running statistics.
    Train,
    Eval,
}

/// Evaluates the graph in node order and returns its outputs by name.
///
/// `rng` is only consulted in [`Mode::Train`] and only when the graph contains
/// DropBlock nodes; it is an error to omit it then.
pub fn forward<R: Rng + ?Sized>(
    graph: &GraphSpec,
    params: &ParamStore,
    entries: &HashMap<String, TensorF32>,
    mode: Mode,
    mut rng: Option<&mut R>,
) -> Result<HashMap<String, TensorF32>> {
    let mut entry_shapes = HashMap::new();
    for name in &graph.inputs {
        let t = entries.get(name).ok_or_else(|| Error::MissingEntry(name.clone()))?;
        let [n, c, h, w] = t.nchw()?;
        entry_shapes.insert(name.clone(), ShapeNCHW::new(n, c, h, w)?);
    }
    infer_shapes_multi(graph, &entry_shapes)?;
    let needs_rng = mode == Mode::Train && graph.count_kind(|k| matches!(k, LayerKind::DropBlock { .. })) > 0;
    if needs_rng && rng.is_none() {
        return Err(Error::invalid("train-mode forward through DropBlock needs an rng"));
    }

    // Last consumer of each value, so intermediates can be dropped early.
    let mut last_use: HashMap<&str, usize> = HashMap::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        for input in &node.inputs {
            last_use.insert(input, i);
        }
    }
    for out in &graph.outputs {
        last_use.insert(out, usize::MAX);
    }

    let mut values: HashMap<String, TensorF32> = graph.inputs.iter().map(|n| (n.clone(), entries[n].clone())).collect();
    for (i, node) in graph.nodes.iter().enumerate() {
        let ins: Vec<&TensorF32> = node.inputs.iter().map(|n| &values[n]).collect();
        let out = eval_node(node, &ins, params, mode, rng.as_deref_mut())?;
        for input in &node.inputs {
            if last_use.get(input.as_str()) == Some(&i) {
                values.remove(input);
            }
        }
        values.insert(node.name.clone(), out);
    }
    graph
        .outputs
        .iter()
        .map(|o| {
            Ok((
                o.clone(),
                values.get(o).cloned().ok_or_else(|| Error::MissingEntry(o.clone()))?,
            ))
        })
        .collect()
}

fn conv_params<'a>(node: &LayerSpec, params: &'a ParamStore) -> Result<(&'a TensorF32, Option<&'a TensorF32>)> {
    match params.get(&node.name) {
        Some(NodeParams::Conv { weight, bias }) => Ok((weight, bias.as_ref())),
        _ => Err(Error::MissingParams(node.name.clone())),
    }
}

fn conv_args(c: &ConvSpec) -> Conv2dArgs {
    Conv2dArgs {
        stride: c.stride,
        pad: c.pad,
        groups: c.groups,
    }
}

fn eval_node<R: Rng + ?Sized>(
    node: &LayerSpec,
    ins: &[&TensorF32],
    params: &ParamStore,
    mode: Mode,
    rng: Option<&mut R>,
) -> Result<TensorF32> {
    let x = ins[0];
    match &node.kind {
        LayerKind::Conv2d(c) => {
            let (w, b) = conv_params(node, params)?;
            conv2d_naive(x, w, b, conv_args(c))
        }
        LayerKind::CoordConv(c) => {
            let (w, b) = conv_params(node, params)?;
            conv2d_naive(&coord_channels(x)?, w, b, conv_args(c))
        }
        LayerKind::DeformConv2d(c) => match params.get(&node.name) {
            Some(NodeParams::Deform {
                weight,
                bias,
                offset_weight,
                offset_bias,
            }) => {
                let offsets = conv2d_naive(x, offset_weight, Some(offset_bias), conv_args(&c.offset_conv()))?;
                deform_conv2d_naive(x, weight, &offsets, bias.as_ref(), c.stride, c.pad)
            }
            _ => Err(Error::MissingParams(node.name.clone())),
        },
        LayerKind::BatchNorm { .. } => match params.get(&node.name) {
            Some(NodeParams::BatchNorm { gamma, beta, mean, var }) => batch_norm(x, gamma, beta, mean, var),
            _ => Err(Error::MissingParams(node.name.clone())),
        },
        LayerKind::Activation(a) => Ok(activations::apply(*a, x)),
        LayerKind::UpsampleNearest2x => upsample2x(x),
        LayerKind::Concat => concat_channels(ins),
        LayerKind::Add => {
            let mut out = x.clone();
            for other in &ins[1..] {
                for (o, v) in out.data_mut().iter_mut().zip(other.data()) {
                    *o += v;
                }
            }
            Ok(out)
        }
        LayerKind::MaxPool { kernel, stride, pad } => max_pool(x, *kernel, *stride, *pad),
        LayerKind::AvgPool {
            kernel,
            stride,
            pad,
            ceil_mode,
        } => avg_pool(x, *kernel, *stride, *pad, *ceil_mode),
        LayerKind::Spp { pool_sizes } => {
            let mut parts = vec![x.clone()];
            for &k in pool_sizes {
                parts.push(max_pool(x, k, 1, k / 2)?);
            }
            concat_channels(&parts.iter().collect::<Vec<_>>())
        }
        LayerKind::DropBlock { block_size, keep_prob } => match (mode, rng) {
            (Mode::Eval, _) => Ok(x.clone()),
            (Mode::Train, Some(rng)) => apply_dropblock(rng, x, *block_size, *keep_prob as f64),
            (Mode::Train, None) => Err(Error::invalid("train-mode DropBlock needs an rng")),
        },
    }
}

/// Prepends an x-coordinate and a y-coordinate channel, each spanning [-1, 1]
/// across the map (a single row or column sits at -1).
pub fn coord_channels(x: &TensorF32) -> Result<TensorF32> {
    let [n, c, h, w] = x.nchw()?;
    let lin = |i: usize, len: usize| {
        if len > 1 {
            -1.0 + 2.0 * i as f32 / (len - 1) as f32
        } else {
            -1.0
        }
    };
    let mut out = Vec::with_capacity(n * (c + 2) * h * w);
    for b in 0..n {
        out.extend((0..h * w).map(|p| lin(p % w, w)));
        out.extend((0..h * w).map(|p| lin(p / w, h)));
        out.extend_from_slice(&x.data()[b * c * h * w..(b + 1) * c * h * w]);
    }
    TensorF32::new(vec![n, c + 2, h, w], out)
}

fn batch_norm(x: &TensorF32, gamma: &[f32], beta: &[f32], mean: &[f32], var: &[f32]) -> Result<TensorF32> {
    let [n, c, h, w] = x.nchw()?;
    if [gamma.len(), beta.len(), mean.len(), var.len()].iter().any(|&l| l != c) {
        return Err(Error::shape(
            "batch_norm",
            format!("statistics do not cover {c} channels"),
        ));
    }
    let mut out = x.clone();
    for (i, plane) in out.data_mut().chunks_mut(h * w).enumerate().take(n * c) {
        let ch = i % c;
        let scale = gamma[ch] as f64 / (var[ch] as f64 + BN_EPS).sqrt();
        let shift = beta[ch] as f64 - mean[ch] as f64 * scale;
        for v in plane {
            *v = (*v as f64 * scale + shift) as f32;
        }
    }
    Ok(out)
}

fn upsample2x(x: &TensorF32) -> Result<TensorF32> {
    let [n, c, h, w] = x.nchw()?;
    let d = x.data();
    let mut out = Vec::with_capacity(n * c * 4 * h * w);
    for plane in d.chunks(h * w) {
        for oy in 0..2 * h {
            out.extend((0..2 * w).map(|ox| plane[(oy / 2) * w + ox / 2]));
        }
    }
    TensorF32::new(vec![n, c, 2 * h, 2 * w], out)
}

fn concat_channels(parts: &[&TensorF32]) -> Result<TensorF32> {
    let [n, _, h, w] = parts[0].nchw()?;
    let mut total_c = 0;
    for p in parts {
        let [pn, pc, ph, pw] = p.nchw()?;
        if (pn, ph, pw) != (n, h, w) {
            return Err(Error::shape(
                "concat",
                format!("{:?} vs {:?}", parts[0].dims(), p.dims()),
            ));
        }
        total_c += pc;
    }
    let mut out = Vec::with_capacity(n * total_c * h * w);
    for b in 0..n {
        for p in parts {
            let pc = p.dims()[1];
            out.extend_from_slice(&p.data()[b * pc * h * w..(b + 1) * pc * h * w]);
        }
    }
    TensorF32::new(vec![n, total_c, h, w], out)
}

fn pool(x: &TensorF32, kernel: usize, stride: usize, pad: usize, ceil: bool, max: bool) -> Result<TensorF32> {
    let [n, c, h, w] = x.nchw()?;
    let shape = ShapeNCHW::new(n, c, h, w)?;
    let (oh, ow) = crate::archgraph::shapes_pool_out(shape, kernel, stride, pad, ceil)
        .ok_or_else(|| Error::shape("pool", format!("kernel {kernel} larger than {shape}")))?;
    let mut out = Vec::with_capacity(n * c * oh * ow);
    for plane in x.data().chunks(h * w) {
        for oy in 0..oh {
            for ox in 0..ow {
                let y0 = (oy * stride) as isize - pad as isize;
                let x0 = (ox * stride) as isize - pad as isize;
                let mut best = f32::NEG_INFINITY;
                let mut sum = 0f64;
                let mut count = 0usize;
                for yy in y0.max(0)..(y0 + kernel as isize).min(h as isize) {
                    for xx in x0.max(0)..(x0 + kernel as isize).min(w as isize) {
                        let v = plane[yy as usize * w + xx as usize];
                        best = best.max(v);
                        sum += v as f64;
                        count += 1;
                    }
                }
                out.push(if max {
                    best
                } else if count > 0 {
                    (sum / count as f64) as f32
                } else {
                    0.0
                });
            }
        }
    }
    TensorF32::new(vec![n, c, oh, ow], out)
}

fn max_pool(x: &TensorF32, kernel: usize, stride: usize, pad: usize) -> Result<TensorF32> {
    pool(x, kernel, stride, pad, false, true)
}

fn avg_pool(x: &TensorF32, kernel: usize, stride: usize, pad: usize, ceil: bool) -> Result<TensorF32> {
    pool(x, kernel, stride, pad, ceil, false)
}
