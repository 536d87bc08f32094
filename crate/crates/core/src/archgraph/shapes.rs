use std::collections::HashMap;

use super::spec::{ConvSpec, GraphSpec, LayerKind, LayerSpec, ShapeNCHW};
use crate::{Error, Result};

pub type ShapeMap = HashMap<String, ShapeNCHW>;

/// Shapes of every node for a single-entry graph.
pub fn infer_shapes(graph: &GraphSpec, entry: ShapeNCHW) -> Result<ShapeMap> {
    match graph.inputs.as_slice() {
        [name] => infer_shapes_multi(graph, &HashMap::from([(name.clone(), entry)])),
        other => Err(Error::InvalidGraph(format!(
            "infer_shapes needs exactly one entry, graph has {}; use infer_shapes_multi",
            other.len()
        ))),
    }
}

/// Shapes of every node and entry, given a shape for each named entry.
pub fn infer_shapes_multi(graph: &GraphSpec, entries: &HashMap<String, ShapeNCHW>) -> Result<ShapeMap> {
    graph.validate()?;
    let mut shapes = ShapeMap::with_capacity(graph.nodes.len() + entries.len());
    for name in &graph.inputs {
        let s = *entries.get(name).ok_or_else(|| Error::MissingEntry(name.clone()))?;
        ShapeNCHW::new(s.n, s.c, s.h, s.w)?;
        shapes.insert(name.clone(), s);
    }
    for node in &graph.nodes {
        let ins: Vec<ShapeNCHW> = node.inputs.iter().map(|i| shapes[i]).collect();
        let out = node_shape(node, &ins)?;
        shapes.insert(node.name.clone(), out);
    }
    Ok(shapes)
}

fn conv_shape(node: &LayerSpec, conv: &ConvSpec, x: ShapeNCHW) -> Result<ShapeNCHW> {
    if x.c != conv.in_ch {
        return Err(Error::shape(
            &node.name,
            format!("expects {} input channels, got {x}", conv.in_ch),
        ));
    }
    let (h, w) = conv.out_hw(x.h, x.w).ok_or_else(|| {
        Error::shape(
            &node.name,
            format!("kernel {} larger than padded input {x}", conv.kernel),
        )
    })?;
    Ok(ShapeNCHW {
        n: x.n,
        c: conv.out_ch,
        h,
        w,
    })
}

fn pool_extent(x: usize, kernel: usize, stride: usize, pad: usize, ceil: bool) -> Option<usize> {
    let span = (x + 2 * pad).checked_sub(kernel)?;
    let mut out = if ceil { span.div_ceil(stride) } else { span / stride } + 1;
    // A window may not start inside the trailing padding.
    if ceil && (out - 1) * stride >= x + pad {
        out -= 1;
    }
    Some(out)
}

pub(crate) fn pool_out_hw(
    x: ShapeNCHW,
    kernel: usize,
    stride: usize,
    pad: usize,
    ceil: bool,
) -> Option<(usize, usize)> {
    Some((
        pool_extent(x.h, kernel, stride, pad, ceil)?,
        pool_extent(x.w, kernel, stride, pad, ceil)?,
    ))
}

pub(crate) fn node_shape(node: &LayerSpec, ins: &[ShapeNCHW]) -> Result<ShapeNCHW> {
    let x = ins[0];
    match &node.kind {
        LayerKind::Conv2d(c) | LayerKind::DeformConv2d(c) | LayerKind::CoordConv(c) => conv_shape(node, c, x),
        LayerKind::BatchNorm { channels } => {
            if *channels != x.c {
                return Err(Error::shape(
                    &node.name,
                    format!("BatchNorm over {channels} channels got {x}"),
                ));
            }
            Ok(x)
        }
        LayerKind::Activation(_) | LayerKind::DropBlock { .. } => Ok(x),
        LayerKind::UpsampleNearest2x => Ok(ShapeNCHW {
            h: x.h * 2,
            w: x.w * 2,
            ..x
        }),
        LayerKind::Concat => {
            let mut c = 0;
            for s in ins {
                if (s.n, s.h, s.w) != (x.n, x.h, x.w) {
                    return Err(Error::shape(&node.name, format!("Concat inputs disagree: {x} vs {s}")));
                }
                c += s.c;
            }
            Ok(x.with_c(c))
        }
        LayerKind::Add => {
            if let Some(s) = ins.iter().find(|s| **s != x) {
                return Err(Error::shape(&node.name, format!("Add inputs disagree: {x} vs {s}")));
            }
            Ok(x)
        }
        LayerKind::MaxPool { kernel, stride, pad } => {
            let (h, w) = pool_out_hw(x, *kernel, *stride, *pad, false)
                .ok_or_else(|| Error::shape(&node.name, format!("pool kernel {kernel} larger than {x}")))?;
            Ok(ShapeNCHW { h, w, ..x })
        }
        LayerKind::AvgPool {
            kernel,
            stride,
            pad,
            ceil_mode,
        } => {
            let (h, w) = pool_out_hw(x, *kernel, *stride, *pad, *ceil_mode)
                .ok_or_else(|| Error::shape(&node.name, format!("pool kernel {kernel} larger than {x}")))?;
            Ok(ShapeNCHW { h, w, ..x })
        }
        LayerKind::Spp { pool_sizes } => Ok(x.with_c(x.c * (1 + pool_sizes.len()))),
    }
}
