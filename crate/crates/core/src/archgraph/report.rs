use serde::{Deserialize, Serialize};

use super::count::{bn_running_stats, count_params, node_params, paddle_macs, per_node_flops};
use super::shapes::infer_shapes;
use super::spec::{GraphSpec, ShapeNCHW};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub name: String,
    pub kind: String,
    pub out_shape: [usize; 4],
    pub params: u64,
    pub flops: u64,
}

/// Parameter and compute summary of a graph at one input shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchReport {
    pub input_shape: [usize; 4],
    pub total_params: u64,
    pub trainable_params: u64,
    /// Batch-norm running mean and variance; not part of `total_params`.
    pub bn_running_stats: u64,
    /// Two FLOPs per multiply-add, elementwise layers included.
    pub flops: u64,
    pub gflops: f64,
    /// Multiply-accumulates under Paddle's FLOPs-counter convention, in billions.
    pub paddle_gflops: f64,
    pub per_node: Vec<NodeReport>,
}

impl ArchReport {
    pub fn new(graph: &GraphSpec, entry: ShapeNCHW) -> Result<Self> {
        let shapes = infer_shapes(graph, entry)?;
        let flops = per_node_flops(graph, &shapes);
        let per_node: Vec<NodeReport> = graph
            .nodes
            .iter()
            .zip(&flops)
            .map(|(n, &f)| NodeReport {
                name: n.name.clone(),
                kind: n.kind.label().to_string(),
                out_shape: shapes[&n.name].dims(),
                params: node_params(&n.kind),
                flops: f,
            })
            .collect();
        let total_flops: u64 = flops.iter().sum();
        Ok(Self {
            input_shape: entry.dims(),
            total_params: count_params(graph, false),
            trainable_params: count_params(graph, true),
            bn_running_stats: bn_running_stats(graph),
            flops: total_flops,
            gflops: total_flops as f64 / 1e9,
            paddle_gflops: paddle_macs(graph, entry)? as f64 / 1e9,
            per_node,
        })
    }

    pub fn params_millions(&self) -> f64 {
        self.total_params as f64 / 1e6
    }
}
