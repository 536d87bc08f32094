//! Declarative detector graphs.
//!
//! A [`GraphSpec`] is a topologically ordered list of [`LayerSpec`] nodes.
//! The same description drives shape inference ([`infer_shapes`]), parameter
//! and FLOPs accounting ([`count_params`], [`count_flops`]) and the naive
//! executor in [`crate::refexec`].

mod builders;
mod count;
mod report;
mod shapes;
mod spec;

pub use builders::{
    build_backbone_resnet50vd, build_fpn_half, build_head, build_model, build_pan_half, build_pan_neck,
    build_ppyolo_fpn_neck, HeadConfig, ModelConfig, NeckKind, Variant, BACKBONE_CHANNELS, DEFAULT_DROPBLOCK_BLOCK_SIZE,
    DEFAULT_DROPBLOCK_KEEP_PROB, HEAD_STRIDES,
};
pub use count::{bn_running_stats, count_flops, count_params, node_flops, node_params, paddle_macs, params_by_stage};
pub use report::{ArchReport, NodeReport};
pub(crate) use shapes::pool_out_hw as shapes_pool_out;
pub use shapes::{infer_shapes, infer_shapes_multi, ShapeMap};
pub use spec::{Activation, ConvSpec, GraphSpec, LayerKind, LayerSpec, ShapeNCHW};
