//! Building blocks for a YOLO-family one-stage detector with a ResNet50-vd
//! backbone and a path-aggregation neck.
//!
//! Every piece is usable on its own and checkable against an independent
//! oracle:
//!
//! - [`anchors`]: anchor priors and the head channel layout.
//! - [`archgraph`]: declarative layer graphs, shape inference, parameter and
//!   FLOPs accounting.
//! - [`refexec`]: naive forward execution of those graphs on small tensors.
//! - [`losses`]: IoU geometry, the soft-label IoU-aware loss, anchor matching
//!   and the companion detection losses.
//! - [`postprocess`]: box decoding, score fusion and per-class NMS.
//! - [`augment`]: the seeded preprocessing chain.
//! - [`schedule`]: learning-rate schedules and gradient clipping.
//! - [`evalmap`]: COCO-style mAP evaluation.

pub mod anchors;
pub mod archgraph;
pub mod augment;
mod error;
pub mod evalmap;
pub mod geometry;
pub mod gradcheck;
pub mod losses;
pub mod postprocess;
pub mod refexec;
pub mod schedule;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::BBox;
pub use tensor::TensorF32;
