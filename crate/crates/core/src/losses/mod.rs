//! Soft-label IoU-aware loss, anchor matching and the detection loss terms.

mod detection;
mod iou_aware;
mod matching;

pub use crate::geometry::iou;
pub use detection::{detection_losses, LossReport, Targets};
pub use iou_aware::{bce_with_logits, iou_aware_loss, iou_aware_loss_grad, IoUAwareSample};
pub use matching::{match_anchors, Assignment, CellLabel, MatchResult, DEFAULT_IGNORE_THRESH};
