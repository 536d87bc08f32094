use serde::{Deserialize, Serialize};

use super::iou_aware::bce_with_logits;
use super::matching::{CellLabel, MatchResult};
use crate::anchors::{cell_values, decode_box, AnchorSet, HeadLayout};
use crate::geometry::iou;
use crate::{BBox, Error, Result, TensorF32};

/// Ground truth for one image. `weights` carries mixup weights (1 when no
/// mixup was applied) and scales every term the box contributes to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Targets {
    pub boxes: Vec<BBox>,
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Targets {
    pub fn unweighted(boxes: Vec<BBox>, labels: Vec<usize>) -> Self {
        let weights = vec![1.0; boxes.len()];
        Self { boxes, labels, weights }
    }
}

/// Summed (not averaged) loss terms for one image.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub box_loss: f64,
    pub obj_loss: f64,
    pub cls_loss: f64,
    pub iou_aware_loss: f64,
    pub num_positives: usize,
}

impl LossReport {
    pub fn total(&self) -> f64 {
        self.box_loss + self.obj_loss + self.cls_loss + self.iou_aware_loss
    }
}

fn check_geometry(
    heads: &[TensorF32],
    layout: &HeadLayout,
    anchors: &AnchorSet,
    m: &MatchResult,
    targets: &Targets,
) -> Result<()> {
    if heads.len() != anchors.num_levels() || m.grids.len() != heads.len() {
        return Err(Error::invalid(format!(
            "{} head levels, {} anchor levels, {} matched levels",
            heads.len(),
            anchors.num_levels(),
            m.grids.len()
        )));
    }
    for (l, head) in heads.iter().enumerate() {
        let (h, w) = layout.check(head)?;
        if h != m.grids[l] || w != m.grids[l] || anchors.levels[l].len() != layout.anchors_per_level {
            return Err(Error::shape(
                format!("head level {l}"),
                format!("grid {h}×{w} vs matched grid {}", m.grids[l]),
            ));
        }
    }
    let n = targets.boxes.len();
    if targets.labels.len() != n || targets.weights.len() != n || m.assignments.len() != n {
        return Err(Error::invalid(
            "targets, labels, weights and matches disagree in length",
        ));
    }
    if let Some(&c) = targets.labels.iter().find(|&&c| c >= layout.num_classes) {
        return Err(Error::invalid(format!(
            "label {c} outside {} classes",
            layout.num_classes
        )));
    }
    if targets.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
        return Err(Error::invalid("box weights must lie in [0, 1]"));
    }
    Ok(())
}

/// Box (1 − IoU of decoded vs target), objectness and class BCE, and the
/// IoU-aware term whose soft target is the detached IoU of the decoded box.
/// Ignored predictions contribute nothing to objectness.
pub fn detection_losses(
    heads: &[TensorF32],
    layout: &HeadLayout,
    anchors: &AnchorSet,
    matches: &MatchResult,
    targets: &Targets,
) -> Result<LossReport> {
    check_geometry(heads, layout, anchors, matches, targets)?;
    let mut r = LossReport::default();
    for (l, head) in heads.iter().enumerate() {
        let g = matches.grids[l];
        let stride = anchors.strides[l] as f64;
        for a in 0..layout.anchors_per_level {
            for gy in 0..g {
                for gx in 0..g {
                    let label = matches.label(l, a, gy, gx);
                    if label == CellLabel::Ignored {
                        continue;
                    }
                    let v = cell_values(head, layout, a, gy, gx);
                    let CellLabel::Positive { gt } = label else {
                        r.obj_loss += bce_with_logits(v[4], 0.0);
                        continue;
                    };
                    let w = targets.weights[gt];
                    let pred = decode_box([v[0], v[1], v[2], v[3]], gx, gy, stride, anchors.levels[l][a]);
                    let overlap = iou(&pred, &targets.boxes[gt]);
                    r.num_positives += 1;
                    r.obj_loss += w * bce_with_logits(v[4], 1.0);
                    r.box_loss += w * (1.0 - overlap);
                    r.cls_loss += w
                        * (0..layout.num_classes)
                            .map(|c| bce_with_logits(v[5 + c], f64::from(u8::from(c == targets.labels[gt]))))
                            .sum::<f64>();
                    if layout.iou_aware {
                        r.iou_aware_loss += w * bce_with_logits(v[5 + layout.num_classes], overlap);
                    }
                }
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::match_anchors;

    fn layout() -> HeadLayout {
        HeadLayout {
            num_classes: 2,
            anchors_per_level: 3,
            iou_aware: true,
        }
    }

    fn heads(size: usize, fill: f32) -> Vec<TensorF32> {
        [8, 16, 32]
            .iter()
            .map(|s| TensorF32::full(&[1, layout().channels(), size / s, size / s], fill))
            .collect()
    }

    #[test]
    fn no_positives_only_objectness() {
        let anchors = AnchorSet::yolov3();
        let m = match_anchors(&[], &anchors, 64, 0.7).unwrap();
        let r = detection_losses(&heads(64, 0.0), &layout(), &anchors, &m, &Targets::default()).unwrap();
        assert_eq!(
            (r.box_loss, r.cls_loss, r.iou_aware_loss, r.num_positives),
            (0.0, 0.0, 0.0, 0)
        );
        let cells = 3 * (64 + 16 + 4);
        assert!((r.obj_loss - cells as f64 * std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn exact_prediction_has_zero_box_loss() {
        let anchors = AnchorSet::yolov3();
        // σ(0)=0.5 puts the center mid-cell; exp(0) keeps the anchor size
        let gt = BBox::from_center(1.5 * 32.0, 0.5 * 32.0, 116.0, 90.0);
        let targets = Targets::unweighted(vec![gt], vec![1]);
        let m = match_anchors(&targets.boxes, &anchors, 64, 0.7).unwrap();
        let r = detection_losses(&heads(64, 0.0), &layout(), &anchors, &m, &targets).unwrap();
        assert_eq!(r.num_positives, 1);
        assert!(r.box_loss.abs() < 1e-12);
        // soft target 1 against logit 0
        assert!((r.iou_aware_loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let anchors = AnchorSet::yolov3();
        let m = match_anchors(&[], &anchors, 64, 0.7).unwrap();
        assert!(detection_losses(&heads(128, 0.0), &layout(), &anchors, &m, &Targets::default()).is_err());
        assert!(detection_losses(&heads(64, 0.0)[..2], &layout(), &anchors, &m, &Targets::default()).is_err());
    }
}
