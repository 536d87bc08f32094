use serde::{Deserialize, Serialize};

use crate::anchors::AnchorSet;
use crate::geometry::{centered_iou, iou};
use crate::{BBox, Error, Result};

pub const DEFAULT_IGNORE_THRESH: f64 = 0.7;

/// Where one ground truth landed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub level: usize,
    pub anchor: usize,
    pub grid_y: usize,
    pub grid_x: usize,
    /// Shape-only IoU between the ground truth and its anchor.
    pub anchor_iou: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    Negative,
    Ignored,
    Positive { gt: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub input_size: usize,
    pub grids: Vec<usize>,
    pub anchors_per_level: Vec<usize>,
    /// One entry per ground truth, in input order.
    pub assignments: Vec<Assignment>,
    /// Per level, indexed `(anchor·grid + gy)·grid + gx`.
    pub labels: Vec<Vec<CellLabel>>,
}

impl MatchResult {
    fn index(&self, level: usize, anchor: usize, gy: usize, gx: usize) -> usize {
        let g = self.grids[level];
        (anchor * g + gy) * g + gx
    }

    pub fn label(&self, level: usize, anchor: usize, gy: usize, gx: usize) -> CellLabel {
        self.labels[level][self.index(level, anchor, gy, gx)]
    }

    /// `(level, anchor, gy, gx, gt)` for every positive prediction, level-major.
    pub fn positives(&self) -> Vec<(usize, usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for (l, labels) in self.labels.iter().enumerate() {
            let g = self.grids[l];
            for (i, lab) in labels.iter().enumerate() {
                if let CellLabel::Positive { gt } = *lab {
                    out.push((l, i / (g * g), (i / g) % g, i % g, gt));
                }
            }
        }
        out
    }

    pub fn num_positives(&self) -> usize {
        self.positives().len()
    }
}

/// The anchor (over all levels) whose shape best overlaps the box when both
/// are centered at the origin. Ties go to the lowest `(level, anchor)`.
fn best_anchor(anchors: &AnchorSet, gt: &BBox) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::NEG_INFINITY);
    for (l, k, wh) in anchors.iter() {
        let v = centered_iou((gt.width(), gt.height()), wh);
        if v > best.2 {
            best = (l, k, v);
        }
    }
    best
}

/// YOLOv3-style assignment. Each ground truth goes to its best-shaped anchor at
/// the cell containing its center. Remaining predictions whose prior box (the
/// anchor centered on its cell) overlaps any ground truth above
/// `ignore_thresh` are ignored.
///
/// When two ground truths claim the same `(level, anchor, cell)`, the one with
/// the higher anchor IoU keeps it (then the lexicographically smaller box), so
/// the result does not depend on input order.
pub fn match_anchors(gts: &[BBox], anchors: &AnchorSet, input_size: usize, ignore_thresh: f64) -> Result<MatchResult> {
    anchors.validate()?;
    let grids = anchors.grid_sizes(input_size)?;
    if let Some((i, _)) = gts.iter().enumerate().find(|(_, b)| !(b.area() > 0.0)) {
        return Err(Error::invalid(format!("ground truth {i} has zero area")));
    }
    let anchors_per_level: Vec<usize> = anchors.levels.iter().map(Vec::len).collect();
    let mut labels: Vec<Vec<CellLabel>> = grids
        .iter()
        .zip(&anchors_per_level)
        .map(|(&g, &a)| vec![CellLabel::Negative; a * g * g])
        .collect();

    for (l, &g) in grids.iter().enumerate() {
        let stride = anchors.strides[l] as f64;
        for (k, &(aw, ah)) in anchors.levels[l].iter().enumerate() {
            for gy in 0..g {
                for gx in 0..g {
                    let prior = BBox::from_center((gx as f64 + 0.5) * stride, (gy as f64 + 0.5) * stride, aw, ah);
                    if gts.iter().any(|gt| iou(&prior, gt) > ignore_thresh) {
                        labels[l][(k * g + gy) * g + gx] = CellLabel::Ignored;
                    }
                }
            }
        }
    }

    let mut assignments = Vec::with_capacity(gts.len());
    for (i, gt) in gts.iter().enumerate() {
        let (level, anchor, anchor_iou) = best_anchor(anchors, gt);
        let g = grids[level];
        let stride = anchors.strides[level] as f64;
        let (cx, cy) = gt.center();
        let cell = |c: f64| ((c / stride).floor().max(0.0) as usize).min(g - 1);
        let a = Assignment {
            level,
            anchor,
            grid_y: cell(cy),
            grid_x: cell(cx),
            anchor_iou,
        };
        let slot = &mut labels[level][(anchor * g + a.grid_y) * g + a.grid_x];
        let wins = match *slot {
            CellLabel::Positive { gt: other } => {
                let prev = assignments
                    .get(other)
                    .map_or(f64::NEG_INFINITY, |p: &Assignment| p.anchor_iou);
                anchor_iou > prev
                    || (anchor_iou == prev && gt.key().partial_cmp(&gts[other].key()) == Some(std::cmp::Ordering::Less))
            }
            _ => true,
        };
        if wins {
            *slot = CellLabel::Positive { gt: i };
        }
        assignments.push(a);
    }

    Ok(MatchResult {
        input_size,
        grids,
        anchors_per_level,
        assignments,
        labels,
    })
}
