//! Head decoding, IoU-aware score fusion and per-class greedy NMS.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::anchors::{cell_values, decode_box, AnchorSet, HeadLayout};
use crate::geometry::iou;
use crate::refexec::sigmoid;
use crate::{BBox, Error, Result, TensorF32};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// One decoded `(cell, anchor)` prediction with sigmoid-activated scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub bbox: BBox,
    pub objectness: f64,
    pub class_probs: Vec<f64>,
    pub iou_pred: Option<f64>,
    pub level: usize,
    pub anchor: usize,
    pub grid_y: usize,
    pub grid_x: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub class_id: usize,
    pub score: f64,
}

/// Decodes every `(cell, anchor)` of every level, clips the boxes to the
/// input square and drops the ones that end up with zero area.
pub fn decode_boxes(
    heads: &[TensorF32],
    layout: &HeadLayout,
    anchors: &AnchorSet,
    input_size: usize,
) -> Result<Vec<Candidate>> {
    anchors.validate()?;
    if heads.len() != anchors.num_levels() {
        return Err(Error::invalid(format!(
            "{} head levels for {} anchor levels",
            heads.len(),
            anchors.num_levels()
        )));
    }
    let size = input_size as f64;
    let mut out = Vec::new();
    for (l, head) in heads.iter().enumerate() {
        let (h, w) = layout.check(head)?;
        if anchors.levels[l].len() != layout.anchors_per_level {
            return Err(Error::shape(
                format!("head level {l}"),
                "anchor count differs from layout",
            ));
        }
        let stride = anchors.strides[l] as f64;
        for a in 0..layout.anchors_per_level {
            for gy in 0..h {
                for gx in 0..w {
                    let v = cell_values(head, layout, a, gy, gx);
                    let bbox =
                        decode_box([v[0], v[1], v[2], v[3]], gx, gy, stride, anchors.levels[l][a]).clip(size, size);
                    if !(bbox.area() > 0.0) {
                        continue;
                    }
                    out.push(Candidate {
                        bbox,
                        objectness: sigmoid(v[4]),
                        class_probs: v[5..5 + layout.num_classes].iter().map(|&x| sigmoid(x)).collect(),
                        iou_pred: layout.iou_aware.then(|| sigmoid(v[5 + layout.num_classes])),
                        level: l,
                        anchor: a,
                        grid_y: gy,
                        grid_x: gx,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of the box decoding for the cell containing the box center.
/// Returns `(gx, gy, [tx, ty, tw, th])`.
pub fn encode_box(b: &BBox, stride: f64, anchor: (f64, f64)) -> (usize, usize, [f64; 4]) {
    let (cx, cy) = b.center();
    let (gx, gy) = ((cx / stride).floor(), (cy / stride).floor());
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let t = [
        logit(cx / stride - gx),
        logit(cy / stride - gy),
        (b.width() / anchor.0).ln(),
        (b.height() / anchor.1).ln(),
    ];
    (gx as usize, gy as usize, t)
}

/// `objectness^(1−α) · iou^α · class_prob`.
pub fn fuse_score(objectness: f64, class_prob: f64, iou_pred: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return objectness * class_prob;
    }
    objectness.powf(1.0 - alpha) * iou_pred.powf(alpha) * class_prob
}

/// One detection per `(candidate, class)`. Without an IoU channel the score is
/// `objectness · class_prob`.
pub fn candidates_to_detections(cands: &[Candidate], alpha: f64) -> Vec<Detection> {
    cands
        .iter()
        .flat_map(|c| {
            c.class_probs.iter().enumerate().map(move |(k, &p)| Detection {
                bbox: c.bbox,
                class_id: k,
                score: match c.iou_pred {
                    Some(q) => fuse_score(c.objectness, p, q, alpha),
                    None => c.objectness * p,
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsConfig {
    pub iou_thresh: f64,
    pub score_thresh: f64,
    pub max_dets: usize,
}

impl Default for NmsConfig {
    fn default() -> Self {
        Self {
            iou_thresh: 0.45,
            score_thresh: 0.01,
            max_dets: 100,
        }
    }
}

/// Score descending, then class ascending, then input position.
fn rank(dets: &[Detection], i: usize, j: usize) -> Ordering {
    dets[j]
        .score
        .total_cmp(&dets[i].score)
        .then(dets[i].class_id.cmp(&dets[j].class_id))
        .then(i.cmp(&j))
}

/// Per-class greedy NMS. The result is ordered by score descending (ties:
/// lower class first, then input order) and truncated to `max_dets`.
pub fn nms(dets: &[Detection], cfg: &NmsConfig) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].score >= cfg.score_thresh).collect();
    order.sort_by(|&i, &j| rank(dets, i, j));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let suppressed = kept
            .iter()
            .any(|&k| dets[k].class_id == dets[i].class_id && iou(&dets[k].bbox, &dets[i].bbox) > cfg.iou_thresh);
        if !suppressed {
            kept.push(i);
        }
    }
    kept.truncate(cfg.max_dets);
    kept.into_iter().map(|i| dets[i]).collect()
}

/// Decode, fuse and suppress in one call.
pub fn postprocess(
    heads: &[TensorF32],
    layout: &HeadLayout,
    anchors: &AnchorSet,
    input_size: usize,
    alpha: f64,
    cfg: &NmsConfig,
) -> Result<Vec<Detection>> {
    let cands = decode_boxes(heads, layout, anchors, input_size)?;
    Ok(nms(&candidates_to_detections(&cands, alpha), cfg))
}

/// A row of a COCO results file; `bbox` is `[x, y, width, height]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoResult {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
    pub score: f64,
}

impl CocoResult {
    pub fn from_detection(d: &Detection, image_id: u64, category_ids: Option<&[u64]>) -> Self {
        Self {
            image_id,
            category_id: category_ids.map_or(d.class_id as u64, |ids| ids[d.class_id]),
            bbox: d.bbox.to_xywh(),
            score: d.score,
        }
    }
}

/// Writes one JSON object per line.
pub fn write_json_lines(rows: &[CocoResult], mut w: impl Write) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
