//! COCO-style box mAP: greedy matching per IoU threshold, 101-point
//! interpolated precision, size buckets by box area.

mod coco;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use coco::{parse_results, CocoAnnotation, CocoCategory, CocoDataset, CocoImage};

use crate::geometry::iou;
use crate::postprocess::CocoResult;
use crate::{BBox, Error, Result};

pub const MAX_DETS: usize = 100;
pub const SMALL_AREA: f64 = 32.0 * 32.0;
pub const LARGE_AREA: f64 = 96.0 * 96.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    pub area: f64,
    pub iscrowd: bool,
}

impl GroundTruth {
    /// Area taken from the box.
    pub fn new(image_id: u64, category_id: u64, bbox: BBox, iscrowd: bool) -> Self {
        Self {
            image_id,
            category_id,
            bbox,
            area: bbox.area(),
            iscrowd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalDetection {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: BBox,
    pub score: f64,
}

impl From<&CocoResult> for EvalDetection {
    fn from(r: &CocoResult) -> Self {
        Self {
            image_id: r.image_id,
            category_id: r.category_id,
            bbox: BBox::from_xywh(r.bbox),
            score: r.score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchFlag {
    Tp,
    Fp,
    /// Matched a crowd or out-of-range ground truth, or fell outside the
    /// area range unmatched; excluded from precision and recall.
    Ignored,
}

/// Each metric is `None` when no category has a ground truth in its range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "AP")]
    pub ap: Option<f64>,
    #[serde(rename = "AP50")]
    pub ap50: Option<f64>,
    #[serde(rename = "AP75")]
    pub ap75: Option<f64>,
    #[serde(rename = "APS")]
    pub aps: Option<f64>,
    #[serde(rename = "APM")]
    pub apm: Option<f64>,
    #[serde(rename = "APL")]
    pub apl: Option<f64>,
}

/// The ten IoU thresholds 0.50, 0.55, …, 0.95.
pub fn iou_thresholds() -> [f64; 10] {
    let mut t = [0.0; 10];
    for (i, v) in t.iter_mut().enumerate() {
        *v = 0.5 + i as f64 * (0.45 / 9.0);
    }
    t[9] = 0.95;
    t
}

/// The 101 recall sample points 0, 0.01, …, 1.
pub fn recall_points() -> [f64; 101] {
    let mut r = [0.0; 101];
    for (i, v) in r.iter_mut().enumerate() {
        *v = i as f64 * 0.01;
    }
    r[100] = 1.0;
    r
}

fn outside(area: f64, range: (f64, f64)) -> bool {
    area < range.0 || area > range.1
}

fn by_score(a: &EvalDetection, b: &EvalDetection) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.image_id.cmp(&b.image_id))
        .then_with(|| {
            a.bbox
                .key()
                .partial_cmp(&b.bbox.key())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// Greedy matching within one image and category. `dets` must already be in
/// score order. Non-ignored ground truths are preferred; crowd ground truths
/// (IoU measured against the detection area) can absorb any number of
/// detections.
fn match_in_range(dets: &[EvalDetection], gts: &[GroundTruth], thresh: f64, range: (f64, f64)) -> Vec<MatchFlag> {
    let mut order: Vec<usize> = (0..gts.len()).collect();
    let ignored = |g: &GroundTruth| g.iscrowd || outside(g.area, range);
    order.sort_by_key(|&i| ignored(&gts[i]));
    let gts: Vec<&GroundTruth> = order.iter().map(|&i| &gts[i]).collect();
    let gt_ig: Vec<bool> = gts.iter().map(|g| ignored(g)).collect();
    let mut taken = vec![false; gts.len()];
    dets.iter()
        .map(|d| {
            let mut best = thresh.min(1.0 - 1e-10);
            let mut m: Option<usize> = None;
            for (g, gt) in gts.iter().enumerate() {
                if taken[g] && !gt.iscrowd {
                    continue;
                }
                if m.is_some_and(|m| !gt_ig[m]) && gt_ig[g] {
                    break;
                }
                let overlap = if gt.iscrowd {
                    let a = d.bbox.area();
                    if a > 0.0 {
                        d.bbox.intersection(&gt.bbox) / a
                    } else {
                        0.0
                    }
                } else {
                    iou(&d.bbox, &gt.bbox)
                };
                if overlap < best {
                    continue;
                }
                best = overlap;
                m = Some(g);
            }
            match m {
                Some(g) => {
                    taken[g] = true;
                    if gt_ig[g] {
                        MatchFlag::Ignored
                    } else {
                        MatchFlag::Tp
                    }
                }
                None if outside(d.bbox.area(), range) => MatchFlag::Ignored,
                None => MatchFlag::Fp,
            }
        })
        .collect()
}

/// Flags for detections of one image and category, over all areas.
/// Detections are sorted internally; flags follow that order.
pub fn match_for_eval(dets: &[EvalDetection], gts: &[GroundTruth], iou_thresh: f64) -> Vec<MatchFlag> {
    let mut dets = dets.to_vec();
    dets.sort_by(by_score);
    match_in_range(&dets, gts, iou_thresh, (0.0, f64::INFINITY))
}

/// 101-point interpolated AP of score-ordered true/false positive flags.
/// `None` when there is nothing to recall.
pub fn average_precision(tp: &[bool], num_gt: usize) -> Option<f64> {
    precision_at_recall_points(tp, num_gt).map(|q| q.iter().sum::<f64>() / q.len() as f64)
}

fn precision_at_recall_points(tp: &[bool], num_gt: usize) -> Option<[f64; 101]> {
    if num_gt == 0 {
        return None;
    }
    let (mut tps, mut fps) = (0usize, 0usize);
    let mut recall = Vec::with_capacity(tp.len());
    let mut precision = Vec::with_capacity(tp.len());
    for &t in tp {
        if t {
            tps += 1;
        } else {
            fps += 1;
        }
        recall.push(tps as f64 / num_gt as f64);
        precision.push(tps as f64 / (tps + fps) as f64);
    }
    for i in (1..precision.len()).rev() {
        precision[i - 1] = precision[i - 1].max(precision[i]);
    }
    let mut q = [0.0; 101];
    for (slot, r) in q.iter_mut().zip(recall_points()) {
        let i = recall.partition_point(|&x| x < r);
        if i < precision.len() {
            *slot = precision[i];
        }
    }
    Some(q)
}

/// Full COCO summary over every image and category that appears in either
/// input. At most [`MAX_DETS`] detections per image and category are used.
pub fn evaluate(dets: &[EvalDetection], gts: &[GroundTruth]) -> MetricsReport {
    let mut images: BTreeSet<u64> = gts.iter().map(|g| g.image_id).collect();
    images.extend(dets.iter().map(|d| d.image_id));
    let mut cats: BTreeSet<u64> = gts.iter().map(|g| g.category_id).collect();
    cats.extend(dets.iter().map(|d| d.category_id));

    let mut gt_by: BTreeMap<(u64, u64), Vec<GroundTruth>> = BTreeMap::new();
    for g in gts {
        gt_by.entry((g.image_id, g.category_id)).or_default().push(*g);
    }
    let mut det_by: BTreeMap<(u64, u64), Vec<EvalDetection>> = BTreeMap::new();
    for d in dets {
        det_by.entry((d.image_id, d.category_id)).or_default().push(*d);
    }
    for v in det_by.values_mut() {
        v.sort_by(by_score);
        v.truncate(MAX_DETS);
    }

    let thresholds = iou_thresholds();
    let all = (0.0, 1e10);
    let ranges = [all, (0.0, SMALL_AREA), (SMALL_AREA, LARGE_AREA), (LARGE_AREA, 1e10)];
    // per range, per threshold index: per-category 101-point precision rows
    let mut rows: Vec<Vec<Vec<[f64; 101]>>> = vec![vec![Vec::new(); thresholds.len()]; ranges.len()];
    let empty_g: Vec<GroundTruth> = Vec::new();
    let empty_d: Vec<EvalDetection> = Vec::new();
    for &cat in &cats {
        for (ri, &range) in ranges.iter().enumerate() {
            let num_gt: usize = images
                .iter()
                .flat_map(|&img| gt_by.get(&(img, cat)).unwrap_or(&empty_g))
                .filter(|g| !g.iscrowd && !outside(g.area, range))
                .count();
            if num_gt == 0 {
                continue;
            }
            for (ti, &t) in thresholds.iter().enumerate() {
                let mut scored: Vec<(EvalDetection, MatchFlag)> = Vec::new();
                for &img in &images {
                    let d = det_by.get(&(img, cat)).unwrap_or(&empty_d);
                    let g = gt_by.get(&(img, cat)).unwrap_or(&empty_g);
                    scored.extend(d.iter().copied().zip(match_in_range(d, g, t, range)));
                }
                scored.sort_by(|a, b| by_score(&a.0, &b.0));
                let tp: Vec<bool> = scored
                    .iter()
                    .filter(|(_, f)| *f != MatchFlag::Ignored)
                    .map(|(_, f)| *f == MatchFlag::Tp)
                    .collect();
                if let Some(q) = precision_at_recall_points(&tp, num_gt) {
                    rows[ri][ti].push(q);
                }
            }
        }
    }

    let mean = |sel: &[&Vec<[f64; 101]>]| -> Option<f64> {
        let n: usize = sel.iter().map(|v| v.len() * 101).sum();
        (n > 0).then(|| sel.iter().flat_map(|v| v.iter().flatten()).sum::<f64>() / n as f64)
    };
    let over_thresholds = |ri: usize| mean(&rows[ri].iter().collect::<Vec<_>>());
    let at = |ti: usize| mean(&[&rows[0][ti]]);
    MetricsReport {
        ap: over_thresholds(0),
        ap50: at(0),
        ap75: at(5),
        aps: over_thresholds(1),
        apm: over_thresholds(2),
        apl: over_thresholds(3),
    }
}

/// Evaluates COCO results against a dataset, rejecting detections on images
/// the dataset does not list.
pub fn evaluate_dataset(dataset: &CocoDataset, results: &[CocoResult]) -> Result<MetricsReport> {
    let known: BTreeSet<u64> = dataset.images.iter().map(|i| i.id).collect();
    if let Some(r) = results.iter().find(|r| !known.contains(&r.image_id)) {
        return Err(Error::invalid(format!("result for unknown image {}", r.image_id)));
    }
    let dets: Vec<EvalDetection> = results.iter().map(EvalDetection::from).collect();
    let mut gts = dataset.ground_truths();
    // images without annotations still count as places to make false positives
    gts.retain(|g| known.contains(&g.image_id));
    Ok(evaluate(&dets, &gts))
}
