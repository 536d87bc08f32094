//! Anchor priors and the per-anchor channel layout shared by the loss and the
//! decoder.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, TensorF32};

/// Anchor sizes (width, height) in input pixels, grouped by level from the
/// finest stride up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub strides: Vec<usize>,
    pub levels: Vec<Vec<(f64, f64)>>,
}

impl AnchorSet {
    /// The nine COCO anchors of YOLOv3, three per level at strides 8, 16, 32.
    pub fn yolov3() -> Self {
        Self {
            strides: vec![8, 16, 32],
            levels: vec![
                vec![(10.0, 13.0), (16.0, 30.0), (33.0, 23.0)],
                vec![(30.0, 61.0), (62.0, 45.0), (59.0, 119.0)],
                vec![(116.0, 90.0), (156.0, 198.0), (373.0, 326.0)],
            ],
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// `(level, anchor_index, (w, h))` in level-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, (f64, f64))> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(l, a)| a.iter().enumerate().map(move |(k, &wh)| (l, k, wh)))
    }

    /// Grid extent of each level for a square input.
    pub fn grid_sizes(&self, input_size: usize) -> Result<Vec<usize>> {
        let coarsest = self.strides.iter().copied().max().unwrap_or(1);
        if input_size == 0 || input_size % coarsest != 0 {
            return Err(Error::invalid(format!(
                "input size {input_size} is not a positive multiple of {coarsest}"
            )));
        }
        Ok(self.strides.iter().map(|s| input_size / s).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.strides.len() != self.levels.len() || self.levels.is_empty() {
            return Err(Error::invalid("anchor set needs one stride per level"));
        }
        if self.iter().any(|(_, _, (w, h))| !(w > 0.0 && h > 0.0)) {
            return Err(Error::invalid("anchor sizes must be positive"));
        }
        Ok(())
    }
}

impl Default for AnchorSet {
    fn default() -> Self {
        Self::yolov3()
    }
}

/// Channel layout of one head level: for anchor `a`, channels
/// `a·V .. (a+1)·V` hold `[tx, ty, tw, th, obj, cls_0 .. cls_{C-1}, iou?]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadLayout {
    pub num_classes: usize,
    pub anchors_per_level: usize,
    pub iou_aware: bool,
}

impl HeadLayout {
    pub fn values_per_anchor(&self) -> usize {
        5 + self.num_classes + usize::from(self.iou_aware)
    }

    pub fn channels(&self) -> usize {
        self.anchors_per_level * self.values_per_anchor()
    }

    pub fn obj_channel(&self, anchor: usize) -> usize {
        anchor * self.values_per_anchor() + 4
    }

    pub fn cls_channel(&self, anchor: usize, class: usize) -> usize {
        anchor * self.values_per_anchor() + 5 + class
    }

    pub fn iou_channel(&self, anchor: usize) -> Option<usize> {
        self.iou_aware
            .then(|| anchor * self.values_per_anchor() + 5 + self.num_classes)
    }

    /// Checks a head tensor against this layout and returns its grid `(h, w)`.
    pub fn check(&self, head: &TensorF32) -> Result<(usize, usize)> {
        let [n, c, h, w] = head.nchw()?;
        if n != 1 || c != self.channels() {
            return Err(Error::shape(
                "head",
                format!("expected 1×{}×H×W, got {:?}", self.channels(), head.dims()),
            ));
        }
        Ok((h, w))
    }
}

/// Raw values of one `(anchor, cell)` prediction.
pub(crate) fn cell_values(head: &TensorF32, layout: &HeadLayout, anchor: usize, gy: usize, gx: usize) -> Vec<f64> {
    let (h, w) = (head.dims()[2], head.dims()[3]);
    let v = layout.values_per_anchor();
    (0..v)
        .map(|j| head.data()[((anchor * v + j) * h + gy) * w + gx] as f64)
        .collect()
}

/// YOLOv3 box decoding for one prediction: center `(σ(t) + cell)·stride`,
/// size `anchor·exp(t)`. Unclipped.
pub fn decode_box(t: [f64; 4], gx: usize, gy: usize, stride: f64, anchor: (f64, f64)) -> crate::BBox {
    let s = crate::refexec::sigmoid;
    crate::BBox::from_center(
        (s(t[0]) + gx as f64) * stride,
        (s(t[1]) + gy as f64) * stride,
        anchor.0 * t[2].exp(),
        anchor.1 * t[3].exp(),
    )
}
