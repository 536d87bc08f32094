use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::postprocess::CocoResult;
use crate::{BBox, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    #[serde(default)]
    pub width: u32,
    #[serde(default)]
    pub height: u32,
    #[serde(default)]
    pub file_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    #[serde(default)]
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// `[x, y, width, height]`.
    pub bbox: [f64; 4],
    #[serde(default)]
    pub area: Option<f64>,
    #[serde(default)]
    pub iscrowd: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u64,
    #[serde(default)]
    pub name: String,
}

/// The subset of a COCO annotation file that box evaluation needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CocoDataset {
    #[serde(default)]
    pub images: Vec<CocoImage>,
    #[serde(default)]
    pub annotations: Vec<CocoAnnotation>,
    #[serde(default)]
    pub categories: Vec<CocoCategory>,
}

impl CocoDataset {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Ground truths with areas recomputed from the boxes; any segmentation
    /// `area` in the file is ignored.
    pub fn ground_truths(&self) -> Vec<GroundTruth> {
        self.annotations
            .iter()
            .map(|a| GroundTruth::new(a.image_id, a.category_id, BBox::from_xywh(a.bbox), a.iscrowd != 0))
            .collect()
    }

    pub fn annotations_for(&self, image_id: u64) -> impl Iterator<Item = &CocoAnnotation> {
        self.annotations.iter().filter(move |a| a.image_id == image_id)
    }
}

/// Accepts either a JSON array of results or one JSON object per line.
pub fn parse_results(text: &str) -> Result<Vec<CocoResult>> {
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(text)?);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
