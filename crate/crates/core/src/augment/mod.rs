//! Seeded preprocessing: mixup, color distortion, expand, crop, flip,
//! normalization and multi-scale resize, applied in that order.

mod ops;
mod ppm;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::{BBox, Error, Result, TensorF32};

pub use ops::{
    color_distort_with, crop_with, denormalize, expand_with, flip, normalize, random_color_distort, random_crop,
    random_expand, random_flip, resize, ColorParams, CROP_MIN_IOUS, CROP_TRIES,
};
pub use ppm::{read_ppm, write_ppm};

/// Per-channel RGB statistics used for normalization and the expand fill.
pub const MEAN: [f32; 3] = [0.485, 0.456, 0.406];
pub const STD: [f32; 3] = [0.229, 0.224, 0.225];

pub const MIXUP_ALPHA: f64 = 1.5;
pub const MIXUP_BETA: f64 = 1.5;

/// An image (`[C, H, W]`, values in [0, 1] before normalization) with its
/// boxes, labels and per-box mixup weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: TensorF32,
    pub boxes: Vec<BBox>,
    pub labels: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Sample {
    pub fn new(image: TensorF32, boxes: Vec<BBox>, labels: Vec<usize>) -> Result<Self> {
        let weights = vec![1.0; boxes.len()];
        let s = Self {
            image,
            boxes,
            labels,
            weights,
        };
        s.validate()?;
        Ok(s)
    }

    /// `(channels, height, width)`.
    pub fn chw(&self) -> Result<(usize, usize, usize)> {
        match *self.image.dims() {
            [c, h, w] => Ok((c, h, w)),
            ref d => Err(Error::shape("sample", format!("image must be CHW, got {d:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (_, h, w) = self.chw()?;
        if self.labels.len() != self.boxes.len() || self.weights.len() != self.boxes.len() {
            return Err(Error::invalid("boxes, labels and weights must align"));
        }
        let eps = 1e-6;
        for b in &self.boxes {
            if !b.is_valid() || b.x1 < -eps || b.y1 < -eps || b.x2 > w as f64 + eps || b.y2 > h as f64 + eps {
                return Err(Error::invalid(format!("box {b:?} outside {w}×{h} image")));
            }
        }
        if self.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::invalid("box weights must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Multi-scale input sizes: multiples of 32, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SizeList(Vec<usize>);

impl SizeList {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::invalid("size list is empty"));
        }
        if let Some(s) = sizes.iter().find(|&&s| s == 0 || s % 32 != 0) {
            return Err(Error::invalid(format!("size {s} is not a positive multiple of 32")));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sizes must be strictly increasing"));
        }
        Ok(Self(sizes))
    }

    /// 320 through `max` in steps of 32.
    pub fn up_to(max: usize) -> Result<Self> {
        Self::new((320..=max).step_by(32).collect())
    }

    /// The ten sizes 320..=608.
    pub fn standard() -> Self {
        Self::up_to(608).expect("static list")
    }

    /// The fifteen sizes 320..=768.
    pub fn large() -> Self {
        Self::up_to(768).expect("static list")
    }

    pub fn sizes(&self) -> &[usize] {
        &self.0
    }
}

impl TryFrom<Vec<usize>> for SizeList {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SizeList> for Vec<usize> {
    fn from(s: SizeList) -> Self {
        s.0
    }
}

pub fn sample_input_size<R: Rng + ?Sized>(rng: &mut R, list: &SizeList) -> usize {
    list.0[rng.random_range(0..list.0.len())]
}

pub fn sample_mixup_lambda<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Beta::new(MIXUP_ALPHA, MIXUP_BETA).expect("valid shape").sample(rng)
}

/// `λ·a + (1−λ)·b` with both box sets kept; a's weights scale by λ, b's by 1−λ.
pub fn mixup_with_lambda(a: &Sample, b: &Sample, lambda: f64) -> Result<Sample> {
    if a.image.dims() != b.image.dims() {
        return Err(Error::shape(
            "mixup",
            format!("{:?} vs {:?}", a.image.dims(), b.image.dims()),
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("mixup weight {lambda} outside [0, 1]")));
    }
    let (la, lb) = (lambda as f32, (1.0 - lambda) as f32);
    let data = a
        .image
        .data()
        .iter()
        .zip(b.image.data())
        .map(|(&x, &y)| la * x + lb * y)
        .collect();
    Ok(Sample {
        image: TensorF32::new(a.image.dims().to_vec(), data)?,
        boxes: a.boxes.iter().chain(&b.boxes).copied().collect(),
        labels: a.labels.iter().chain(&b.labels).copied().collect(),
        weights: a
            .weights
            .iter()
            .map(|w| w * lambda)
            .chain(b.weights.iter().map(|w| w * (1.0 - lambda)))
            .collect(),
    })
}

pub fn mixup<R: Rng + ?Sized>(a: &Sample, b: &Sample, rng: &mut R) -> Result<Sample> {
    mixup_with_lambda(a, b, sample_mixup_lambda(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Trigger probability of each of color, expand, crop and flip.
    pub p: f64,
    pub sizes: SizeList,
    pub max_expand_ratio: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            p: 0.5,
            sizes: SizeList::standard(),
            max_expand_ratio: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub sample: Sample,
    /// Names of the stages that fired, in order.
    pub applied_ops: Vec<String>,
    pub input_size: usize,
}

/// mixup (when a partner is given) → color → expand → crop → flip →
/// normalize → resize to a size drawn from the list.
pub fn run_pipeline<R: Rng + ?Sized>(
    cfg: &PipelineConfig,
    a: &Sample,
    partner: Option<&Sample>,
    rng: &mut R,
) -> Result<PipelineOutput> {
    a.validate()?;
    let mut ops = Vec::new();
    let mut s = match partner {
        Some(b) => {
            ops.push("mixup".to_string());
            mixup(a, b, rng)?
        }
        None => a.clone(),
    };
    let stages: [(&str, fn(&Sample, &mut R, f64, f64) -> Result<(Sample, bool)>); 4] = [
        ("color_distort", |s, r, p, _| random_color_distort(s, r, p)),
        ("expand", |s, r, p, m| random_expand(s, r, p, m)),
        ("crop", |s, r, p, _| random_crop(s, r, p)),
        ("flip", |s, r, p, _| random_flip(s, r, p)),
    ];
    for (name, stage) in stages {
        let (next, fired) = stage(&s, rng, cfg.p, cfg.max_expand_ratio)?;
        debug_assert!(next.validate().is_ok(), "{name} broke sample invariants");
        if fired {
            ops.push(name.to_string());
        }
        s = next;
    }
    s = normalize(&s)?;
    let size = sample_input_size(rng, &cfg.sizes);
    s = resize(&s, size, size)?;
    Ok(PipelineOutput {
        sample: s,
        applied_ops: ops,
        input_size: size,
    })
}
