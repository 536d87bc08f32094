use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Sample, MEAN, STD};
use crate::geometry::iou;
use crate::{BBox, Error, Result, TensorF32};

/// Minimum-IoU menu for random crops; `None` accepts any window that keeps a box.
pub const CROP_MIN_IOUS: [Option<f64>; 6] = [Some(0.1), Some(0.3), Some(0.5), Some(0.7), Some(0.9), None];
pub const CROP_TRIES: usize = 50;

/// Explicit color perturbation. The identity is `(0, 1, 1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorParams {
    /// Added to every channel.
    pub brightness: f32,
    /// Multiplies every channel.
    pub contrast: f32,
    /// Scales chroma around the luma.
    pub saturation: f32,
    /// Rotation of the chroma plane, in degrees.
    pub hue_deg: f32,
}

impl ColorParams {
    pub const IDENTITY: ColorParams = ColorParams {
        brightness: 0.0,
        contrast: 1.0,
        saturation: 1.0,
        hue_deg: 0.0,
    };

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            brightness: rng.random_range(-0.125..=0.125),
            contrast: rng.random_range(0.5..=1.5),
            saturation: rng.random_range(0.5..=1.5),
            hue_deg: rng.random_range(-18.0..=18.0),
        }
    }
}

fn rgb_planes(s: &Sample, op: &str) -> Result<usize> {
    let (c, h, w) = s.chw()?;
    if c != 3 {
        return Err(Error::shape(op, format!("needs 3 channels, got {c}")));
    }
    Ok(h * w)
}

/// Applies brightness, contrast, saturation and hue in that order, clamping
/// to [0, 1] after each. Neutral parameters are skipped, so
/// [`ColorParams::IDENTITY`] returns the image bit for bit.
pub fn color_distort_with(s: &Sample, p: &ColorParams) -> Result<Sample> {
    let hw = rgb_planes(s, "color_distort")?;
    let mut out = s.clone();
    let d = out.image.data_mut();
    if p.brightness != 0.0 {
        d.iter_mut().for_each(|v| *v = (*v + p.brightness).clamp(0.0, 1.0));
    }
    if p.contrast != 1.0 {
        d.iter_mut().for_each(|v| *v = (*v * p.contrast).clamp(0.0, 1.0));
    }
    let (r, rest) = d.split_at_mut(hw);
    let (g, b) = rest.split_at_mut(hw);
    if p.saturation != 1.0 {
        for i in 0..hw {
            let y = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
            for c in [&mut r[i], &mut g[i], &mut b[i]] {
                *c = (y + p.saturation * (*c - y)).clamp(0.0, 1.0);
            }
        }
    }
    if p.hue_deg != 0.0 {
        let (sin, cos) = (p.hue_deg as f64).to_radians().sin_cos();
        for i in 0..hw {
            let (rr, gg, bb) = (r[i] as f64, g[i] as f64, b[i] as f64);
            let y = 0.299 * rr + 0.587 * gg + 0.114 * bb;
            let ci = 0.596 * rr - 0.274 * gg - 0.322 * bb;
            let cq = 0.211 * rr - 0.523 * gg + 0.312 * bb;
            let (ci, cq) = (ci * cos - cq * sin, ci * sin + cq * cos);
            r[i] = (y + 0.956 * ci + 0.621 * cq).clamp(0.0, 1.0) as f32;
            g[i] = (y - 0.272 * ci - 0.647 * cq).clamp(0.0, 1.0) as f32;
            b[i] = (y - 1.106 * ci + 1.703 * cq).clamp(0.0, 1.0) as f32;
        }
    }
    Ok(out)
}

pub fn random_color_distort<R: Rng + ?Sized>(s: &Sample, rng: &mut R, p: f64) -> Result<(Sample, bool)> {
    if rng.random::<f64>() >= p {
        return Ok((s.clone(), false));
    }
    let params = ColorParams::sample(rng);
    Ok((color_distort_with(s, &params)?, true))
}

/// Places the image at `(ox, oy)` on a canvas `round(ratio·size)` per side
/// filled with the channel means.
pub fn expand_with(s: &Sample, ratio: f64, ox: usize, oy: usize) -> Result<Sample> {
    let (c, h, w) = s.chw()?;
    if !(ratio >= 1.0) {
        return Err(Error::invalid(format!("expand ratio {ratio} below 1")));
    }
    let (nh, nw) = ((h as f64 * ratio).round() as usize, (w as f64 * ratio).round() as usize);
    if ox + w > nw || oy + h > nh {
        return Err(Error::invalid(format!(
            "offset ({ox}, {oy}) leaves the {nw}×{nh} canvas"
        )));
    }
    let mut data = Vec::with_capacity(c * nh * nw);
    for ch in 0..c {
        let fill = MEAN.get(ch).copied().unwrap_or(0.0);
        let src = &s.image.data()[ch * h * w..(ch + 1) * h * w];
        for y in 0..nh {
            for x in 0..nw {
                let inside = (oy..oy + h).contains(&y) && (ox..ox + w).contains(&x);
                data.push(if inside { src[(y - oy) * w + x - ox] } else { fill });
            }
        }
    }
    Ok(Sample {
        image: TensorF32::new(vec![c, nh, nw], data)?,
        boxes: s.boxes.iter().map(|b| b.translate(ox as f64, oy as f64)).collect(),
        ..s.clone()
    })
}

pub fn random_expand<R: Rng + ?Sized>(s: &Sample, rng: &mut R, p: f64, max_ratio: f64) -> Result<(Sample, bool)> {
    if rng.random::<f64>() >= p {
        return Ok((s.clone(), false));
    }
    let (_, h, w) = s.chw()?;
    let ratio = if max_ratio > 1.0 {
        rng.random_range(1.0..=max_ratio)
    } else {
        1.0
    };
    let (nh, nw) = ((h as f64 * ratio).round() as usize, (w as f64 * ratio).round() as usize);
    let ox = rng.random_range(0..=nw - w);
    let oy = rng.random_range(0..=nh - h);
    Ok((expand_with(s, ratio, ox, oy)?, true))
}

/// Crops to the pixel window `(x0, y0, width, height)`. Boxes whose centers
/// fall outside are dropped along with their labels and weights; the rest are
/// clipped to the window.
pub fn crop_with(s: &Sample, window: (usize, usize, usize, usize)) -> Result<Sample> {
    let (c, h, w) = s.chw()?;
    let (x0, y0, cw, ch) = window;
    if cw == 0 || ch == 0 || x0 + cw > w || y0 + ch > h {
        return Err(Error::invalid(format!("crop window {window:?} outside {w}×{h}")));
    }
    let mut data = Vec::with_capacity(c * cw * ch);
    for plane in s.image.data().chunks(h * w) {
        for y in y0..y0 + ch {
            data.extend_from_slice(&plane[y * w + x0..y * w + x0 + cw]);
        }
    }
    let win = BBox::new(x0 as f64, y0 as f64, (x0 + cw) as f64, (y0 + ch) as f64);
    let mut out = Sample {
        image: TensorF32::new(vec![c, ch, cw], data)?,
        boxes: Vec::new(),
        labels: Vec::new(),
        weights: Vec::new(),
    };
    for i in 0..s.boxes.len() {
        let (cx, cy) = s.boxes[i].center();
        if cx >= win.x1 && cx < win.x2 && cy >= win.y1 && cy < win.y2 {
            let b = s.boxes[i].translate(-win.x1, -win.y1).clip(cw as f64, ch as f64);
            out.boxes.push(b);
            out.labels.push(s.labels[i]);
            out.weights.push(s.weights[i]);
        }
    }
    Ok(out)
}

/// SSD-style crop: pick a minimum-IoU constraint, then try up to
/// [`CROP_TRIES`] windows (scale 0.3–1, aspect 0.5–2) until one overlaps some
/// box enough and keeps at least one box center. Falls back to the input.
pub fn random_crop<R: Rng + ?Sized>(s: &Sample, rng: &mut R, p: f64) -> Result<(Sample, bool)> {
    if rng.random::<f64>() >= p {
        return Ok((s.clone(), false));
    }
    let (_, h, w) = s.chw()?;
    let min_iou = CROP_MIN_IOUS[rng.random_range(0..CROP_MIN_IOUS.len())];
    for _ in 0..CROP_TRIES {
        let scale: f64 = rng.random_range(0.3..=1.0);
        let aspect: f64 = rng.random_range(0.5..=2.0);
        let cw = ((w as f64 * scale * aspect.sqrt()).round() as usize).clamp(1, w);
        let ch = ((h as f64 * scale / aspect.sqrt()).round() as usize).clamp(1, h);
        let x0 = rng.random_range(0..=w - cw);
        let y0 = rng.random_range(0..=h - ch);
        if s.boxes.is_empty() {
            continue;
        }
        let win = BBox::new(x0 as f64, y0 as f64, (x0 + cw) as f64, (y0 + ch) as f64);
        if let Some(t) = min_iou {
            if s.boxes.iter().map(|b| iou(b, &win)).fold(0.0, f64::max) < t {
                continue;
            }
        }
        let out = crop_with(s, (x0, y0, cw, ch))?;
        if !out.boxes.is_empty() {
            return Ok((out, true));
        }
    }
    Ok((s.clone(), true))
}

/// Horizontal mirror.
pub fn flip(s: &Sample) -> Result<Sample> {
    let (_, _, w) = s.chw()?;
    let mut out = s.clone();
    for row in out.image.data_mut().chunks_mut(w) {
        row.reverse();
    }
    let wf = w as f64;
    out.boxes = s
        .boxes
        .iter()
        .map(|b| BBox::new(wf - b.x2, b.y1, wf - b.x1, b.y2))
        .collect();
    Ok(out)
}

pub fn random_flip<R: Rng + ?Sized>(s: &Sample, rng: &mut R, p: f64) -> Result<(Sample, bool)> {
    if rng.random::<f64>() >= p {
        return Ok((s.clone(), false));
    }
    Ok((flip(s)?, true))
}

fn per_channel(s: &Sample, op: &str, f: impl Fn(f32, usize) -> f32) -> Result<Sample> {
    let hw = rgb_planes(s, op)?;
    let mut out = s.clone();
    for (i, v) in out.image.data_mut().iter_mut().enumerate() {
        *v = f(*v, i / hw);
    }
    Ok(out)
}

/// `(x − mean) / std` per RGB channel.
pub fn normalize(s: &Sample) -> Result<Sample> {
    per_channel(s, "normalize", |v, c| (v - MEAN[c]) / STD[c])
}

pub fn denormalize(s: &Sample) -> Result<Sample> {
    per_channel(s, "denormalize", |v, c| v * STD[c] + MEAN[c])
}

/// Bilinear resize with half-pixel centers; boxes scale with the image.
pub fn resize(s: &Sample, out_h: usize, out_w: usize) -> Result<Sample> {
    let (c, h, w) = s.chw()?;
    if out_h == 0 || out_w == 0 {
        return Err(Error::invalid("resize target must be non-empty"));
    }
    let (sy, sx) = (h as f64 / out_h as f64, w as f64 / out_w as f64);
    let axis = |o: usize, scale: f64, len: usize| {
        let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
        let i0 = (src.floor() as usize).min(len - 1);
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, src - i0 as f64)
    };
    let mut data = Vec::with_capacity(c * out_h * out_w);
    for plane in s.image.data().chunks(h * w) {
        for oy in 0..out_h {
            let (y0, y1, fy) = axis(oy, sy, h);
            for ox in 0..out_w {
                let (x0, x1, fx) = axis(ox, sx, w);
                let px = |y: usize, x: usize| plane[y * w + x] as f64;
                let top = px(y0, x0) * (1.0 - fx) + px(y0, x1) * fx;
                let bot = px(y1, x0) * (1.0 - fx) + px(y1, x1) * fx;
                data.push((top * (1.0 - fy) + bot * fy) as f32);
            }
        }
    }
    let (kx, ky) = (out_w as f64 / w as f64, out_h as f64 / h as f64);
    Ok(Sample {
        image: TensorF32::new(vec![c, out_h, out_w], data)?,
        boxes: s
            .boxes
            .iter()
            .map(|b| b.scale(kx, ky).clip(out_w as f64, out_h as f64))
            .collect(),
        ..s.clone()
    })
}
