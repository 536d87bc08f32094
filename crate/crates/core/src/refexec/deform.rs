use rayon::prelude::*;

use crate::{Error, Result, TensorF32};

/// Bilinear read of an `h × w` plane at fractional `(y, x)`. Corners outside
/// the plane read as zero; a point more than one pixel outside reads zero.
pub fn bilinear_sample(plane: &[f32], h: usize, w: usize, y: f64, x: f64) -> f64 {
    if y <= -1.0 || y >= h as f64 || x <= -1.0 || x >= w as f64 {
        return 0.0;
    }
    let y0 = y.floor();
    let x0 = x.floor();
    let (ly, lx) = (y - y0, x - x0);
    let (y0, x0) = (y0 as isize, x0 as isize);
    let at = |yy: isize, xx: isize| -> f64 {
        if yy < 0 || xx < 0 || yy >= h as isize || xx >= w as isize {
            0.0
        } else {
            plane[yy as usize * w + xx as usize] as f64
        }
    };
    let mut v = 0.0;
    for (yy, wy) in [(y0, 1.0 - ly), (y0 + 1, ly)] {
        if wy == 0.0 {
            continue;
        }
        for (xx, wx) in [(x0, 1.0 - lx), (x0 + 1, lx)] {
            if wx == 0.0 {
                continue;
            }
            v += wy * wx * at(yy, xx);
        }
    }
    v
}

/// Deformable convolution. `offsets` is `[n, 2·kh·kw, oh, ow]`; for kernel tap
/// `t = ky·kw + kx`, channel `2t` holds the vertical offset and `2t + 1` the
/// horizontal one.
pub fn deform_conv2d_naive(
    input: &TensorF32,
    weight: &TensorF32,
    offsets: &TensorF32,
    bias: Option<&TensorF32>,
    stride: usize,
    pad: usize,
) -> Result<TensorF32> {
    let [n, c, h, w] = input.nchw()?;
    let [oc, ic, kh, kw] = weight.nchw()?;
    if ic != c || stride == 0 {
        return Err(Error::shape(
            "deform_conv2d",
            format!("input {:?} incompatible with weight {:?}", input.dims(), weight.dims()),
        ));
    }
    let oh = (h + 2 * pad)
        .checked_sub(kh)
        .map(|v| v / stride + 1)
        .ok_or_else(|| Error::shape("deform_conv2d", "kernel larger than padded input"))?;
    let ow = (w + 2 * pad)
        .checked_sub(kw)
        .map(|v| v / stride + 1)
        .ok_or_else(|| Error::shape("deform_conv2d", "kernel larger than padded input"))?;
    let expected = [n, 2 * kh * kw, oh, ow];
    if offsets.dims() != expected {
        return Err(Error::shape(
            "deform_conv2d",
            format!("offsets must be {expected:?}, got {:?}", offsets.dims()),
        ));
    }
    if let Some(b) = bias {
        if b.len() != oc {
            return Err(Error::shape(
                "deform_conv2d",
                format!("bias has {} entries for {oc} outputs", b.len()),
            ));
        }
    }

    // Sample columns once per image: [c, kh·kw, oh·ow].
    let taps = kh * kw;
    let x = input.data();
    let off = offsets.data();
    let mut columns = vec![0f64; n * c * taps * oh * ow];
    columns
        .par_chunks_mut(taps * oh * ow)
        .enumerate()
        .for_each(|(bc, dst)| {
            let (b, ci) = (bc / c, bc % c);
            let plane = &x[(b * c + ci) * h * w..][..h * w];
            for t in 0..taps {
                let (ky, kx) = (t / kw, t % kw);
                let dy_plane = &off[(b * 2 * taps + 2 * t) * oh * ow..][..oh * ow];
                let dx_plane = &off[(b * 2 * taps + 2 * t + 1) * oh * ow..][..oh * ow];
                for oy in 0..oh {
                    for ox in 0..ow {
                        let p = oy * ow + ox;
                        let y = (oy * stride + ky) as f64 - pad as f64 + dy_plane[p] as f64;
                        let xx = (ox * stride + kx) as f64 - pad as f64 + dx_plane[p] as f64;
                        dst[t * oh * ow + p] = bilinear_sample(plane, h, w, y, xx);
                    }
                }
            }
        });

    let wt = weight.data();
    let mut out = vec![0f32; n * oc * oh * ow];
    out.par_chunks_mut(oh * ow).enumerate().for_each(|(plane, dst)| {
        let (b, o) = (plane / oc, plane % oc);
        let b0 = bias.map_or(0.0, |t| t.data()[o] as f64);
        for (p, slot) in dst.iter_mut().enumerate() {
            let mut acc = b0;
            for ci in 0..c {
                let col = &columns[((b * c + ci) * taps) * oh * ow..];
                let wrow = &wt[(o * c + ci) * taps..][..taps];
                for (t, &wv) in wrow.iter().enumerate() {
                    acc += col[t * oh * ow + p] * wv as f64;
                }
            }
            *slot = acc as f32;
        }
    });
    TensorF32::new(vec![n, oc, oh, ow], out)
}
