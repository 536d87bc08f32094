use rayon::prelude::*;

use crate::{Error, Result, TensorF32};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dArgs {
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
}

impl Default for Conv2dArgs {
    fn default() -> Self {
        Self {
            stride: 1,
            pad: 0,
            groups: 1,
        }
    }
}

/// Direct convolution. `input` is NCHW, `weight` is `[out, in/groups, kh, kw]`,
/// `bias` has `out` entries.
pub fn conv2d_naive(
    input: &TensorF32,
    weight: &TensorF32,
    bias: Option<&TensorF32>,
    args: Conv2dArgs,
) -> Result<TensorF32> {
    let [n, c, h, w] = input.nchw()?;
    let [oc, icg, kh, kw] = weight.nchw()?;
    let Conv2dArgs { stride, pad, groups } = args;
    if groups == 0 || stride == 0 || c % groups != 0 || oc % groups != 0 || icg != c / groups {
        return Err(Error::shape(
            "conv2d",
            format!(
                "input {:?} incompatible with weight {:?} and groups {groups}",
                input.dims(),
                weight.dims()
            ),
        ));
    }
    if let Some(b) = bias {
        if b.len() != oc {
            return Err(Error::shape(
                "conv2d",
                format!("bias has {} entries for {oc} outputs", b.len()),
            ));
        }
    }
    let oh = (h + 2 * pad)
        .checked_sub(kh)
        .map(|v| v / stride + 1)
        .ok_or_else(|| Error::shape("conv2d", "kernel taller than padded input"))?;
    let ow = (w + 2 * pad)
        .checked_sub(kw)
        .map(|v| v / stride + 1)
        .ok_or_else(|| Error::shape("conv2d", "kernel wider than padded input"))?;

    let x = input.data();
    let wt = weight.data();
    let oc_per_group = oc / groups;
    let mut out = vec![0f32; n * oc * oh * ow];
    out.par_chunks_mut(oh * ow).enumerate().for_each(|(plane, dst)| {
        let (b, o) = (plane / oc, plane % oc);
        let g = o / oc_per_group;
        let b0 = bias.map_or(0.0, |t| t.data()[o] as f64);
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b0;
                for ci in 0..icg {
                    let in_c = g * icg + ci;
                    let x_plane = &x[(b * c + in_c) * h * w..][..h * w];
                    let w_plane = &wt[(o * icg + ci) * kh * kw..][..kh * kw];
                    for ky in 0..kh {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += x_plane[iy as usize * w + ix as usize] as f64 * w_plane[ky * kw + kx] as f64;
                        }
                    }
                }
                dst[oy * ow + ox] = acc as f32;
            }
        }
    });
    TensorF32::new(vec![n, oc, oh, ow], out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel() {
        let x = TensorF32::from_fn(&[1, 1, 4, 5], |i| i as f32 * 0.5 - 3.0);
        let w = TensorF32::full(&[1, 1, 1, 1], 1.0);
        assert_eq!(conv2d_naive(&x, &w, None, Conv2dArgs::default()).unwrap(), x);
    }

    #[test]
    fn window_counting() {
        let x = TensorF32::full(&[1, 1, 3, 3], 1.0);
        let w = TensorF32::full(&[1, 1, 3, 3], 1.0);
        let y = conv2d_naive(
            &x,
            &w,
            None,
            Conv2dArgs {
                pad: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(y.data(), &[4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
    }

    #[test]
    fn depthwise_keeps_channels_separate() {
        let x = TensorF32::new(vec![1, 2, 1, 1], vec![2.0, 3.0]).unwrap();
        let w = TensorF32::new(vec![2, 1, 1, 1], vec![10.0, 100.0]).unwrap();
        let y = conv2d_naive(
            &x,
            &w,
            None,
            Conv2dArgs {
                groups: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(y.data(), &[20.0, 300.0]);
    }

    #[test]
    fn bias_and_stride() {
        let x = TensorF32::full(&[1, 1, 4, 4], 1.0);
        let w = TensorF32::full(&[1, 1, 2, 2], 1.0);
        let b = TensorF32::full(&[1], 0.5);
        let y = conv2d_naive(
            &x,
            &w,
            Some(&b),
            Conv2dArgs {
                stride: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(y.dims(), &[1, 1, 2, 2]);
        assert!(y.data().iter().all(|&v| v == 4.5));
    }

    #[test]
    fn rejects_mismatched_weight() {
        let x = TensorF32::zeros(&[1, 3, 4, 4]);
        let w = TensorF32::zeros(&[2, 2, 3, 3]);
        assert!(matches!(
            conv2d_naive(&x, &w, None, Conv2dArgs::default()),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
