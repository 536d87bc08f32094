use rand::Rng;

use crate::{Error, Result, TensorF32};

/// Seed rate so that, before overlaps, `1 - keep_prob` of the map is covered.
fn seed_rate(h: usize, w: usize, block_size: usize, keep_prob: f64) -> f64 {
    let valid = ((h - block_size + 1) * (w - block_size + 1)) as f64;
    ((1.0 - keep_prob) / (block_size * block_size) as f64 * (h * w) as f64 / valid).min(1.0)
}

/// Binary DropBlock mask of `dims` (NCHW). Block centers are only seeded where
/// the whole `block_size × block_size` square fits inside the map, so every
/// zero belongs to a fully zero square.
pub fn dropblock_mask<R: Rng + ?Sized>(
    rng: &mut R,
    dims: &[usize],
    block_size: usize,
    keep_prob: f64,
) -> Result<TensorF32> {
    let &[n, c, h, w] = dims else {
        return Err(Error::invalid(format!("DropBlock needs NCHW dims, got {dims:?}")));
    };
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::invalid(format!("keep_prob {keep_prob} outside (0, 1]")));
    }
    if block_size == 0 || block_size % 2 == 0 || block_size > h.min(w) {
        return Err(Error::invalid(format!(
            "block_size {block_size} must be odd and at most {}",
            h.min(w)
        )));
    }
    let mut mask = TensorF32::full(dims, 1.0);
    if keep_prob == 1.0 {
        return Ok(mask);
    }
    let gamma = seed_rate(h, w, block_size, keep_prob);
    let data = mask.data_mut();
    for plane in data.chunks_mut(h * w).take(n * c) {
        for y in 0..=h - block_size {
            for x in 0..=w - block_size {
                if rng.random::<f64>() < gamma {
                    for row in &mut plane[y * w..(y + block_size) * w].chunks_mut(w) {
                        row[x..x + block_size].fill(0.0);
                    }
                }
            }
        }
    }
    Ok(mask)
}

/// Train-mode DropBlock: zeroes blocks and rescales survivors by
/// `mask_area / ones`. Blocks larger than the map shrink to the largest odd
/// size that fits.
pub fn apply_dropblock<R: Rng + ?Sized>(
    rng: &mut R,
    x: &TensorF32,
    block_size: usize,
    keep_prob: f64,
) -> Result<TensorF32> {
    let [_, _, h, w] = x.nchw()?;
    let limit = h.min(w);
    let block = if block_size <= limit {
        block_size
    } else if limit % 2 == 1 {
        limit
    } else {
        limit - 1
    };
    let mask = dropblock_mask(rng, x.dims(), block, keep_prob)?;
    let ones: f64 = mask.data().iter().map(|&m| m as f64).sum();
    let scale = if ones > 0.0 { mask.len() as f64 / ones } else { 0.0 };
    let data = x
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&v, &m)| (v as f64 * m as f64 * scale) as f32)
        .collect();
    TensorF32::new(x.dims().to_vec(), data)
}
