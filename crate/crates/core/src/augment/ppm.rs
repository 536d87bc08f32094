//! Binary (P6) PPM with 8-bit samples.

use crate::{Error, Result, TensorF32};

fn format_err(offset: usize, detail: impl Into<String>) -> Error {
    Error::Format {
        offset,
        detail: detail.into(),
    }
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn token(bytes: &[u8], pos: &mut usize) -> Result<(usize, usize)> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(_) => break,
            None => return Err(format_err(*pos, "truncated header")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    let text = std::str::from_utf8(&bytes[start..*pos]).map_err(|_| format_err(start, "non-ASCII header"))?;
    let value = text
        .parse::<usize>()
        .map_err(|_| format_err(start, format!("expected a number, found `{text}`")))?;
    Ok((value, start))
}

/// Decodes a P6 image into `[3, H, W]` with values scaled to [0, 1].
pub fn read_ppm(bytes: &[u8]) -> Result<TensorF32> {
    if !bytes.starts_with(b"P6") {
        return Err(format_err(0, "missing P6 magic"));
    }
    let mut pos = 2;
    let (w, _) = token(bytes, &mut pos)?;
    let (h, _) = token(bytes, &mut pos)?;
    let (maxval, at) = token(bytes, &mut pos)?;
    if w == 0 || h == 0 {
        return Err(format_err(at, "empty image"));
    }
    if !(1..=255).contains(&maxval) {
        return Err(format_err(at, format!("maxval {maxval} is not 8-bit")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(format_err(pos, "expected whitespace after maxval"));
    }
    pos += 1;
    let need = 3 * w * h;
    let pixels = bytes
        .get(pos..pos + need)
        .ok_or_else(|| format_err(bytes.len(), format!("expected {need} pixel bytes")))?;
    let scale = maxval as f32;
    let mut data = vec![0f32; need];
    for (i, px) in pixels.chunks(3).enumerate() {
        for c in 0..3 {
            data[c * w * h + i] = px[c] as f32 / scale;
        }
    }
    TensorF32::new(vec![3, h, w], data)
}

/// Encodes a `[3, H, W]` image in [0, 1] as P6 with maxval 255.
pub fn write_ppm(image: &TensorF32) -> Result<Vec<u8>> {
    let &[3, h, w] = image.dims() else {
        return Err(Error::shape("ppm", format!("expected 3×H×W, got {:?}", image.dims())));
    };
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let d = image.data();
    for i in 0..w * h {
        for c in 0..3 {
            out.push((d[c * w * h + i].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    Ok(out)
}
