use serde::{Deserialize, Serialize};

use crate::refexec::sigmoid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IoUAwareSample {
    /// IoU target in [0, 1].
    pub t: f64,
    /// Raw logit from the IoU channel.
    pub p: f64,
    pub positive: bool,
}

/// `-t·ln σ(p) - (1-t)·ln(1-σ(p))`, rearranged as
/// `max(p,0) - p·t + ln(1+e^{-|p|})` so large |p| stays finite.
pub fn bce_with_logits(p: f64, t: f64) -> f64 {
    p.max(0.0) - p * t + (-p.abs()).exp().ln_1p()
}

/// Sum of the soft-label cross-entropy over positive samples.
pub fn iou_aware_loss(samples: &[IoUAwareSample]) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        if !(0.0..=1.0).contains(&s.t) {
            return Err(Error::invalid(format!("IoU target {} outside [0, 1]", s.t)));
        }
        if s.positive {
            total += bce_with_logits(s.p, s.t);
        }
    }
    Ok(total)
}

/// d/dp of [`bce_with_logits`].
pub fn iou_aware_loss_grad(t: f64, p: f64) -> f64 {
    sigmoid(p) - t
}
