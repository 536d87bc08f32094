//! Learning-rate schedules and global-norm gradient clipping.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_CLIP_NORM: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Step,
    /// Half-cosine down to zero after warmup. On full COCO this did not beat
    /// the step schedule, so it is opt-in.
    Cosine,
}

impl std::str::FromStr for DecayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(DecayKind::Step),
            "cosine" => Ok(DecayKind::Cosine),
            _ => Err(Error::invalid(format!("unknown schedule `{s}` (step, cosine)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LRScheduleConfig {
    pub base_lr: f64,
    pub warmup_iters: u64,
    pub milestones: Vec<u64>,
    pub decay_factor: f64,
    pub total_iters: u64,
    pub variant: DecayKind,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Default for LRScheduleConfig {
    fn default() -> Self {
        Self {
            base_lr: 0.005,
            warmup_iters: 4000,
            milestones: vec![400_000, 450_000],
            decay_factor: 0.1,
            total_iters: 500_000,
            variant: DecayKind::Step,
            momentum: 0.9,
            weight_decay: 0.0005,
        }
    }
}

impl LRScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) || !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::invalid("base_lr must be positive and decay_factor in (0, 1]"));
        }
        if self.milestones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("milestones must be strictly increasing"));
        }
        if self.milestones.last().is_some_and(|&m| m >= self.total_iters) || self.warmup_iters >= self.total_iters {
            return Err(Error::invalid("milestones and warmup must end before total_iters"));
        }
        if self.milestones.first().is_some_and(|&m| self.warmup_iters >= m) {
            return Err(Error::invalid("warmup must end before the first milestone"));
        }
        Ok(())
    }
}

/// Learning rate at `iter`: linear warmup from 0, then step or cosine decay.
/// Step decays apply from the milestone iteration onward.
pub fn lr_at(cfg: &LRScheduleConfig, iter: u64) -> Result<f64> {
    cfg.validate()?;
    if iter > cfg.total_iters {
        return Err(Error::invalid(format!(
            "iteration {iter} beyond total {}",
            cfg.total_iters
        )));
    }
    if iter < cfg.warmup_iters {
        return Ok(cfg.base_lr * iter as f64 / cfg.warmup_iters as f64);
    }
    Ok(match cfg.variant {
        DecayKind::Step => {
            let passed = cfg.milestones.iter().filter(|&&m| m <= iter).count() as i32;
            // dividing by the exact inverse keeps 0.005 / 10 == 0.0005
            cfg.base_lr / (1.0 / cfg.decay_factor).powi(passed)
        }
        DecayKind::Cosine => {
            let span = (cfg.total_iters - cfg.warmup_iters) as f64;
            let progress = (iter - cfg.warmup_iters) as f64 / span;
            0.5 * cfg.base_lr * (1.0 + (std::f64::consts::PI * progress).cos())
        }
    })
}

/// Writes `iter,lr` rows every `stride` iterations, always including the last.
pub fn write_csv(cfg: &LRScheduleConfig, stride: u64, mut w: impl Write) -> Result<()> {
    if stride == 0 {
        return Err(Error::invalid("stride must be positive"));
    }
    writeln!(w, "iter,lr")?;
    let mut iter = 0;
    loop {
        writeln!(w, "{iter},{}", lr_at(cfg, iter)?)?;
        if iter == cfg.total_iters {
            break;
        }
        iter = (iter + stride).min(cfg.total_iters);
    }
    Ok(())
}

/// Scales `grads` down so their global L2 norm is at most `max_norm`.
pub fn clip_gradients(grads: &[f64], max_norm: f64) -> Result<Vec<f64>> {
    if !(max_norm > 0.0) {
        return Err(Error::invalid(format!("max_norm {max_norm} must be positive")));
    }
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    // a few ulps of slack so an already clipped vector passes through unchanged
    if norm <= max_norm * (1.0 + 4.0 * f64::EPSILON) {
        return Ok(grads.to_vec());
    }
    Ok(grads.iter().map(|g| g * max_norm / norm).collect())
}
