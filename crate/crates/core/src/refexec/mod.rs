//! Naive, correctness-first execution of [`GraphSpec`](crate::archgraph::GraphSpec)s.
//!
//! Everything here is direct loops with `f64` accumulation. Parallelism (via
//! rayon) is only over independent output planes, so results do not depend on
//! the thread count.

pub mod activations;
mod conv;
mod deform;
mod dropblock;
mod forward;
mod params;

pub use activations::{leaky_relu, mish, mish_grad, sigmoid, silu, silu_grad, softplus, LEAKY_SLOPE};
pub use conv::{conv2d_naive, Conv2dArgs};
pub use deform::{bilinear_sample, deform_conv2d_naive};
pub use dropblock::{apply_dropblock, dropblock_mask};
pub use forward::{coord_channels, forward, Mode};
pub use params::{NodeParams, ParamStore};
