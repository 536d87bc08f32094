//! Scalar activations and their derivatives, evaluated in `f64`.

use crate::archgraph::Activation;
use crate::TensorF32;

pub const LEAKY_SLOPE: f64 = 0.1;

/// `ln(1 + eˣ)` as `max(x, 0) + ln(1 + e^{-|x|})`, finite for every finite `x`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn mish(x: f64) -> f64 {
    x * softplus(x).tanh()
}

/// `tanh(sp(x)) + x·sech²(sp(x))·σ(x)`.
pub fn mish_grad(x: f64) -> f64 {
    let t = softplus(x).tanh();
    t + x * (1.0 - t * t) * sigmoid(x)
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

pub fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

pub fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

pub fn apply_scalar(act: Activation, x: f64) -> f64 {
    match act {
        Activation::Relu => x.max(0.0),
        Activation::LeakyRelu => leaky_relu(x),
        Activation::Mish => mish(x),
        Activation::Silu => silu(x),
        Activation::Sigmoid => sigmoid(x),
        Activation::Linear => x,
    }
}

/// Elementwise activation over a tensor.
pub fn apply(act: Activation, t: &TensorF32) -> TensorF32 {
    if act == Activation::Linear {
        return t.clone();
    }
    t.map(|v| apply_scalar(act, v as f64) as f32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::check_scalar;

    #[test]
    fn zero_points() {
        assert_eq!(mish(0.0), 0.0);
        assert_eq!(silu(0.0), 0.0);
    }

    #[test]
    fn reference_values() {
        // mish(1) = tanh(ln(1 + e)), silu(1) = 1 / (1 + e^-1)
        assert!((mish(1.0) - 0.865_098_4).abs() < 1e-6, "{}", mish(1.0));
        assert!((silu(1.0) - 0.731_058_6).abs() < 1e-6);
        assert!((mish(20.0) - 20.0).abs() < 1e-6);
    }

    #[test]
    fn silu_reflection_identity() {
        let x = 2.0;
        assert!((silu(-x) - (-x + silu(x))).abs() < 1e-12);
    }

    #[test]
    fn softplus_is_finite_at_extremes() {
        for x in [-1e4, -100.0, -80.0, 0.0, 80.0, 100.0, 1e4] {
            assert!(softplus(x).is_finite());
            assert!(mish(x).is_finite());
        }
        assert_eq!(softplus(1e4), 1e4);
        assert!((mish(-100.0)).abs() < 1e-40);
        let f32_result = apply(Activation::Mish, &TensorF32::full(&[1], 90.0));
        assert_eq!(f32_result.data()[0], 90.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for x in [-2.0, -0.5, 0.3, 1.0, 3.0] {
            let m = check_scalar(mish, mish_grad, x);
            assert!(m.rel_error < 1e-5, "mish {m:?}");
            let s = check_scalar(silu, silu_grad, x);
            assert!(s.rel_error < 1e-5, "silu {s:?}");
        }
    }

    #[test]
    fn monotone_on_positive_axis_and_saturating() {
        let mut prev = (mish(0.0), silu(0.0));
        for i in 1..2000 {
            let x = i as f64 * 0.01;
            let cur = (mish(x), silu(x));
            assert!(cur.0 >= prev.0 && cur.1 >= prev.1, "not monotone at {x}");
            prev = cur;
        }
        let gap = |f: fn(f64) -> f64, x: f64| (f(x) - x).abs();
        assert!(gap(mish, 30.0) < gap(mish, 5.0) && gap(mish, 30.0) < 1e-10);
        assert!(gap(silu, 30.0) < gap(silu, 5.0) && gap(silu, 30.0) < 1e-10);
    }
}
