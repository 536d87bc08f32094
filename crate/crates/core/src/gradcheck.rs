//! Central finite-difference checks for scalar functions.

/// Central difference `(f(x+h) - f(x-h)) / 2h`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Below this magnitude a derivative is compared in absolute terms.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// `|a - n| / max(|a|, |n|, RELATIVE_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Step used for central differences in `f64`: balances truncation error
/// (O(h²)) against cancellation (O(ε/h)).
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub x: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

pub fn check_scalar(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, x: f64) -> GradCheck {
    let analytic = df(x);
    let numeric = central_difference(f, x, DEFAULT_STEP);
    GradCheck {
        x,
        analytic,
        numeric,
        rel_error: relative_error(analytic, numeric),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_derivative() {
        let c = check_scalar(|x| x * x * x, |x| 3.0 * x * x, 1.7);
        assert!(c.rel_error < 1e-8, "{c:?}");
    }

    #[test]
    fn detects_wrong_sign() {
        let c = check_scalar(|x| x * x, |x| -2.0 * x, 1.0);
        assert!(c.rel_error > 0.5);
    }
}
