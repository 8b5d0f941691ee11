use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::{PI, SQRT_2};

// Below this the direct erfc form loses all precision; switch to the
// asymptotic (Mills ratio) expansion.
const TAIL: f64 = -30.0;

/// Standard normal CDF Φ.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Inverse standard normal CDF Φ⁻¹ on (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// ln Φ(x), accurate deep into the lower tail.
pub(crate) fn ln_cdf(x: f64) -> f64 {
    if x > TAIL {
        normal_cdf(x).ln()
    } else {
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Inverse Mills ratio φ(x)/Φ(x).
pub(crate) fn mills(x: f64) -> f64 {
    if x > TAIL {
        pdf(x) / normal_cdf(x)
    } else {
        let x2 = x * x;
        -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        for p in [0.01, 0.25, 0.5, 0.75, 10.5 / 11.0, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-9, "{p}: {}", normal_cdf(normal_quantile(p)));
        }
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tail_forms_are_continuous() {
        let below = ln_cdf(TAIL - 1e-9);
        let above = ln_cdf(TAIL + 1e-9);
        assert!((below - above).abs() / above.abs() < 1e-6);
        let below = mills(TAIL - 1e-9);
        let above = mills(TAIL + 1e-9);
        assert!((below - above).abs() / above < 1e-6);
        assert!(ln_cdf(-1e3).is_finite() && mills(-1e3).is_finite());
    }
}
