//! Special functions used across the crate.

use std::f64::consts::{PI, SQRT_2};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `P(Z > z)` for a standard normal `Z`, accurate in the far right tail.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `P(Z <= z)` for a standard normal `Z`, accurate in the far left tail.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Centered Gaussian density with variance `var`.
pub fn gaussian(var: f64, x: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

/// `sgn` with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tails_are_complementary() {
        for z in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            assert!((normal_cdf(z) + normal_upper_tail(z) - 1.0).abs() < 1e-15);
        }
        assert!(normal_upper_tail(30.0) > 0.0);
    }

    #[test]
    fn gamma_half() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(-2.0), -1.0);
    }
}
