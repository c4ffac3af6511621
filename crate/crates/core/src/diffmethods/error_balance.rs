//! Truncation against noise amplification for the central difference.
//!
//! With truncation error `k h²` and a noise contribution `c / h`, where
//! `c = κ|u| / √2`, the total `E(h) = k h² + c / h` is minimised at
//! `h* = (c / 2k)^(1/3)`.

use crate::error::{Error, Result};
use crate::grid::Field;

pub fn total_error(h: f64, k_bound: f64, c: f64) -> f64 {
    k_bound * h * h + c / h
}

/// Returns `(h*, E(h*))`.
pub fn optimal_step(k_bound: f64, kappa: f64, u_abs: f64) -> Result<(f64, f64)> {
    for (name, v) in [("k_bound", k_bound), ("kappa", kappa), ("u_abs", u_abs)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, format!("must be positive and finite, got {v}")));
        }
    }
    let c = kappa * u_abs / std::f64::consts::SQRT_2;
    let h_star = (c / (2.0 * k_bound)).cbrt();
    let e_min = c.powf(2.0 / 3.0) * k_bound.cbrt() * (2f64.powf(-2.0 / 3.0) + 2f64.cbrt());
    Ok((h_star, e_min))
}

/// Truncation constant of the central difference, `max|u‴| / 6`, read off a
/// third-derivative field (for example from a reference jet).
pub fn estimate_k_bound(third_derivative: &Field) -> f64 {
    third_derivative.max_abs() / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_case() {
        let (h, e) = optimal_step(1.0, std::f64::consts::SQRT_2, 1.0).unwrap();
        assert!((h - 0.5f64.cbrt()).abs() < 1e-15);
        assert!((h - 0.7937).abs() < 1e-4);
        let direct = total_error(h, 1.0, 1.0);
        assert!((direct - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn kappa_times_eight_doubles_step() {
        let (h1, _) = optimal_step(2.5, 0.01, 3.0).unwrap();
        let (h2, _) = optimal_step(2.5, 0.08, 3.0).unwrap();
        assert!((h2 / h1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_minimum() {
        let (k, kappa, u) = (0.3, 0.02, 5.0);
        let c = kappa * u / std::f64::consts::SQRT_2;
        let (h_star, _) = optimal_step(k, kappa, u).unwrap();
        let best = (0..20_000)
            .map(|i| 1e-4 * (1e4f64).powf(i as f64 / 19_999.0))
            .min_by(|a, b| total_error(*a, k, c).total_cmp(&total_error(*b, k, c)))
            .unwrap();
        assert!((best - h_star).abs() / h_star < 0.01);
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        assert!(optimal_step(0.0, 0.1, 1.0).is_err());
        assert!(optimal_step(1.0, -0.1, 1.0).is_err());
        assert!(optimal_step(1.0, 0.1, f64::NAN).is_err());
    }
}
