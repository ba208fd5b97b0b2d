use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Truncation of the theta series to `|q| <= terms`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaConfig {
    pub terms: u32,
}

impl ThetaConfig {
    /// Smallest truncation for which the documented error bound is useful.
    pub const RECOMMENDED_MIN: u32 = 4;

    pub fn new(terms: u32) -> Self {
        ThetaConfig { terms }
    }
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig { terms: 8 }
    }
}

/// Bound `3 exp(-πQ² + 2πQ)` on the truncation error for `|Im z| <= 1`.
pub fn theta_truncation_bound(cfg: ThetaConfig) -> f64 {
    let q = cfg.terms as f64;
    3.0 * (-PI * q * q + 2.0 * PI * q).exp()
}

/// `Θ(z) = 2^{1/4} Σ_{|q|<=Q} exp(2πiqz - πq²)`.
///
/// Arguments with `|Im z| > 2` are first moved into the strip by the
/// quasi-periodicity `Θ(z+i) = exp(π - 2πiz) Θ(z)`.
pub fn theta(z: Complex64, cfg: ThetaConfig) -> Complex64 {
    let mut z = z;
    let mut factor = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    while z.im > 2.0 {
        factor *= (-PI - 2.0 * PI * i * z).exp();
        z -= i;
    }
    while z.im < -2.0 {
        factor *= (-PI + 2.0 * PI * i * z).exp();
        z += i;
    }
    let q_max = cfg.terms as i64;
    let mut sum = (2.0 * PI * i * 0.0 * z).exp();
    for q in 1..=q_max {
        let qf = q as f64;
        let g = (-PI * qf * qf).exp();
        sum += ((2.0 * PI * i * qf * z).exp() + (-2.0 * PI * i * qf * z).exp()) * g;
    }
    factor * sum * 2f64.powf(0.25)
}

/// `I(x) = 2^{1/2} ∫_{-∞}^x exp(-2πy²) dy`.
pub fn loc_integral(x: f64) -> f64 {
    0.5 * erfc(-(2.0 * PI).sqrt() * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn theta_at_origin() {
        // Independent summation over |q| <= 30.
        let oracle: f64 = (-30..=30).map(|q: i32| (-PI * (q * q) as f64).exp()).sum::<f64>() * 2f64.powf(0.25);
        let v = theta(c(0.0, 0.0), ThetaConfig::default());
        assert!((v.re - oracle).abs() < 1e-14);
        assert!((v.re - 1.291_996_0075).abs() < 1e-9);
    }

    #[test]
    fn theta_zero_at_cell_centre() {
        assert!(theta(c(0.5, 0.5), ThetaConfig::default()).norm() < 1e-10);
    }

    #[test]
    fn reduction_is_consistent_with_the_series() {
        // Direct series with many terms is still accurate at Im z = 3.
        let z = c(0.3, 3.0);
        let direct: Complex64 = (-40..=40)
            .map(|q: i32| {
                let q = q as f64;
                (c(0.0, 2.0 * PI * q) * z - PI * q * q).exp()
            })
            .sum::<Complex64>()
            * 2f64.powf(0.25);
        let reduced = theta(z, ThetaConfig::default());
        assert!((direct - reduced).norm() < 1e-10 * direct.norm());
        let z = c(-0.2, -2.7);
        let direct: Complex64 = (-40..=40)
            .map(|q: i32| {
                let q = q as f64;
                (c(0.0, 2.0 * PI * q) * z - PI * q * q).exp()
            })
            .sum::<Complex64>()
            * 2f64.powf(0.25);
        assert!((direct - theta(z, ThetaConfig::default())).norm() < 1e-10 * direct.norm());
    }

    #[test]
    fn loc_integral_values() {
        assert_eq!(loc_integral(0.0), 0.5);
        assert!(loc_integral(5.0) >= 1.0 - 1e-10);
        // Composite Simpson integral of the Gaussian density on [-12, -1].
        let n = 200_000;
        let h = 11.0 / n as f64;
        let dens = |y: f64| (-2.0 * PI * y * y).exp();
        let mut s = dens(-12.0) + dens(-1.0);
        for k in 1..n {
            s += dens(-12.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = 2f64.sqrt() * s * h / 3.0;
        assert!((loc_integral(-1.0) - oracle).abs() < 1e-12);
        assert!((loc_integral(-1.0) - 1.963_752_94e-4).abs() < 1e-12);
        for x in [0.1, 0.7, 2.3] {
            assert!((loc_integral(x) + loc_integral(-x) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn truncation_bound_shrinks() {
        assert!(theta_truncation_bound(ThetaConfig::new(8)) < 1e-60);
        assert!(theta_truncation_bound(ThetaConfig::new(2)) > 1e-6);
    }
}
