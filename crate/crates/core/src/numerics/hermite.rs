use std::f64::consts::PI;

use num_complex::Complex64;

use super::signal::{Grid, SampledSignal};

/// Hermite function `h_n(x) = (2π)^{1/4} ψ_n(√(2π) x)`, normalized to unit
/// discrete norm. `h_0` is the atom `e_0`.
pub fn hermite_signal(n: usize, grid: Grid) -> SampledSignal {
    let s = (2.0 * PI).sqrt();
    let pre = (2.0 * PI).powf(0.25);
    let f = SampledSignal::from_fn(grid, |x| {
        let t = s * x;
        let mut prev = 0.0;
        let mut cur = PI.powf(-0.25) * (-0.5 * t * t).exp();
        for k in 0..n {
            let next = (2.0 / (k as f64 + 1.0)).sqrt() * t * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        Complex64::new(pre * cur, 0.0)
    });
    let norm = f.l2norm();
    f.scale(Complex64::new(1.0 / norm, 0.0))
}
