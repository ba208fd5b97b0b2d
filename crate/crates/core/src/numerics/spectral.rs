use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::signal::Grid;

fn frequency(idx: usize, len: usize) -> i64 {
    if idx <= len / 2 {
        idx as i64
    } else {
        idx as i64 - len as i64
    }
}

/// Derivative of the periodic trigonometric interpolant of `values`
/// (sample spacing `step`). The Nyquist mode of an even-length input is dropped.
pub fn spectral_derivative(values: &[Complex64], step: f64) -> Vec<Complex64> {
    let len = values.len();
    if len == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(len).process(&mut buf);
    let period = len as f64 * step;
    for (idx, v) in buf.iter_mut().enumerate() {
        let k = frequency(idx, len);
        if len % 2 == 0 && idx == len / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::new(0.0, 2.0 * PI * k as f64 / period);
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let inv = 1.0 / len as f64;
    buf.iter().map(|v| v * inv).collect()
}

/// Trigonometric interpolant of samples on a [`Grid`], evaluated off-grid.
#[derive(Clone, Debug)]
pub struct Interpolant {
    x0: f64,
    period: f64,
    modes: Vec<(f64, Complex64)>,
}

impl Interpolant {
    pub fn new(values: &[Complex64], grid: Grid) -> Self {
        let len = values.len();
        let mut buf = values.to_vec();
        FftPlanner::new().plan_fft_forward(len).process(&mut buf);
        let inv = 1.0 / len as f64;
        let mut modes = Vec::with_capacity(len + 1);
        for (idx, v) in buf.iter().enumerate() {
            let k = frequency(idx, len) as f64;
            if len % 2 == 0 && idx == len / 2 {
                modes.push((k, v * (0.5 * inv)));
                modes.push((-k, v * (0.5 * inv)));
            } else {
                modes.push((k, v * inv));
            }
        }
        Interpolant { x0: grid.x(0), period: len as f64 * grid.step(), modes }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let t = 2.0 * PI * (x - self.x0) / self.period;
        let mut s = Complex64::new(0.0, 0.0);
        for (k, c) in &self.modes {
            s += c * Complex64::from_polar(1.0, k * t);
        }
        s
    }
}
