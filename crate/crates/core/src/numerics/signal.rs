use num_complex::Complex64;

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 32;

/// Uniform grid `x_n = -T + n h`, `n = 0..=2T/h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    half_width: f64,
    step: f64,
    len: usize,
}

impl Grid {
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        let cells = 2.0 * half_width / step;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded < 2.0 {
            return Err(Error::InvalidGrid(format!(
                "2T/h = {cells} is not an integer >= 2"
            )));
        }
        Ok(Grid { half_width, step, len: rounded as usize + 1 })
    }

    /// T = 8, h = 1/64.
    pub fn baseline() -> Self {
        Grid::new(8.0, 1.0 / 64.0).expect("baseline grid")
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn x(&self, n: usize) -> f64 {
        -self.half_width + n as f64 * self.step
    }

    /// Length of the periodic extension used by spectral operations.
    pub fn period(&self) -> f64 {
        self.len as f64 * self.step
    }

    /// Index of the sample at `x`, if `x` is a grid node.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = (x + self.half_width) / self.step;
        let n = t.round();
        if (t - n).abs() > 1e-7 || n < 0.0 || n >= self.len as f64 {
            return None;
        }
        Some(n as usize)
    }

    /// Whether `1/step` is an integer, so integer shifts map samples to samples.
    pub fn unit_divisible(&self) -> bool {
        let k = 1.0 / self.step;
        (k - k.round()).abs() < 1e-9 * k
    }
}

/// Complex samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal {
    grid: Grid,
    values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn zeros(grid: Grid) -> Self {
        SampledSignal { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|n| f(grid.x(n))).collect();
        SampledSignal { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.len()
            )));
        }
        Ok(SampledSignal { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, n: usize) -> f64 {
        self.grid.x(n)
    }

    /// Sample at grid node `x`, zero outside the grid.
    pub fn at(&self, x: f64) -> Option<Complex64> {
        if x < -self.grid.half_width - 1e-9 || x > self.grid.half_width + 1e-9 {
            return Some(Complex64::new(0.0, 0.0));
        }
        self.grid.index_of(x).map(|n| self.values[n])
    }

    pub fn norm_sq(&self) -> f64 {
        let h = self.grid.step;
        pairwise_sum(self.values.len(), |n| Complex64::new(self.values[n].norm_sqr(), 0.0)).re * h
    }

    pub fn l2norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        SampledSignal { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex64, other: &SampledSignal) -> Result<Self> {
        check_grids(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(SampledSignal { grid: self.grid, values })
    }

    pub fn add(&self, other: &SampledSignal) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &SampledSignal) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// In-place `self += c * other`.
    pub fn add_scaled(&mut self, c: Complex64, other: &SampledSignal) -> Result<()> {
        check_grids(&self.grid, &other.grid)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// Pointwise product with a function of `x`.
    pub fn map_x(&self, mut f: impl FnMut(f64, Complex64) -> Complex64) -> Self {
        let values = self.values.iter().enumerate().map(|(n, v)| f(self.grid.x(n), *v)).collect();
        SampledSignal { grid: self.grid, values }
    }

    /// Relative L2 distance `‖self - other‖ / ‖other‖` (absolute when `other` is zero).
    pub fn relative_error(&self, reference: &SampledSignal) -> Result<f64> {
        let d = self.sub(reference)?.l2norm();
        let n = reference.l2norm();
        Ok(if n > 0.0 { d / n } else { d })
    }
}

fn check_grids(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!(
            "(T={}, h={}) vs (T={}, h={})",
            a.half_width, a.step, b.half_width, b.step
        )));
    }
    Ok(())
}

/// `Σ f(x_n) conj(g(x_n)) h`, summed pairwise in a fixed order.
pub fn inner(f: &SampledSignal, g: &SampledSignal) -> Result<Complex64> {
    check_grids(&f.grid, &g.grid)?;
    let (a, b) = (&f.values, &g.values);
    Ok(pairwise_sum(a.len(), |n| a[n] * b[n].conj()) * f.grid.step)
}

/// Pairwise summation of `term(0..n)`; the reduction tree depends only on `n`.
pub fn pairwise_sum(n: usize, term: impl Fn(usize) -> Complex64) -> Complex64 {
    fn rec(lo: usize, hi: usize, term: &dyn Fn(usize) -> Complex64) -> Complex64 {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut s = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                s += term(i);
            }
            return s;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, term) + rec(mid, hi, term)
    }
    rec(0, n, &term)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_length_matches() {
        let g = Grid::baseline();
        assert_eq!(g.len(), 1025);
        assert_eq!(g.x(0), -8.0);
        assert_eq!(g.x(1024), 8.0);
        assert_eq!(g.index_of(0.5), Some(544));
        assert!(g.index_of(0.001).is_none());
        assert!(Grid::new(1.0, 0.3).is_err());
        assert!(Grid::new(-1.0, 0.5).is_err());
    }

    #[test]
    fn gaussian_inner_is_one() {
        let g = Grid::baseline();
        let c = 2f64.powf(0.25);
        let e0 = SampledSignal::from_fn(g, |x| Complex64::new(c * (-std::f64::consts::PI * x * x).exp(), 0.0));
        let v = inner(&e0, &e0).unwrap();
        assert!((v.re - 1.0).abs() < 1e-10 && v.im == 0.0);
    }

    #[test]
    fn disjoint_bumps_are_orthogonal() {
        let g = Grid::baseline();
        let a = SampledSignal::from_fn(g, |x| Complex64::new(if x < -1.0 { 1.0 } else { 0.0 }, 0.0));
        let b = SampledSignal::from_fn(g, |x| Complex64::new(0.0, if x > 1.0 { 1.0 } else { 0.0 }));
        assert_eq!(inner(&a, &b).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = SampledSignal::zeros(Grid::baseline());
        let b = SampledSignal::zeros(Grid::new(8.0, 1.0 / 32.0).unwrap());
        assert!(matches!(inner(&a, &b), Err(Error::GridMismatch(_))));
    }
}
