//! Zak transform on the unit square, Weyl–Heisenberg shifts and the operator A.
//!
//! Grid convention: `y_i = i/N` lies on signal samples, `ξ_j = (j+1/2)/N` on
//! midpoints. With `N` even the zero `♯ = (1/2, 1/2)` of `Ze₀` is never a node.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numerics::{spectral_derivative, Grid, Interpolant, SampledSignal};
use crate::phaseplane::{LatticeIndex, PhasePoint};

/// Relative mass a shift may push off the grid before it is an error.
const OVERFLOW_TOL: f64 = 1e-20;

/// Zak transform samples, row-major in `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZakField {
    n: usize,
    values: Vec<Complex64>,
}

impl ZakField {
    pub fn zeros(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(ZakField { n, values: vec![Complex64::new(0.0, 0.0); n * n] })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(f64, f64) -> Complex64) -> Result<Self> {
        check_size(n)?;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(y_node(i, n), xi_node(j, n)));
            }
        }
        Ok(ZakField { n, values })
    }

    pub fn from_values(n: usize, values: Vec<Complex64>) -> Result<Self> {
        check_size(n)?;
        if values.len() != n * n {
            return Err(Error::IncompatibleZak(format!("{} values for N = {n}", values.len())));
        }
        Ok(ZakField { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn y(&self, i: usize) -> f64 {
        y_node(i, self.n)
    }

    pub fn xi(&self, j: usize) -> f64 {
        xi_node(j, self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at `(i/N, (j+1/2)/N)` for any integers, by the extension rules
    /// `Z(y, ξ+1) = Z(y, ξ)` and `Z(y+1, ξ) = e^{-2πiξ} Z(y, ξ)`.
    pub fn get_extended(&self, i: i64, j: i64) -> Complex64 {
        let n = self.n as i64;
        let a = i.div_euclid(n);
        let i0 = i.rem_euclid(n) as usize;
        let j0 = j.rem_euclid(n) as usize;
        let v = self.get(i0, j0);
        if a == 0 {
            return v;
        }
        let xi = (j as f64 + 0.5) / n as f64;
        v * Complex64::from_polar(1.0, -2.0 * PI * a as f64 * xi)
    }

    /// Interpolated value at an arbitrary point: trigonometric in ξ (exact
    /// for signals supported in `|x| < N/2`) and cubic Lagrange in `y` across
    /// the quasi-periodic extension.
    pub fn interpolate(&self, y: f64, xi: f64) -> Complex64 {
        let n = self.n;
        let u = y * n as f64;
        let iu = u.floor() as i64;
        let wu = lagrange4(u - iu as f64);
        let mut s = Complex64::new(0.0, 0.0);
        for (a, wa) in wu.iter().enumerate() {
            let i = iu - 1 + a as i64;
            let shift = i.div_euclid(n as i64);
            let row = &self.values[i.rem_euclid(n as i64) as usize * n..][..n];
            let v = trig_eval(row, xi) * Complex64::from_polar(1.0, -2.0 * PI * shift as f64 * xi);
            s += v * *wa;
        }
        s
    }

    /// Discrete `L2(Q)` norm, `((1/N²) Σ |Z|²)^{1/2}`.
    pub fn l2norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s / (self.n * self.n) as f64).sqrt()
    }

    pub fn max_abs_diff(&self, other: &ZakField) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::IncompatibleZak(format!("N = {} vs {}", self.n, other.n)));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// Weights of cubic Lagrange interpolation on nodes -1, 0, 1, 2 at `t ∈ [0,1)`.
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Trigonometric interpolant of samples at `(j+1/2)/N`, evaluated at `xi`.
fn trig_eval(row: &[Complex64], xi: f64) -> Complex64 {
    let n = row.len();
    let nf = n as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for idx in 0..n {
        let t = signed(idx, n);
        let mut c = Complex64::new(0.0, 0.0);
        for (j, v) in row.iter().enumerate() {
            c += v * Complex64::from_polar(1.0, -2.0 * PI * t * xi_node(j, n));
        }
        c /= nf;
        if idx == n / 2 {
            s += c * 0.5 * (Complex64::from_polar(1.0, 2.0 * PI * t * xi) + Complex64::from_polar(1.0, -2.0 * PI * t * xi));
        } else {
            s += c * Complex64::from_polar(1.0, 2.0 * PI * t * xi);
        }
    }
    s
}

fn y_node(i: usize, n: usize) -> f64 {
    i as f64 / n as f64
}

fn xi_node(j: usize, n: usize) -> f64 {
    (j as f64 + 0.5) / n as f64
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::IncompatibleZak(format!("N = {n} must be even and at least 2")));
    }
    Ok(())
}

fn check_grid(grid: Grid, n: usize) -> Result<usize> {
    check_size(n)?;
    let h = grid.step();
    let stride = 1.0 / (n as f64 * h);
    let t_cells = grid.half_width() / h;
    if (stride - stride.round()).abs() > 1e-9 * stride || stride.round() < 1.0 {
        return Err(Error::IncompatibleZak(format!("step {h} does not divide 1/N = 1/{n}")));
    }
    if (t_cells - t_cells.round()).abs() > 1e-9 * t_cells {
        return Err(Error::IncompatibleZak(format!("T/h = {t_cells} is not an integer")));
    }
    Ok(stride.round() as usize)
}

/// `Zf(y, ξ) = Σ_q e^{2πiqξ} f(y+q)`, summed over the signal support.
pub fn zak(f: &SampledSignal, n: usize) -> Result<ZakField> {
    let grid = f.grid();
    let stride = check_grid(grid, n)?;
    let per_unit = stride * n;
    let origin = (grid.half_width() / grid.step()).round() as i64;
    let vals = f.values();
    let len = vals.len() as i64;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let base = origin + (i * stride) as i64;
        let mut samples = Vec::new();
        let q_lo = -(base / per_unit as i64) - 1;
        let q_hi = (len - base) / per_unit as i64 + 1;
        for q in q_lo..=q_hi {
            let idx = base + q * per_unit as i64;
            if (0..len).contains(&idx) {
                samples.push((q as f64, vals[idx as usize]));
            }
        }
        for j in 0..n {
            let xi = xi_node(j, n);
            let mut s = Complex64::new(0.0, 0.0);
            for (q, v) in &samples {
                s += v * Complex64::from_polar(1.0, 2.0 * PI * q * xi);
            }
            out.push(s);
        }
    }
    Ok(ZakField { n, values: out })
}

/// `f(y+q) = ∫ e^{-2πiqξ} Zf(y, ξ) dξ`, evaluated at every sample. Requires `N h = 1`.
pub fn zak_inverse(z: &ZakField, grid: Grid) -> Result<SampledSignal> {
    let n = z.n;
    let stride = check_grid(grid, n)?;
    if stride != 1 {
        return Err(Error::IncompatibleZak(format!("inverse needs N h = 1 (N = {n}, h = {})", grid.step())));
    }
    let origin = (grid.half_width() / grid.step()).round() as i64;
    let inv = 1.0 / n as f64;
    let values = (0..grid.len())
        .map(|m| {
            let rel = m as i64 - origin;
            let q = rel.div_euclid(n as i64);
            let i = rel.rem_euclid(n as i64) as usize;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += z.get(i, j) * Complex64::from_polar(1.0, -2.0 * PI * q as f64 * xi_node(j, n));
            }
            s * inv
        })
        .collect();
    SampledSignal::from_values(grid, values)
}

/// Exact Zak transform at one point; off-grid samples come from the
/// trigonometric interpolant of `f`.
pub fn zak_point(f: &SampledSignal, y: f64, xi: f64) -> Complex64 {
    ZakEvaluator::new(f).eval(y, xi)
}

/// Repeated exact evaluation of `Zf` at arbitrary points.
pub struct ZakEvaluator<'a> {
    f: &'a SampledSignal,
    interp: Option<Interpolant>,
}

impl<'a> ZakEvaluator<'a> {
    pub fn new(f: &'a SampledSignal) -> Self {
        ZakEvaluator { f, interp: None }
    }

    pub fn eval(&mut self, y: f64, xi: f64) -> Complex64 {
        let grid = self.f.grid();
        let t = grid.half_width();
        let q_lo = (-t - y).ceil() as i64;
        let q_hi = (t - y).floor() as i64;
        let mut s = Complex64::new(0.0, 0.0);
        for q in q_lo..=q_hi {
            let x = y + q as f64;
            let v = match grid.index_of(x) {
                Some(k) => self.f.values()[k],
                None => {
                    let f = self.f;
                    self.interp.get_or_insert_with(|| Interpolant::new(f.values(), grid)).eval(x)
                }
            };
            s += v * Complex64::from_polar(1.0, 2.0 * PI * q as f64 * xi);
        }
        s
    }
}

/// Weyl–Heisenberg shift `T_λ f(x) = e^{2πiθx} f(x-p)`.
pub fn wh_shift(l: PhasePoint, f: &SampledSignal) -> Result<SampledSignal> {
    let grid = f.grid();
    let h = grid.step();
    let vals = f.values();
    let len = vals.len();
    let total = f.norm_sq();
    let lost: f64 = (0..len)
        .filter(|&m| {
            let x = grid.x(m) + l.p;
            x < -grid.half_width() - 1e-9 || x > grid.half_width() + 1e-9
        })
        .map(|m| vals[m].norm_sqr() * h)
        .sum();
    if lost > OVERFLOW_TOL * total.max(f64::MIN_POSITIVE) {
        return Err(Error::SupportOverflow(lost));
    }
    let s = l.p / h;
    let shifted: Vec<Complex64> = if (s - s.round()).abs() < 1e-9 {
        let s = s.round() as i64;
        (0..len as i64)
            .map(|n| {
                let src = n - s;
                if (0..len as i64).contains(&src) {
                    vals[src as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    } else {
        let it = Interpolant::new(vals, grid);
        (0..len).map(|n| it.eval(grid.x(n) - l.p)).collect()
    };
    let values = shifted
        .into_iter()
        .enumerate()
        .map(|(n, v)| v * Complex64::from_polar(1.0, 2.0 * PI * l.theta * grid.x(n)))
        .collect();
    SampledSignal::from_values(grid, values)
}

/// `max |Z(T_λ f) - e^{2πi(pξ+θy)} Zf|` over the Zak grid.
pub fn zak_translate_check(l: LatticeIndex, f: &SampledSignal, n: usize) -> Result<f64> {
    let shifted = wh_shift(l.lattice_point(), f)?;
    let lhs = zak(&shifted, n)?;
    let zf = zak(f, n)?;
    let (p, theta) = (l.k as f64, l.j as f64);
    let rhs = ZakField::from_fn(n, |y, xi| Complex64::from_polar(1.0, 2.0 * PI * (p * xi + theta * y)))?;
    let rhs = ZakField { n, values: rhs.values.iter().zip(&zf.values).map(|(a, b)| a * b).collect() };
    lhs.max_abs_diff(&rhs)
}

fn dft_rows(values: &mut [Complex64], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    for row in values.chunks_mut(n) {
        fft.process(row);
    }
}

fn transpose(values: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = values[i * n + j];
        }
    }
    out
}

/// `A = (1/2πi)(∂_ξ + i∂_y) + y`, the Zak-side image of the annihilation operator.
///
/// `∂_ξ` is spectral along the periodic ξ direction. For `∂_y` the field is
/// first trivialized, `W = e^{2πiξy} Z`, which is periodic in `y`.
pub fn a_operator_zak(z: &ZakField) -> ZakField {
    let n = z.n;
    let step = 1.0 / n as f64;
    let mut d_xi = Vec::with_capacity(n * n);
    for row in z.values.chunks(n) {
        d_xi.extend(spectral_derivative(row, step));
    }
    let w: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            z.values[idx] * Complex64::from_polar(1.0, 2.0 * PI * xi_node(j, n) * y_node(i, n))
        })
        .collect();
    let wt = transpose(&w, n);
    let mut dwt = Vec::with_capacity(n * n);
    for col in wt.chunks(n) {
        dwt.extend(spectral_derivative(col, step));
    }
    let dw = transpose(&dwt, n);
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    let values = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let (y, xi) = (y_node(i, n), xi_node(j, n));
            let d_y = Complex64::from_polar(1.0, -2.0 * PI * xi * y) * dw[idx] - i2pi * xi * z.values[idx];
            (d_xi[idx] + Complex64::new(0.0, 1.0) * d_y) / i2pi + y * z.values[idx]
        })
        .collect();
    ZakField { n, values }
}

fn signed(idx: usize, n: usize) -> f64 {
    if idx <= n / 2 {
        idx as f64
    } else {
        idx as f64 - n as f64
    }
}

/// Discrete Sobolev-type norm of a Zak field.
///
/// Average of two halves: ξ-Fourier coefficients `f(y_i + t)` weighted by
/// `(1+|t|)^δ`, and y-Fourier coefficients of the trivialization `W`, which
/// sample `f̂(s - ξ_j)`, weighted by `(1+|s-ξ_j|)^δ`.
pub fn zak_sobolev_norm(z: &ZakField, delta: f64) -> f64 {
    let n = z.n;
    let nf = n as f64;
    let mut rows = z.values.clone();
    dft_rows(&mut rows, n, false);
    let mut s1 = 0.0;
    for i in 0..n {
        for t in 0..n {
            // Midpoint ξ-nodes shift each coefficient by a unimodular phase only.
            let c = rows[i * n + t] / nf;
            s1 += (1.0 + signed(t, n).abs()).powf(delta) * c.norm_sqr();
        }
    }
    s1 /= nf;
    let w: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            z.values[idx] * Complex64::from_polar(1.0, 2.0 * PI * xi_node(j, n) * y_node(i, n))
        })
        .collect();
    let mut cols = transpose(&w, n);
    dft_rows(&mut cols, n, false);
    let mut s2 = 0.0;
    for j in 0..n {
        let xi = xi_node(j, n);
        for s in 0..n {
            let d = cols[j * n + s] / nf;
            s2 += (1.0 + (signed(s, n) - xi).abs()).powf(delta) * d.norm_sqr();
        }
    }
    s2 /= nf;
    (0.5 * (s1 + s2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::atom;
    use crate::numerics::{hermite_signal, theta, ThetaConfig};

    #[test]
    fn unitarity_and_roundtrip() {
        let g = Grid::baseline();
        for k in 0..4 {
            let f = hermite_signal(k, g);
            let z = zak(&f, 64).unwrap();
            assert!((z.l2norm() - f.l2norm()).abs() < 1e-12);
            let back = zak_inverse(&z, g).unwrap();
            assert!(back.relative_error(&f).unwrap() < 1e-12);
        }
        let zero = zak_inverse(&ZakField::zeros(64).unwrap(), g).unwrap();
        assert!(zero.l2norm() == 0.0);
    }

    #[test]
    fn gaussian_image_is_theta() {
        let g = Grid::baseline();
        let z = zak(&hermite_signal(0, g), 64).unwrap();
        let cfg = ThetaConfig::default();
        let mut worst: f64 = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                let (y, xi) = (z.y(i), z.xi(j));
                let want = theta(Complex64::new(xi, y), cfg) * (-PI * y * y).exp();
                worst = worst.max((z.get(i, j) - want).norm());
            }
        }
        assert!(worst < 1e-12, "{worst}");
        assert!(z.interpolate(0.5, 0.5).norm() < 1e-6);
    }

    #[test]
    fn incompatible_grids() {
        let f = hermite_signal(0, Grid::baseline());
        assert!(zak(&f, 63).is_err());
        assert!(zak(&f, 128).is_err());
        let coarse = Grid::new(8.0, 1.0 / 32.0).unwrap();
        assert!(zak(&hermite_signal(0, coarse), 32).is_ok());
    }

    #[test]
    fn extension_rules() {
        let g = Grid::baseline();
        let f = atom(PhasePoint::new(0.3, 1.2), g).unwrap();
        let z = zak(&f, 64).unwrap();
        for (i, j) in [(3i64, 5i64), (60, 1)] {
            let direct = zak_point(&f, (i as f64 + 64.0) / 64.0, (j as f64 + 0.5) / 64.0);
            assert!((z.get_extended(i + 64, j) - direct).norm() < 1e-12);
            assert!((z.get_extended(i, j + 64) - z.get(i as usize, j as usize)).norm() < 1e-15);
        }
    }

    #[test]
    fn shifts() {
        let g = Grid::baseline();
        let e0 = hermite_signal(0, g);
        assert_eq!(wh_shift(PhasePoint::default(), &e0).unwrap(), e0);
        let l = PhasePoint::new(1.3, -0.7);
        let s = wh_shift(l, &e0).unwrap();
        let e = atom(l, g).unwrap();
        let d: f64 = s.values().iter().zip(e.values()).map(|(a, b)| (a.norm() - b.norm()).powi(2)).sum::<f64>() * g.step();
        assert!(d.sqrt() < 1e-10);
        assert!((s.l2norm() - 1.0).abs() < 1e-12);
        assert!(matches!(wh_shift(PhasePoint::new(7.0, 0.0), &e0), Err(Error::SupportOverflow(_))));
    }

    #[test]
    fn translation_covariance() {
        let g = Grid::baseline();
        assert_eq!(zak_translate_check(LatticeIndex::new(0, 0), &hermite_signal(0, g), 64).unwrap(), 0.0);
        assert!(zak_translate_check(LatticeIndex::new(1, 0), &hermite_signal(0, g), 64).unwrap() < 1e-6);
        assert!(zak_translate_check(LatticeIndex::new(0, 1), &hermite_signal(1, g), 64).unwrap() < 1e-6);
    }

    #[test]
    fn a_operator_kills_the_gaussian() {
        let g = Grid::baseline();
        let z = zak(&hermite_signal(0, g), 64).unwrap();
        let az = a_operator_zak(&z);
        assert!(az.values().iter().all(|v| v.norm() < 1e-5));
    }
}
