//! Relaxed Gabor expansion: lattice atoms plus one sharp atom.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gabor::{self, CoefficientSet, PhaseGrid, SYNTHESIS_MARGIN};
use crate::numerics::{theta, SampledSignal, ThetaConfig};
use crate::phaseplane::LatticeIndex;
use crate::zak::{zak, ZakEvaluator, ZakField};

/// Sub-cells per side when refining the quadrature cells next to `♯`.
const REFINE: usize = 8;

/// Baseline phase box and spacing for H^δ norms.
pub const HDELTA_BOX: f64 = 8.0;
pub const HDELTA_STEP: f64 = 1.0 / 16.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionOptions {
    /// Zak grid size `N`.
    pub zak_n: usize,
    pub theta: ThetaConfig,
    /// Refine the quadrature cells adjacent to `♯`.
    pub refine: bool,
    /// Index of the sharp point; `(0, 0)` is `♯ = (1/2, 1/2)`.
    pub sharp: LatticeIndex,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions { zak_n: 64, theta: ThetaConfig::default(), refine: true, sharp: LatticeIndex::new(0, 0) }
    }
}

fn i_theta0(cfg: ThetaConfig) -> Complex64 {
    Complex64::new(0.0, 1.0) * theta(Complex64::new(0.0, 0.0), cfg)
}

/// `γ♯(f) = (1/iΘ(0)) Σ_q (-1)^q f(q + 1/2)`.
pub fn sharp_functional(f: &SampledSignal) -> Result<Complex64> {
    sharp_functional_cfg(f, ThetaConfig::default())
}

pub fn sharp_functional_cfg(f: &SampledSignal, cfg: ThetaConfig) -> Result<Complex64> {
    let grid = f.grid();
    if grid.index_of(0.5).is_none() || !grid.unit_divisible() {
        return Err(Error::MissingHalfInteger(0.5));
    }
    let t = grid.half_width();
    let mut s = Complex64::new(0.0, 0.0);
    let q_lo = (-t - 0.5).ceil() as i64;
    let q_hi = (t - 0.5).floor() as i64;
    for q in q_lo..=q_hi {
        let x = q as f64 + 0.5;
        let v = f.values()[grid.index_of(x).ok_or(Error::MissingHalfInteger(x))?];
        s += if q.rem_euclid(2) == 0 { v } else { -v };
    }
    Ok(s / i_theta0(cfg))
}

/// Functional dual to the relocated sharp atom `e_{♯+(k,j)}`: `(-1)^j γ♯(f)`.
pub fn sharp_functional_at(f: &SampledSignal, sharp: LatticeIndex, cfg: ThetaConfig) -> Result<Complex64> {
    let g = sharp_functional_cfg(f, cfg)?;
    Ok(if sharp.j.rem_euclid(2) == 0 { g } else { -g })
}

/// `γ♯` through the interpolated Zak transform, `Zf(♯) / (iΘ(0))`.
pub fn sharp_functional_zak(f: &SampledSignal, n: usize) -> Result<Complex64> {
    let z = zak(f, n)?;
    Ok(z.interpolate(0.5, 0.5) / i_theta0(ThetaConfig::default()))
}

/// Coefficients of the relaxed expansion of a signal.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedExpansion {
    pub sharp_index: LatticeIndex,
    /// `γ♯(f)` for the chosen sharp point.
    pub sharp: Complex64,
    /// Lattice coefficients for `|k|, |j| <= R` plus the sharp entry.
    pub coefficients: CoefficientSet,
    pub cutoff: usize,
    /// Largest mismatch of `F` across the edges of the unit square.
    pub seam_mismatch: f64,
}

impl RelaxedExpansion {
    pub fn lattice(&self, k: i64, j: i64) -> Complex64 {
        self.coefficients.lattice.get(&LatticeIndex::new(k, j)).copied().unwrap_or_default()
    }

    pub fn l2(&self) -> f64 {
        self.coefficients.l2()
    }

    /// Synthesis of the truncated expansion.
    pub fn synthesize(&self, grid: crate::numerics::Grid) -> Result<SampledSignal> {
        gabor::synthesize_with_margin(&self.coefficients, grid, SYNTHESIS_MARGIN)
    }
}

/// Relaxed expansion with default options.
pub fn relaxed_coefficients(f: &SampledSignal, cutoff: usize) -> Result<RelaxedExpansion> {
    relaxed_coefficients_with(f, cutoff, &ExpansionOptions::default())
}

pub fn relaxed_coefficients_with(f: &SampledSignal, cutoff: usize, opts: &ExpansionOptions) -> Result<RelaxedExpansion> {
    let gamma = sharp_functional_at(f, opts.sharp, opts.theta)?;
    let mu = opts.sharp.sharp_point();
    let e_mu = gabor::atom_with_margin(mu, f.grid(), SYNTHESIS_MARGIN)?;
    let f_sharp = f.axpy(-gamma, &e_mu)?;
    let (lattice, seam_mismatch) = lattice_coefficients(&f_sharp, cutoff, opts)?;
    let mut coefficients = CoefficientSet { lattice, ..Default::default() };
    coefficients.sharp.insert(opts.sharp, gamma);
    Ok(RelaxedExpansion { sharp_index: opts.sharp, sharp: gamma, coefficients, cutoff, seam_mismatch })
}

/// Fourier coefficients of `F = e^{πy²} Zf♯ / Θ(ξ+iy)` for `|k|, |j| <= R`,
/// `c_(k,j) = ∫∫ e^{-2πi(kξ + jy)} F`. Returns the coefficients and the seam
/// mismatch of `F`. `f_sharp` must have `Zf♯(♯) = 0`.
pub(crate) fn lattice_coefficients(
    f_sharp: &SampledSignal,
    cutoff: usize,
    opts: &ExpansionOptions,
) -> Result<(BTreeMap<LatticeIndex, Complex64>, f64)> {
    let n = opts.zak_n;
    let z = zak(f_sharp, n)?;
    let big_f = theta_quotient(&z, opts.theta)?;
    let r = cutoff as i64;
    let nf = n as f64;
    let weight = 1.0 / (nf * nf);

    // Sub-cell variation of F inside the cells next to ♯, added on top of
    // the coarse midpoint rule. Vanishes when F is constant on those cells.
    let mut fine: Vec<(f64, f64, Complex64)> = Vec::new();
    if opts.refine {
        let mut ev = ZakEvaluator::new(f_sharp);
        let h = 1.0 / nf;
        for i in (n / 2 - 1)..=(n / 2 + 1) {
            for j in (n / 2 - 1)..=(n / 2) {
                let mid = big_f[i * n + j];
                let (y0, x0) = (z.y(i) - 0.5 * h, j as f64 * h);
                for a in 0..REFINE {
                    for b in 0..REFINE {
                        let y = y0 + (a as f64 + 0.5) * h / REFINE as f64;
                        let xi = x0 + (b as f64 + 0.5) * h / REFINE as f64;
                        let th = theta(Complex64::new(xi, y), opts.theta);
                        let v = (PI * y * y).exp() * ev.eval(y, xi) / th;
                        fine.push((y, xi, v - mid));
                    }
                }
            }
        }
    }
    let fine_w = weight / (REFINE * REFINE) as f64;

    let rows: Vec<Vec<(LatticeIndex, Complex64)>> = (-r..=r)
        .into_par_iter()
        .map(|j| {
            // Row sums over y for this θ-frequency, then the ξ transform.
            let row: Vec<Complex64> = (0..n)
                .map(|jj| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        s += big_f[i * n + jj] * Complex64::from_polar(1.0, -2.0 * PI * j as f64 * z.y(i));
                    }
                    s
                })
                .collect();
            (-r..=r)
                .map(|k| {
                    let mut c = Complex64::new(0.0, 0.0);
                    for (jj, v) in row.iter().enumerate() {
                        c += v * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * z.xi(jj));
                    }
                    c *= weight;
                    let phase = |y: f64, xi: f64| Complex64::from_polar(1.0, -2.0 * PI * (k as f64 * xi + j as f64 * y));
                    for (y, xi, v) in &fine {
                        c += v * phase(*y, *xi) * fine_w;
                    }
                    (LatticeIndex::new(k, j), c)
                })
                .collect()
        })
        .collect();
    let coeffs = rows.into_iter().flatten().collect();
    Ok((coeffs, seam_mismatch(&z, &big_f, opts.theta)))
}

/// `F = e^{πy²} Z / Θ(ξ + iy)` on the Zak grid.
fn theta_quotient(z: &ZakField, cfg: ThetaConfig) -> Result<Vec<Complex64>> {
    let n = z.size();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (y, xi) = (z.y(i), z.xi(j));
            let th = theta(Complex64::new(xi, y), cfg);
            if th.norm() < 1e-300 {
                return Err(Error::ThetaDivision(y, xi));
            }
            out.push((PI * y * y).exp() * z.get(i, j) / th);
        }
    }
    Ok(out)
}

/// Mismatch of `F` between `y = 0` and `y = 1` and between `ξ = 0` and `ξ = 1`.
fn seam_mismatch(z: &ZakField, big_f: &[Complex64], cfg: ThetaConfig) -> f64 {
    let n = z.size();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let xi = z.xi(j);
        let top = PI.exp() * z.get_extended(n as i64, j as i64) / theta(Complex64::new(xi, 1.0), cfg);
        worst = worst.max((top - big_f[j]).norm());
    }
    for i in 0..n {
        let y = z.y(i);
        let left = (PI * y * y).exp() * z.interpolate(y, 0.0) / theta(Complex64::new(0.0, y), cfg);
        let right = (PI * y * y).exp() * z.interpolate(y, 1.0) / theta(Complex64::new(1.0, y), cfg);
        worst = worst.max((left - right).norm());
    }
    worst
}

/// Reconstruction of a signal from its truncated relaxed expansion.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub signal: SampledSignal,
    /// Relative L2 error, 0 for the zero signal.
    pub residual: f64,
    pub expansion: RelaxedExpansion,
}

pub fn reconstruct(f: &SampledSignal, cutoff: usize) -> Result<Reconstruction> {
    reconstruct_with(f, cutoff, &ExpansionOptions::default())
}

pub fn reconstruct_with(f: &SampledSignal, cutoff: usize, opts: &ExpansionOptions) -> Result<Reconstruction> {
    let expansion = relaxed_coefficients_with(f, cutoff, opts)?;
    let signal = expansion.synthesize(f.grid())?;
    let norm = f.l2norm();
    let diff = f.sub(&signal)?.l2norm();
    let residual = if norm > 0.0 { diff / norm } else { diff };
    Ok(Reconstruction { signal, residual, expansion })
}

/// `‖f‖_δ = (∫ (|λ|^δ + 1) |<f|e_λ>|² dλ)^{1/2}` over the baseline box.
pub fn hdelta_norm(f: &SampledSignal, delta: f64) -> Result<f64> {
    hdelta_norm_on(f, delta, PhaseGrid::square(HDELTA_BOX.min(f.grid().half_width()), HDELTA_STEP)?)
}

pub fn hdelta_norm_on(f: &SampledSignal, delta: f64, grid: PhaseGrid) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} must be nonnegative")));
    }
    let field = gabor::gabor_transform(f, grid)?;
    Ok(field.weighted_mass(|l| l.norm().powf(delta) + 1.0).sqrt())
}

/// `‖Σ c e_λ‖ / ‖c‖` for a finitely supported coefficient set, computed on
/// the signal grid.
pub fn uniqueness_probe(c: &CoefficientSet, grid: crate::numerics::Grid) -> Result<f64> {
    let norm = c.l2();
    if norm == 0.0 {
        return Err(Error::ZeroCoefficients);
    }
    Ok(gabor::synthesize(c, grid)?.l2norm() / norm)
}

/// `Σ (|λ| + 1)^{2ε} |γ^λ|²` over the lattice part.
pub fn weighted_coefficient_sum(c: &CoefficientSet, eps: f64) -> f64 {
    c.lattice.iter().map(|(i, v)| (i.lattice_point().norm() + 1.0).powf(2.0 * eps) * v.norm_sqr()).sum()
}
