//! Gabor atoms, the Gabor transform, series synthesis and tail estimates.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{loc_integral, pairwise_sum, Grid, SampledSignal};
use crate::phaseplane::{LatticeIndex, PhasePoint};

/// Atoms must keep this distance from the truncation boundary.
pub const ATOM_MARGIN: f64 = 4.0;
/// Margin used for synthesis inside expansions and decompositions; the
/// Gaussian is below 1e-8 at this distance.
pub const SYNTHESIS_MARGIN: f64 = 2.0;
/// Beyond this distance from its centre an atom is below 1e-66.
const WINDOW_CUTOFF: f64 = 7.0;

fn norm_const() -> f64 {
    2f64.powf(0.25)
}

fn atom_value(l: PhasePoint, x: f64) -> Complex64 {
    let d = x - l.p;
    Complex64::from_polar(norm_const() * (-PI * d * d).exp(), 2.0 * PI * l.theta * x)
}

fn window(grid: Grid, centre: f64) -> std::ops::Range<usize> {
    let h = grid.step();
    let lo = ((centre - WINDOW_CUTOFF + grid.half_width()) / h).floor().max(0.0) as usize;
    let hi = (((centre + WINDOW_CUTOFF + grid.half_width()) / h).ceil() as usize + 1).min(grid.len());
    lo.min(hi)..hi
}

fn check_margin(l: PhasePoint, grid: Grid, margin: f64) -> Result<()> {
    let limit = grid.half_width() - margin;
    if l.p.abs() > limit + 1e-12 {
        return Err(Error::OutOfSafeRegion { p: l.p, limit });
    }
    Ok(())
}

/// Sampled coherent state `e_λ(x) = 2^{1/4} exp(-π(x-p)² + 2πiθx)`.
pub fn atom(l: PhasePoint, grid: Grid) -> Result<SampledSignal> {
    check_margin(l, grid, ATOM_MARGIN)?;
    Ok(atom_unchecked(l, grid))
}

pub(crate) fn atom_with_margin(l: PhasePoint, grid: Grid, margin: f64) -> Result<SampledSignal> {
    check_margin(l, grid, margin)?;
    Ok(atom_unchecked(l, grid))
}

/// Sampled atom without the safe-region check; truncated by the grid.
pub fn atom_unchecked(l: PhasePoint, grid: Grid) -> SampledSignal {
    let mut s = SampledSignal::zeros(grid);
    let w = window(grid, l.p);
    let vals = s.values_mut();
    for n in w {
        vals[n] = atom_value(l, grid.x(n));
    }
    s
}

/// Closed form `<e_λ | e_μ> = exp(πi(p+q)(θ-η) - π|λ-μ|²/2)`.
pub fn atom_inner(l: PhasePoint, m: PhasePoint) -> Complex64 {
    let d = l - m;
    Complex64::from_polar((-0.5 * PI * d.norm_sq()).exp(), PI * (l.p + m.p) * (l.theta - m.theta))
}

/// `σ₀ = Σ_k exp(-πk²/2)`, the synthesis bound.
pub fn sigma0() -> f64 {
    (-40..=40i32).map(|k| (-0.5 * PI * (k * k) as f64).exp()).sum()
}

/// `<f | e_μ>` for a single phase point, with the atom truncated to the grid.
pub fn gabor_value(f: &SampledSignal, m: PhasePoint) -> Complex64 {
    let grid = f.grid();
    let w = window(grid, m.p);
    let vals = f.values();
    let h = grid.step();
    let start = w.start;
    pairwise_sum(w.len(), |i| {
        let n = start + i;
        vals[n] * atom_value(m, grid.x(n)).conj()
    }) * h
}

/// Rectangular grid of phase points with equal spacing in `p` and `θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub p_min: f64,
    pub theta_min: f64,
    pub step: f64,
    pub np: usize,
    pub ntheta: usize,
}

impl PhaseGrid {
    /// The square `|p|, |θ| <= half` with spacing `step`.
    pub fn square(half: f64, step: f64) -> Result<Self> {
        if !(half > 0.0 && step > 0.0) {
            return Err(Error::InvalidParameter(format!("phase box {half} / step {step}")));
        }
        let cells = 2.0 * half / step;
        if (cells - cells.round()).abs() > 1e-9 * cells {
            return Err(Error::InvalidParameter(format!("phase step {step} does not divide the box {half}")));
        }
        let n = cells.round() as usize + 1;
        Ok(PhaseGrid { p_min: -half, theta_min: -half, step, np: n, ntheta: n })
    }

    pub fn point(&self, i: usize, j: usize) -> PhasePoint {
        PhasePoint::new(self.p_min + i as f64 * self.step, self.theta_min + j as f64 * self.step)
    }

    pub fn len(&self) -> usize {
        self.np * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn p_max(&self) -> f64 {
        self.p_min + (self.np as f64 - 1.0) * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = PhasePoint> + '_ {
        (0..self.np).flat_map(move |i| (0..self.ntheta).map(move |j| self.point(i, j)))
    }
}

/// Values `V(λ) = <f | e_λ>` on a [`PhaseGrid`], row-major in `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaborField {
    pub grid: PhaseGrid,
    pub values: Vec<Complex64>,
}

impl GaborField {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.ntheta + j]
    }

    /// `Σ |V|² Δλ²`.
    pub fn mass(&self) -> f64 {
        self.weighted_mass(|_| 1.0)
    }

    /// `Σ w(λ) |V(λ)|² Δλ²`.
    pub fn weighted_mass(&self, w: impl Fn(PhasePoint) -> f64) -> f64 {
        let g = self.grid;
        let nt = g.ntheta;
        pairwise_sum(self.values.len(), |idx| {
            Complex64::new(w(g.point(idx / nt, idx % nt)) * self.values[idx].norm_sqr(), 0.0)
        })
        .re * g.step
            * g.step
    }
}

/// Gabor transform of `f` on `grid`. The box may extend to `|p| <= T`;
/// atoms near the edge are truncated by the signal grid.
pub fn gabor_transform(f: &SampledSignal, grid: PhaseGrid) -> Result<GaborField> {
    let sg = f.grid();
    let t = sg.half_width();
    if grid.p_min < -t - 1e-12 || grid.p_max() > t + 1e-12 {
        return Err(Error::OutOfSafeRegion { p: grid.p_min.abs().max(grid.p_max().abs()), limit: t });
    }
    let h = sg.step();
    let modulations: Vec<Vec<Complex64>> = (0..grid.ntheta)
        .map(|j| {
            let theta = grid.theta_min + j as f64 * grid.step;
            (0..sg.len()).map(|n| Complex64::from_polar(1.0, -2.0 * PI * theta * sg.x(n))).collect()
        })
        .collect();
    let vals = f.values();
    let rows: Vec<Vec<Complex64>> = (0..grid.np)
        .into_par_iter()
        .map(|i| {
            let p = grid.p_min + i as f64 * grid.step;
            let w = window(sg, p);
            let start = w.start;
            let windowed: Vec<Complex64> = w
                .map(|n| {
                    let d = sg.x(n) - p;
                    vals[n] * (norm_const() * (-PI * d * d).exp() * h)
                })
                .collect();
            (0..grid.ntheta)
                .map(|j| {
                    let m = &modulations[j];
                    pairwise_sum(windowed.len(), |k| windowed[k] * m[start + k])
                })
                .collect()
        })
        .collect();
    Ok(GaborField { grid, values: rows.concat() })
}

/// Grid approximation of `∫ V(λ) e_λ dλ`.
pub fn inverse_gabor_transform(field: &GaborField, signal_grid: Grid) -> SampledSignal {
    let g = field.grid;
    let w = g.step * g.step;
    let points: Vec<(PhasePoint, Complex64)> =
        g.points().zip(&field.values).map(|(l, v)| (l, v * w)).collect();
    synthesize_points(&points, signal_grid)
}

/// `Σ c e_λ` over arbitrary phase points, without safe-region checks.
///
/// Each output sample sums its atoms in the order given, so the result does
/// not depend on thread scheduling.
pub fn synthesize_points(points: &[(PhasePoint, Complex64)], grid: Grid) -> SampledSignal {
    const CHUNK: usize = 64;
    let nchunks = grid.len().div_ceil(CHUNK);
    let chunks: Vec<Vec<Complex64>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(grid.len());
            let (xlo, xhi) = (grid.x(lo), grid.x(hi - 1));
            let mut out = vec![Complex64::new(0.0, 0.0); hi - lo];
            for (l, coef) in points {
                if l.p + WINDOW_CUTOFF < xlo || l.p - WINDOW_CUTOFF > xhi {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += coef * atom_value(*l, grid.x(lo + k));
                }
            }
            out
        })
        .collect();
    SampledSignal::from_values(grid, chunks.concat()).expect("chunk lengths add up")
}

/// Optional order-m sharp block: coefficients `b_j` of the dual atoms built
/// on `nodes` (indices of sharp points).
#[derive(Clone, Debug, PartialEq)]
pub struct SharpBlock {
    pub nodes: Vec<LatticeIndex>,
    pub values: Vec<Complex64>,
}

/// Finitely supported coefficients over the relaxed lattice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientSet {
    pub lattice: BTreeMap<LatticeIndex, Complex64>,
    pub sharp: BTreeMap<LatticeIndex, Complex64>,
    pub sharp_block: Option<SharpBlock>,
}

impl CoefficientSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty() && self.sharp.is_empty() && self.sharp_block.is_none()
    }

    pub fn norm_sq(&self) -> f64 {
        let block = self.sharp_block.as_ref().map_or(0.0, |b| b.values.iter().map(|v| v.norm_sqr()).sum());
        self.lattice.values().map(|v| v.norm_sqr()).sum::<f64>() + self.sharp.values().map(|v| v.norm_sqr()).sum::<f64>() + block
    }

    pub fn l2(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// All atoms with their coefficients; the sharp block is expanded into
    /// sharp atoms through the dual-atom mixing matrix.
    pub fn atoms(&self) -> Result<Vec<(PhasePoint, Complex64)>> {
        let mut out: Vec<(PhasePoint, Complex64)> =
            self.lattice.iter().map(|(i, c)| (i.lattice_point(), *c)).collect();
        out.extend(self.sharp.iter().map(|(i, c)| (i.sharp_point(), *c)));
        if let Some(block) = &self.sharp_block {
            let h = crate::higher::mixing_matrix(&block.nodes)?;
            for (s, node) in block.nodes.iter().enumerate() {
                let c: Complex64 = block.values.iter().enumerate().map(|(j, b)| b * h[(j, s)]).sum();
                out.push((node.sharp_point(), c));
            }
        }
        Ok(out)
    }
}

/// `Σ c_λ e_λ`; every atom must lie in the safe region.
pub fn synthesize(c: &CoefficientSet, grid: Grid) -> Result<SampledSignal> {
    synthesize_with_margin(c, grid, ATOM_MARGIN)
}

/// `Σ c_λ e_λ` with atoms allowed up to `|p| <= T - margin`.
pub fn synthesize_with_margin(c: &CoefficientSet, grid: Grid, margin: f64) -> Result<SampledSignal> {
    let atoms = c.atoms()?;
    for (l, _) in &atoms {
        check_margin(*l, grid, margin)?;
    }
    Ok(synthesize_points(&atoms, grid))
}

/// Measured tail of a Gabor series against its Gaussian bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailMass {
    pub measured: f64,
    pub bound: f64,
}

const TAIL_STEP: f64 = 1.0 / 16.0;
const TAIL_REFINE: usize = 32;
const TAIL_MARGIN: f64 = 6.0;
/// Two-point Gauss–Legendre node offset as a fraction of the cell width.
const GL2_OFFSET: f64 = 0.288_675_134_594_812_9;

/// `∫_{Φ∖G(r)} |<g|e_μ>|² dμ` for `g = Σ_{λ∈G} c^λ e_λ`, against
/// `exp(-πr²) Σ|c^λ|²`.
///
/// The transform is evaluated in closed form; cells crossing the boundary of
/// `G(r)` are subdivided.
pub fn tail_mass(c: &CoefficientSet, r: f64) -> Result<TailMass> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("tail radius {r} must be positive")));
    }
    let terms: Vec<(PhasePoint, Complex64)> = c
        .lattice
        .iter()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(i, v)| (i.lattice_point(), *v))
        .collect();
    let bound = (-PI * r * r).exp() * c.lattice.values().map(|v| v.norm_sqr()).sum::<f64>();
    if terms.is_empty() {
        return Ok(TailMass { measured: 0.0, bound });
    }
    let density = |m: PhasePoint| -> f64 {
        terms.iter().map(|(l, v)| v * atom_inner(*l, m)).sum::<Complex64>().norm_sqr()
    };
    let dist = |m: PhasePoint| terms.iter().map(|(l, _)| m.dist(*l)).fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (terms[0].0, terms[0].0);
    for (l, _) in &terms {
        lo = PhasePoint::new(lo.p.min(l.p), lo.theta.min(l.theta));
        hi = PhasePoint::new(hi.p.max(l.p), hi.theta.max(l.theta));
    }
    let ext = r + TAIL_MARGIN;
    let (p0, t0) = (lo.p - ext, lo.theta - ext);
    let np = ((hi.p + ext - p0) / TAIL_STEP).ceil() as usize;
    let nt = ((hi.theta + ext - t0) / TAIL_STEP).ceil() as usize;
    let half_diag = TAIL_STEP * std::f64::consts::FRAC_1_SQRT_2;
    let rows: Vec<f64> = (0..np)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(nt);
            for j in 0..nt {
                let mid = PhasePoint::new(p0 + (i as f64 + 0.5) * TAIL_STEP, t0 + (j as f64 + 0.5) * TAIL_STEP);
                let d = dist(mid);
                if d > r + half_diag {
                    let o = TAIL_STEP * GL2_OFFSET;
                    let v = density(mid + PhasePoint::new(-o, -o))
                        + density(mid + PhasePoint::new(-o, o))
                        + density(mid + PhasePoint::new(o, -o))
                        + density(mid + PhasePoint::new(o, o));
                    row.push(0.25 * v * TAIL_STEP * TAIL_STEP);
                } else if d >= r - half_diag {
                    let s = TAIL_STEP / TAIL_REFINE as f64;
                    let mut acc = 0.0;
                    for a in 0..TAIL_REFINE {
                        for b in 0..TAIL_REFINE {
                            let m = PhasePoint::new(
                                p0 + i as f64 * TAIL_STEP + (a as f64 + 0.5) * s,
                                t0 + j as f64 * TAIL_STEP + (b as f64 + 0.5) * s,
                            );
                            // Linear ramp across the boundary; its bias cancels
                            // to second order, unlike a hard midpoint test.
                            let frac = (0.5 + (dist(m) - r) / s).clamp(0.0, 1.0);
                            if frac > 0.0 {
                                acc += frac * density(m);
                            }
                        }
                    }
                    row.push(acc * s * s);
                }
            }
            pairwise_sum(row.len(), |k| Complex64::new(row[k], 0.0)).re
        })
        .collect();
    let measured = pairwise_sum(rows.len(), |k| Complex64::new(rows[k], 0.0)).re;
    Ok(TailMass { measured, bound })
}

/// `∫ I(x - q) |f(x)|² dx`, which equals the Gabor mass over `p >= q`.
pub fn half_plane_mass(f: &SampledSignal, q: f64) -> f64 {
    let g = f.grid();
    let v = f.values();
    pairwise_sum(v.len(), |n| Complex64::new(loc_integral(g.x(n) - q) * v[n].norm_sqr(), 0.0)).re * g.step()
}

/// Direct integral of `|<f|e_λ>|²` over `p >= q`, the left-hand side of the
/// half-plane identity: 4-point Gauss–Legendre panels of width 1/4 in `p`
/// from `q` to `T`, uniform spacing `theta_step` over `|θ| <= theta_box`.
pub fn half_plane_mass_direct(f: &SampledSignal, q: f64, theta_box: f64, theta_step: f64) -> f64 {
    const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let t = f.grid().half_width();
    let start = q.max(-t);
    if start >= t {
        return 0.0;
    }
    let panels = ((t - start) / 0.25).ceil() as usize;
    let width = (t - start) / panels as f64;
    let nt = (2.0 * theta_box / theta_step).round() as usize + 1;
    let terms: Vec<(f64, f64)> = (0..panels)
        .flat_map(|k| {
            let mid = start + (k as f64 + 0.5) * width;
            NODES.iter().zip(WEIGHTS).map(move |(x, w)| (mid + 0.5 * width * x, 0.5 * width * w))
        })
        .collect();
    let rows: Vec<f64> = terms
        .par_iter()
        .map(|(p, w)| {
            let s: f64 = (0..nt)
                .map(|j| gabor_value(f, PhasePoint::new(*p, -theta_box + j as f64 * theta_step)).norm_sqr())
                .sum();
            s * theta_step * w
        })
        .collect();
    rows.iter().sum()
}
