//! Certainty decomposition: a signal concentrated in `D = K(r)` is written as
//! lattice atoms in `D`, sharp atoms in `D∖K`, and a small residual.
//!
//! Construction, with `K₊ = K(l)`, `U = K(r/2)`, `D₋ = K(r-l)`:
//!
//! 1. `f = f_U + g`, where `f_U` collects the relaxed-expansion terms inside
//!    `U`, with the sharp point relocated into `U∖K`.
//! 2. `g = g₊ + g₋ + g₀` by splitting `∫ <g|e_μ> e_μ dμ` over `K₊`,
//!    `Φ∖D₋` and `D₋∖K₊`.
//! 3. Each `e_μ` with `μ ∈ D₋∖K₊` is expanded to order `m` around its nearest
//!    lattice point `λ`, with sharp nodes in the square `Q(μ)` centred at `λ`.
//!    Integrating against `<g|e_μ> dμ` gives sharp coefficients in `D∖K`,
//!    lattice corrections inside `D`, and lattice terms outside `D` that stay
//!    in the residual.
//!
//! The residual is the exact difference `f - Σ α e_λ - Σ ω e_κ`; the pieces
//! `g₊`, `g₋` and the outside terms are reported for diagnosis.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{E, FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{self, ExpansionOptions};
use crate::gabor::{self, PhaseGrid};
use crate::higher;
use crate::numerics::SampledSignal;
use crate::phaseplane::{lattice_points_in, neighborhood, LatticeIndex, PhaseDomain, PhasePoint};

/// `C_δ` in the residual bound, fitted on random three-atom signals in a disk
/// of radius 2 for `r ∈ {3, 4, 5}`, `m = 2`, `δ = 1`: twice the largest
/// observed ratio (0.115, at `r = 3`).
pub const C_DELTA: f64 = 0.25;

/// Constant of the `g₊` bound `‖g₊‖² <= C exp(-π(r/2-l)²) ‖f‖_δ²`, fitted on
/// the same family (largest observed ratio 4.7e-3).
pub const C_GPLUS: f64 = 0.01;

/// Slope `c` of the atom-count contract `|excess| <= c r √area + c'`. Over
/// disks of radius 2..6 with `r ∈ {3, 4}` the ratio grows from 2.35 to 2.98
/// towards `2√π`, since the excess is essentially `area(D∖K)`.
pub const DOF_SLOPE: f64 = 3.6;
pub const DOF_OFFSET: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertaintyOptions {
    /// Phase-grid spacing for the `μ` integrals.
    pub phase_step: f64,
    /// Half side of the square phase box.
    pub phase_box: f64,
    /// Lattice cutoff of the per-offset order-m expansions.
    pub ring_cutoff: usize,
    pub delta: f64,
    pub c_delta: f64,
    /// Smallest admissible `r`.
    pub min_radius: f64,
    pub expansion: ExpansionOptions,
    /// Also fit the least-squares baseline.
    pub baseline: bool,
}

impl Default for CertaintyOptions {
    fn default() -> Self {
        CertaintyOptions {
            phase_step: 0.125,
            phase_box: 8.0,
            ring_cutoff: 8,
            delta: 1.0,
            c_delta: C_DELTA,
            min_radius: 3.0,
            expansion: ExpansionOptions::default(),
            baseline: false,
        }
    }
}

/// `K ⊂ K₊ ⊂ U ⊂ D₋ ⊂ D`.
#[derive(Clone, Debug)]
pub struct NestedDomains {
    pub k: PhaseDomain,
    pub r: f64,
    /// Radius actually used for `K₊` and `D₋`.
    pub l: f64,
    /// `((m+1)/2)^{1/2} + 1`, reported for comparison.
    pub l_nominal: f64,
    pub k_plus: PhaseDomain,
    pub u: PhaseDomain,
    pub d_minus: PhaseDomain,
    pub d: PhaseDomain,
    /// Sharp nodes of `Q` relative to its centre lattice point.
    pub nodes: Vec<LatticeIndex>,
}

impl NestedDomains {
    /// `l = max_s |μ_s - λ| + 1/√2` bounds `|μ - μ_s|` for every `μ` whose
    /// nearest lattice point is `λ`.
    pub fn new(k: &PhaseDomain, r: f64, m: usize) -> Result<Self> {
        if !k.is_bounded() {
            return Err(Error::UnboundedDomain);
        }
        if !(r >= 0.0) {
            return Err(Error::NegativeRadius(r));
        }
        let nodes = higher::default_nodes(m, PhasePoint::default())?;
        let reach = nodes.iter().map(|n| n.sharp_point().norm()).fold(0.0, f64::max);
        let l = reach + FRAC_1_SQRT_2;
        let l_nominal = ((m as f64 + 1.0) / 2.0).sqrt() + 1.0;
        Ok(NestedDomains {
            k: k.clone(),
            r,
            l,
            l_nominal,
            k_plus: neighborhood(k, l)?,
            u: neighborhood(k, r / 2.0)?,
            d_minus: neighborhood(k, (r - l).max(0.0))?,
            d: neighborhood(k, r)?,
            nodes,
        })
    }

    /// Checks the chain of inclusions on a sampling grid of the given step
    /// over the bounding box of `D`.
    pub fn is_nested(&self, step: f64) -> bool {
        if !(self.l <= self.r / 2.0 && self.r / 2.0 <= self.r - self.l) {
            return false;
        }
        let Some(b) = self.d.bbox() else { return false };
        let chain = [&self.k, &self.k_plus, &self.u, &self.d_minus, &self.d];
        let np = ((b.max.p - b.min.p) / step).ceil() as usize;
        let nt = ((b.max.theta - b.min.theta) / step).ceil() as usize;
        for i in 0..=np {
            for j in 0..=nt {
                let x = PhasePoint::new(b.min.p + i as f64 * step, b.min.theta + j as f64 * step);
                for w in chain.windows(2) {
                    if w[0].contains(x) && !w[1].contains(x) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Mass of the Gabor transform outside `D`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Concentration {
    /// Grid integral over the phase box minus `D`.
    pub in_box: f64,
    /// `max(0, ‖f‖² - box mass)`: mass not seen by the box.
    pub out_of_box: f64,
}

impl Concentration {
    pub fn total(&self) -> f64 {
        self.in_box + self.out_of_box
    }
}

/// `∫_{Φ∖D} |<f|e_μ>|² dμ` with the default phase grid.
pub fn concentration(f: &SampledSignal, d: &PhaseDomain) -> Result<f64> {
    let o = CertaintyOptions::default();
    let grid = PhaseGrid::square(o.phase_box.min(f.grid().half_width()), o.phase_step)?;
    Ok(concentration_on(f, d, grid)?.total())
}

pub fn concentration_on(f: &SampledSignal, d: &PhaseDomain, grid: PhaseGrid) -> Result<Concentration> {
    if !d.is_bounded() {
        return Err(Error::UnboundedDomain);
    }
    let field = gabor::gabor_transform(f, grid)?;
    Ok(concentration_of_field(f, d, &field))
}

fn concentration_of_field(f: &SampledSignal, d: &PhaseDomain, field: &gabor::GaborField) -> Concentration {
    let in_box = field.weighted_mass(|l| if d.contains(l) { 0.0 } else { 1.0 });
    let out_of_box = (f.norm_sq() - field.mass()).max(0.0);
    Concentration { in_box, out_of_box }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertaintyReport {
    pub concentration: f64,
    pub residual_norm: f64,
    /// `residual_norm / ‖f‖`.
    pub relative_residual: f64,
    /// `concentration^{1/2} + C_δ r^δ e^{-r/e} ‖f‖_δ`.
    pub bound_value: f64,
    pub atom_count: usize,
    pub lattice_count: usize,
    pub sharp_count: usize,
    pub r: f64,
    pub m: usize,
    pub delta: f64,
    pub c_delta: f64,
    pub l: f64,
    pub l_nominal: f64,
    pub sharp_index: LatticeIndex,
    pub f_norm: f64,
    pub f_delta_norm: f64,
    pub g_plus_norm: f64,
    pub g_minus_norm: f64,
    /// `‖Σ_{Λ∖D} ω^ν e_ν‖`.
    pub outside_norm: f64,
    /// `‖φ_r - (g₊ + g₋ + Σ_{Λ∖D} ω^ν e_ν)‖`: phase-grid and truncation error.
    pub quadrature_defect: f64,
    /// Residual of the least-squares projection onto the same atoms.
    pub baseline_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CertaintyDecomposition {
    /// `α^λ`, `λ ∈ Λ ∩ D`.
    pub alpha: BTreeMap<LatticeIndex, Complex64>,
    /// `ω^κ`, `κ ∈ (Λ+♯) ∩ (D∖K)`, keyed by sharp index.
    pub omega: BTreeMap<LatticeIndex, Complex64>,
    pub residual: SampledSignal,
    pub report: CertaintyReport,
}

impl CertaintyDecomposition {
    /// `Σ α e_λ + Σ ω e_κ`.
    pub fn synthesize_atoms(&self, grid: crate::numerics::Grid) -> SampledSignal {
        gabor::synthesize_points(&atom_list(&self.alpha, &self.omega), grid)
    }

    /// `‖f - Σ α e_λ - Σ ω e_κ - φ_r‖`.
    pub fn exactness(&self, f: &SampledSignal) -> Result<f64> {
        Ok(f.sub(&self.synthesize_atoms(f.grid()))?.sub(&self.residual)?.l2norm())
    }
}

fn atom_list(
    alpha: &BTreeMap<LatticeIndex, Complex64>,
    omega: &BTreeMap<LatticeIndex, Complex64>,
) -> Vec<(PhasePoint, Complex64)> {
    alpha
        .iter()
        .map(|(i, c)| (i.lattice_point(), *c))
        .chain(omega.iter().map(|(i, c)| (i.sharp_point(), *c)))
        .collect()
}

/// Sharp point of `U∖K` closest to `K`, ties broken by index.
pub fn relocated_sharp(dom: &NestedDomains) -> Result<LatticeIndex> {
    let mut best: Option<(f64, LatticeIndex)> = None;
    for idx in lattice_points_in(&dom.u, true)? {
        let p = idx.sharp_point();
        if dom.k.contains(p) {
            continue;
        }
        let d = dom.k.distance(p);
        if best.map_or(true, |(bd, _)| d < bd - 1e-12) {
            best = Some((d, idx));
        }
    }
    best.map(|b| b.1).ok_or_else(|| Error::NoSharpPoint("U∖K contains no sharp point".into()))
}

/// Order-m expansion of `e_o`, written over sharp nodes and lattice points.
struct OffsetExpansion {
    beta: Vec<Complex64>,
    lattice: Vec<(LatticeIndex, Complex64)>,
}

fn offset_expansion(
    o: PhasePoint,
    nodes: &[LatticeIndex],
    mixing: &DMatrix<Complex64>,
    grid: crate::numerics::Grid,
    opts: &CertaintyOptions,
) -> Result<OffsetExpansion> {
    let m = nodes.len() - 1;
    let e = gabor::atom(o, grid)?;
    let ex = higher::order_m_coefficients(&e, m, Some(nodes), opts.ring_cutoff, &opts.expansion)?;
    let beta = (0..nodes.len()).map(|s| (0..=m).map(|j| ex.sharp_block[j] * mixing[(j, s)]).sum()).collect();
    let lattice = ex.lattice.lattice.into_iter().collect();
    Ok(OffsetExpansion { beta, lattice })
}

/// Decomposition with default options.
pub fn decompose(f: &SampledSignal, k: &PhaseDomain, r: f64, m: usize) -> Result<CertaintyDecomposition> {
    decompose_with(f, k, r, m, &CertaintyOptions::default())
}

pub fn decompose_with(
    f: &SampledSignal,
    k: &PhaseDomain,
    r: f64,
    m: usize,
    opts: &CertaintyOptions,
) -> Result<CertaintyDecomposition> {
    if r < opts.min_radius {
        return Err(Error::InvalidParameter(format!("r = {r} below the minimum {}", opts.min_radius)));
    }
    if m as f64 > r - 1.0 {
        return Err(Error::OrderExceedsRadius { m, r });
    }
    let dom = NestedDomains::new(k, r, m)?;
    let grid = f.grid();
    let f_norm = f.l2norm();

    // f = f_U + g
    let sharp = relocated_sharp(&dom)?;
    let ub = dom.u.bbox().ok_or(Error::UnboundedDomain)?;
    let cutoff = [ub.min.p, ub.max.p, ub.min.theta, ub.max.theta].iter().map(|v| v.abs()).fold(0.0, f64::max).ceil() as usize + 1;
    let xopts = ExpansionOptions { sharp, ..opts.expansion };
    let relaxed = expansion::relaxed_coefficients_with(f, cutoff, &xopts)?;
    let mut alpha: BTreeMap<LatticeIndex, Complex64> =
        lattice_points_in(&dom.d, false)?.into_iter().map(|i| (i, Complex64::default())).collect();
    let mut omega: BTreeMap<LatticeIndex, Complex64> = lattice_points_in(&dom.d, true)?
        .into_iter()
        .filter(|i| !dom.k.contains(i.sharp_point()))
        .map(|i| (i, Complex64::default()))
        .collect();
    let mut f_u_atoms = vec![(sharp.sharp_point(), relaxed.sharp)];
    for (i, c) in &relaxed.coefficients.lattice {
        if dom.u.contains(i.lattice_point()) {
            *alpha.get_mut(i).expect("U inside D") += c;
            f_u_atoms.push((i.lattice_point(), *c));
        }
    }
    *omega.get_mut(&sharp).expect("U∖K inside D∖K") += relaxed.sharp;
    let g = f.sub(&gabor::synthesize_points(&f_u_atoms, grid))?;

    // g = g₊ + g₋ + g₀
    let pgrid = PhaseGrid::square(opts.phase_box.min(grid.half_width()), opts.phase_step)?;
    let field = gabor::gabor_transform(&g, pgrid)?;
    let w = pgrid.step * pgrid.step;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut ring = Vec::new();
    for (mu, v) in pgrid.points().zip(&field.values) {
        if dom.k_plus.contains(mu) {
            plus.push((mu, v * w));
        } else if !dom.d_minus.contains(mu) {
            minus.push((mu, v * w));
        } else {
            ring.push((mu, v * w));
        }
    }

    // Per-offset expansions, keyed by the offset in units of 1e-9.
    let key = |o: PhasePoint| ((o.p * 1e9).round() as i64, (o.theta * 1e9).round() as i64);
    let split = |mu: PhasePoint| {
        let lam = LatticeIndex::new((mu.p + 0.5).floor() as i64, (mu.theta + 0.5).floor() as i64);
        (lam, mu - lam.lattice_point())
    };
    let mut offsets: Vec<PhasePoint> = Vec::new();
    let mut seen = HashMap::new();
    for (mu, _) in &ring {
        let (_, o) = split(*mu);
        seen.entry(key(o)).or_insert_with(|| {
            offsets.push(o);
            offsets.len() - 1
        });
    }
    let mixing = higher::mixing_matrix(&dom.nodes)?;
    let expansions = offsets
        .par_iter()
        .map(|o| offset_expansion(*o, &dom.nodes, &mixing, grid, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut outside: BTreeMap<LatticeIndex, Complex64> = BTreeMap::new();
    for (mu, wv) in &ring {
        let (lam, o) = split(*mu);
        debug_assert!(o.norm() <= FRAC_1_SQRT_2 + 1e-12);
        let ex = &expansions[seen[&key(o)]];
        // e_μ = e^{2πi o_θ p} [(-1)^p Σ β_s e_{λ+n_s} + Σ c_ν e_{λ+ν}]
        let phase = Complex64::from_polar(1.0, 2.0 * PI * o.theta * lam.k as f64) * wv;
        let sign = if lam.k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        for (s, n) in dom.nodes.iter().enumerate() {
            let kappa = lam + *n;
            let slot = omega.get_mut(&kappa).ok_or_else(|| {
                Error::NoSharpPoint(format!("node {kappa:?} of Q({mu}) outside D∖K"))
            })?;
            *slot += ex.beta[s] * phase * sign;
        }
        for (nu, c) in &ex.lattice {
            let t = lam + *nu;
            match alpha.get_mut(&t) {
                Some(a) => *a += c * phase,
                None => *outside.entry(t).or_default() += c * phase,
            }
        }
    }

    let atoms = gabor::synthesize_points(&atom_list(&alpha, &omega), grid);
    let residual = f.sub(&atoms)?;
    let residual_norm = residual.l2norm();

    let g_plus = gabor::synthesize_points(&plus, grid);
    let g_minus = gabor::synthesize_points(&minus, grid);
    let out_atoms: Vec<_> = outside.iter().map(|(i, c)| (i.lattice_point(), *c)).collect();
    let out_sig = gabor::synthesize_points(&out_atoms, grid);
    let defect = residual.sub(&g_plus)?.sub(&g_minus)?.sub(&out_sig)?.l2norm();

    let f_field = gabor::gabor_transform(f, pgrid)?;
    let conc = concentration_of_field(f, &dom.d, &f_field).total();
    let f_delta_norm = f_field.weighted_mass(|l| l.norm().powf(opts.delta) + 1.0).sqrt();
    let bound_value = conc.sqrt() + opts.c_delta * r.powf(opts.delta) * (-r / E).exp() * f_delta_norm;

    let baseline_residual = if opts.baseline {
        let lat: Vec<_> = alpha.keys().copied().collect();
        let sh: Vec<_> = omega.keys().copied().collect();
        Some(least_squares_baseline(f, &lat, &sh, 1e-8)?.1)
    } else {
        None
    };

    let report = CertaintyReport {
        concentration: conc,
        residual_norm,
        relative_residual: if f_norm > 0.0 { residual_norm / f_norm } else { residual_norm },
        bound_value,
        atom_count: alpha.len() + omega.len(),
        lattice_count: alpha.len(),
        sharp_count: omega.len(),
        r,
        m,
        delta: opts.delta,
        c_delta: opts.c_delta,
        l: dom.l,
        l_nominal: dom.l_nominal,
        sharp_index: sharp,
        f_norm,
        f_delta_norm,
        g_plus_norm: g_plus.l2norm(),
        g_minus_norm: g_minus.l2norm(),
        outside_norm: out_sig.l2norm(),
        quadrature_defect: defect,
        baseline_residual,
    };
    Ok(CertaintyDecomposition { alpha, omega, residual, report })
}

/// Least-squares projection of `f` onto lattice and sharp atoms through the
/// normal equations with a ridge term. Not part of the certainty
/// construction; it bounds what any combination of these atoms can achieve.
/// Returns the coefficients (lattice atoms first) and the relative residual.
pub fn least_squares_baseline(
    f: &SampledSignal,
    lattice: &[LatticeIndex],
    sharp: &[LatticeIndex],
    ridge: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let pts: Vec<PhasePoint> =
        lattice.iter().map(|i| i.lattice_point()).chain(sharp.iter().map(|i| i.sharp_point())).collect();
    let n = pts.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty atom set".into()));
    }
    // gram[(a, b)] = <e_b | e_a>
    let mut gram = DMatrix::from_fn(n, n, |a, b| gabor::atom_inner(pts[b], pts[a]));
    for a in 0..n {
        gram[(a, a)] += ridge;
    }
    let rhs = DVector::from_iterator(n, pts.iter().map(|p| gabor::gabor_value(f, *p)));
    let x = gram.lu().solve(&rhs).ok_or_else(|| Error::InvalidParameter("singular Gram matrix".into()))?;
    let coeffs: Vec<Complex64> = x.iter().copied().collect();
    let approx = gabor::synthesize_points(&pts.iter().copied().zip(coeffs.iter().copied()).collect::<Vec<_>>(), f.grid());
    let norm = f.l2norm();
    let diff = f.sub(&approx)?.l2norm();
    Ok((coeffs, if norm > 0.0 { diff / norm } else { diff }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DofReport {
    pub area: f64,
    pub count: usize,
    /// `count - area(D)`.
    pub excess: f64,
}

/// Atom count of the decomposition index sets for `D = K(r)`:
/// `|Λ ∩ D| + |(Λ+♯) ∩ (D∖K)|`.
pub fn degrees_of_freedom_report(k: &PhaseDomain, r: f64) -> Result<DofReport> {
    let d = neighborhood(k, r)?;
    let area = d.area()?;
    let lat = lattice_points_in(&d, false)?.len();
    let sh = lattice_points_in(&d, true)?.into_iter().filter(|i| !k.contains(i.sharp_point())).count();
    let count = lat + sh;
    Ok(DofReport { area, count, excess: count as f64 - area })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::atom;
    use crate::numerics::Grid;

    #[test]
    fn nested_domains() {
        let k = PhaseDomain::disk(PhasePoint::default(), 2.0).unwrap();
        let d = NestedDomains::new(&k, 4.0, 2).unwrap();
        assert!((d.l - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(d.is_nested(0.25));
        // The nominal l does not nest at this scale.
        assert!(d.l_nominal > 2.0);
    }

    #[test]
    fn relocation_is_outside_k() {
        let k = PhaseDomain::disk(PhasePoint::default(), 2.0).unwrap();
        let d = NestedDomains::new(&k, 4.0, 2).unwrap();
        let s = relocated_sharp(&d).unwrap();
        assert!(!k.contains(s.sharp_point()) && d.u.contains(s.sharp_point()));
        assert!(k.distance(s.sharp_point()) < 0.6);
    }

    #[test]
    fn concentration_examples() {
        let g = Grid::baseline();
        let lam = PhasePoint::new(1.0, -1.0);
        let d = PhaseDomain::disk(lam, 3.0).unwrap();
        let c = concentration(&atom(lam, g).unwrap(), &d).unwrap();
        assert!(c <= (-9.0 * PI).exp() + 1e-8, "{c}");
        assert_eq!(concentration(&SampledSignal::zeros(g), &d).unwrap(), 0.0);
        let big = PhaseDomain::disk(PhasePoint::default(), 20.0).unwrap();
        assert!(concentration(&atom(PhasePoint::default(), g).unwrap(), &big).unwrap() < 1e-8);
    }

    #[test]
    fn zero_signal_and_errors() {
        let g = Grid::baseline();
        let k = PhaseDomain::disk(PhasePoint::default(), 1.0).unwrap();
        let dec = decompose(&SampledSignal::zeros(g), &k, 3.0, 2).unwrap();
        assert!(dec.alpha.values().chain(dec.omega.values()).all(|c| c.norm() == 0.0));
        assert_eq!(dec.report.residual_norm, 0.0);
        assert!(matches!(decompose(&SampledSignal::zeros(g), &k, 3.0, 3), Err(Error::OrderExceedsRadius { .. })));
    }

    #[test]
    fn dof_square() {
        let k = PhaseDomain::rect(PhasePoint::new(-1.0, -1.0), PhasePoint::new(2.0, 2.0)).unwrap();
        let rep = degrees_of_freedom_report(&k, 0.0).unwrap();
        assert_eq!(rep.count, 16);
        assert!((rep.area - 9.0).abs() < 1e-9);
    }
}
