//! Ladder operators, dual atoms and the order-m relaxed expansion.
//!
//! The order-m expansion replaces the single sharp atom by `m+1` dual atoms
//! `d_j = Σ_s h_j^s e_{μ_s}` built on sharp nodes `μ_s`, chosen so that
//! `γ♯(a^k d_j) = δ_jk`. Subtracting `Σ_j γ♯(a^j f) d_j` makes the Zak
//! transform vanish at `♯` to order `m`, and the lattice coefficients decay
//! correspondingly faster.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result, MAX_ORDER};
use crate::expansion::{self, ExpansionOptions};
use crate::gabor::{self, CoefficientSet, PhaseGrid, SharpBlock, SYNTHESIS_MARGIN};
use crate::numerics::{spectral_derivative, Grid, SampledSignal};
use crate::phaseplane::{LatticeIndex, PhasePoint};

/// `a f = (1/2π) f' + x f`.
pub fn annihilate(f: &SampledSignal) -> SampledSignal {
    ladder(f, 1.0)
}

/// `a⁺ f = -(1/2π) f' + x f`.
pub fn create(f: &SampledSignal) -> SampledSignal {
    ladder(f, -1.0)
}

fn ladder(f: &SampledSignal, sign: f64) -> SampledSignal {
    let d = spectral_derivative(f.values(), f.grid().step());
    let grid = f.grid();
    let values = f.values().iter().zip(d).enumerate().map(|(n, (v, dv))| dv * (sign / (2.0 * PI)) + v * grid.x(n)).collect();
    SampledSignal::from_values(grid, values).expect("same grid")
}

/// `a^k f`.
pub fn annihilate_pow(f: &SampledSignal, k: usize) -> SampledSignal {
    let mut g = f.clone();
    for _ in 0..k {
        g = annihilate(&g);
    }
    g
}

/// Harmonic oscillator `½(a⁺a + aa⁺)`.
pub fn harmonic(f: &SampledSignal) -> SampledSignal {
    let a = create(&annihilate(f));
    let b = annihilate(&create(f));
    a.add(&b).expect("same grid").scale(Complex64::new(0.5, 0.0))
}

/// Elementary symmetric polynomials `e_0, …, e_n` of `values`.
pub fn elementary_symmetric(values: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); values.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (count, v) in values.iter().enumerate() {
        for k in (1..=count + 1).rev() {
            let prev = e[k - 1];
            e[k] += prev * v;
        }
    }
    e
}

/// Inverse of the Vandermonde matrix `W[j][k] = μ_j^k`, from the
/// coefficients of the Lagrange basis polynomials:
/// `V[a][k] = (-1)^{m-a} e_{m-a}(μ without μ_k) / p'(μ_k)`.
pub fn vandermonde_inverse(nodes: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let size = nodes.len();
    if size == 0 {
        return Err(Error::InvalidParameter("no nodes".into()));
    }
    let m = size - 1;
    let scale = nodes.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut v = DMatrix::from_element(size, size, Complex64::new(0.0, 0.0));
    for (k, mk) in nodes.iter().enumerate() {
        let others: Vec<Complex64> = nodes.iter().enumerate().filter(|(s, _)| *s != k).map(|(_, z)| *z).collect();
        let mut dp = Complex64::new(1.0, 0.0);
        for z in &others {
            let d = mk - z;
            if d.norm() <= 1e-12 * scale {
                return Err(Error::RepeatedNodes);
            }
            dp *= d;
        }
        let e = elementary_symmetric(&others);
        for a in 0..size {
            let sign = if (m - a) % 2 == 0 { 1.0 } else { -1.0 };
            v[(a, k)] = e[m - a] * sign / dp;
        }
    }
    Ok(v)
}

/// `h_j^s = (-1)^{⌊η_s⌋} V[j][s]` for sharp nodes `μ_s = (k_s+1/2, j_s+1/2)`.
pub fn mixing_matrix(nodes: &[LatticeIndex]) -> Result<DMatrix<Complex64>> {
    if nodes.len() > MAX_ORDER + 1 {
        return Err(Error::OrderTooLarge(nodes.len() - 1));
    }
    let z: Vec<Complex64> = nodes.iter().map(|n| n.sharp_point().complex()).collect();
    let mut h = vandermonde_inverse(&z)?;
    for (s, n) in nodes.iter().enumerate() {
        if n.j.rem_euclid(2) == 1 {
            for j in 0..nodes.len() {
                h[(j, s)] = -h[(j, s)];
            }
        }
    }
    Ok(h)
}

/// The `m+1` sharp points nearest to `centre`, ties broken by `(k, j)`.
/// With `centre = ♯` these are the nodes of the default order-m expansion;
/// with `centre` a lattice point they fill the square `Q(μ)` used by the
/// certainty decomposition.
pub fn default_nodes(m: usize, centre: PhasePoint) -> Result<Vec<LatticeIndex>> {
    if m > MAX_ORDER {
        return Err(Error::OrderTooLarge(m));
    }
    let base = LatticeIndex::nearest(centre);
    let mut cands: Vec<(f64, LatticeIndex)> = Vec::new();
    for dk in -3..=3 {
        for dj in -3..=3 {
            let idx = LatticeIndex::new(base.k + dk, base.j + dj);
            cands.push((idx.sharp_point().dist(centre), idx));
        }
    }
    cands.sort_by(|a, b| {
        // Distances of sharp points from a grid centre repeat exactly only up
        // to rounding, so compare with a tolerance.
        if (a.0 - b.0).abs() <= 1e-12 {
            a.1.cmp(&b.1)
        } else {
            a.0.partial_cmp(&b.0).unwrap()
        }
    });
    Ok(cands.into_iter().take(m + 1).map(|c| c.1).collect())
}

/// Dual atoms built on distinct sharp nodes.
#[derive(Clone, Debug)]
pub struct DualAtomSet {
    pub nodes: Vec<LatticeIndex>,
    /// `mixing[(j, s)] = h_j^s`.
    pub mixing: DMatrix<Complex64>,
    pub atoms: Vec<SampledSignal>,
}

impl DualAtomSet {
    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Validates sharp nodes given as phase points.
pub fn sharp_nodes(points: &[PhasePoint]) -> Result<Vec<LatticeIndex>> {
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let idx = LatticeIndex::of_sharp(*p).ok_or(Error::NotSharp(p.p, p.theta))?;
        if out.contains(&idx) {
            return Err(Error::RepeatedNodes);
        }
        out.push(idx);
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("no nodes".into()));
    }
    if out.len() > MAX_ORDER + 1 {
        return Err(Error::OrderTooLarge(out.len() - 1));
    }
    Ok(out)
}

pub fn dual_atoms(nodes: &[PhasePoint], grid: Grid) -> Result<DualAtomSet> {
    dual_atoms_indexed(&sharp_nodes(nodes)?, grid)
}

pub(crate) fn dual_atoms_indexed(nodes: &[LatticeIndex], grid: Grid) -> Result<DualAtomSet> {
    let mixing = mixing_matrix(nodes)?;
    let node_atoms = nodes
        .iter()
        .map(|n| gabor::atom_with_margin(n.sharp_point(), grid, SYNTHESIS_MARGIN))
        .collect::<Result<Vec<_>>>()?;
    let atoms = (0..nodes.len())
        .map(|j| {
            let mut d = SampledSignal::zeros(grid);
            for (s, e) in node_atoms.iter().enumerate() {
                d.add_scaled(mixing[(j, s)], e)?;
            }
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DualAtomSet { nodes: nodes.to_vec(), mixing, atoms })
}

/// `‖f‖_{δ,m} = (Σ_{j<=m} ‖a^j f‖_δ²)^{1/2}`.
pub fn hdelta_m_norm(f: &SampledSignal, delta: f64, m: usize) -> Result<f64> {
    let mut g = f.clone();
    let mut total = 0.0;
    for j in 0..=m {
        if j > 0 {
            g = annihilate(&g);
        }
        total += expansion::hdelta_norm(&g, delta)?.powi(2);
    }
    Ok(total.sqrt())
}

pub fn hdelta_m_norm_on(f: &SampledSignal, delta: f64, m: usize, grid: PhaseGrid) -> Result<f64> {
    let mut g = f.clone();
    let mut total = 0.0;
    for j in 0..=m {
        if j > 0 {
            g = annihilate(&g);
        }
        total += expansion::hdelta_norm_on(&g, delta, grid)?.powi(2);
    }
    Ok(total.sqrt())
}

/// Order-m expansion: sharp block on the dual atoms plus lattice coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderMExpansion {
    pub nodes: Vec<LatticeIndex>,
    /// `γ♯(a^j f)`, `j = 0..=m`.
    pub sharp_block: Vec<Complex64>,
    pub lattice: CoefficientSet,
    pub cutoff: usize,
    pub seam_mismatch: f64,
}

impl OrderMExpansion {
    pub fn order(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn lattice(&self, k: i64, j: i64) -> Complex64 {
        self.lattice.lattice.get(&LatticeIndex::new(k, j)).copied().unwrap_or_default()
    }

    /// Coefficients including the sharp block.
    pub fn coefficient_set(&self) -> CoefficientSet {
        CoefficientSet {
            lattice: self.lattice.lattice.clone(),
            sharp: Default::default(),
            sharp_block: Some(SharpBlock { nodes: self.nodes.clone(), values: self.sharp_block.clone() }),
        }
    }

    pub fn synthesize(&self, grid: Grid) -> Result<SampledSignal> {
        gabor::synthesize_with_margin(&self.coefficient_set(), grid, SYNTHESIS_MARGIN)
    }
}

/// Order-m expansion of `f` on `nodes` (default nodes around the origin
/// when `None`), lattice coefficients for `|k|, |j| <= cutoff`.
pub fn order_m_coefficients(
    f: &SampledSignal,
    m: usize,
    nodes: Option<&[LatticeIndex]>,
    cutoff: usize,
    opts: &ExpansionOptions,
) -> Result<OrderMExpansion> {
    if m > MAX_ORDER {
        return Err(Error::OrderTooLarge(m));
    }
    let nodes = match nodes {
        Some(n) => {
            if n.len() != m + 1 {
                return Err(Error::InvalidParameter(format!("{} nodes for order {m}", n.len())));
            }
            sharp_nodes(&n.iter().map(|i| i.sharp_point()).collect::<Vec<_>>())?
        }
        None => default_nodes(m, PhasePoint::SHARP)?,
    };
    let duals = dual_atoms_indexed(&nodes, f.grid())?;
    let mut g = f.clone();
    let mut block = Vec::with_capacity(m + 1);
    for j in 0..=m {
        if j > 0 {
            g = annihilate(&g);
        }
        block.push(expansion::sharp_functional_cfg(&g, opts.theta)?);
    }
    let mut f_sharp = f.clone();
    for (b, d) in block.iter().zip(&duals.atoms) {
        f_sharp.add_scaled(-b, d)?;
    }
    let (lattice, seam_mismatch) = expansion::lattice_coefficients(&f_sharp, cutoff, opts)?;
    Ok(OrderMExpansion {
        nodes,
        sharp_block: block,
        lattice: CoefficientSet { lattice, ..Default::default() },
        cutoff,
        seam_mismatch,
    })
}

/// Decay exponent of lattice coefficients: minus the least-squares slope of
/// `log max_{shell} |c|` against `log ρ` over square shells
/// `max(|k|, |j|) = ρ`, `ρ_min <= ρ <= ρ_max`.
pub fn decay_exponent(c: &CoefficientSet, rho_min: usize, rho_max: usize) -> Result<f64> {
    if rho_min == 0 || rho_max <= rho_min {
        return Err(Error::InvalidParameter(format!("shell range {rho_min}..{rho_max}")));
    }
    let mut pts = Vec::new();
    for rho in rho_min..=rho_max {
        let shell = c
            .lattice
            .iter()
            .filter(|(i, _)| i.k.unsigned_abs().max(i.j.unsigned_abs()) as usize == rho)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        if shell > 0.0 {
            pts.push(((rho as f64).ln(), shell.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("not enough nonzero shells".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::sharp_functional;
    use crate::gabor::atom;
    use crate::numerics::{hermite_signal, inner};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vandermonde_small_cases() {
        let v = vandermonde_inverse(&[c(0.3, -2.0)]).unwrap();
        assert_eq!(v[(0, 0)], c(1.0, 0.0));
        let v = vandermonde_inverse(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let want = [[1.0, 0.0], [-1.0, 1.0]];
        for a in 0..2 {
            for k in 0..2 {
                assert!((v[(a, k)] - want[a][k]).norm() < 1e-15);
            }
        }
        assert!(matches!(vandermonde_inverse(&[c(1.0, 1.0), c(1.0, 1.0)]), Err(Error::RepeatedNodes)));
    }

    #[test]
    fn symmetric_polynomials() {
        let e = elementary_symmetric(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(e, vec![c(1.0, 0.0), c(6.0, 0.0), c(11.0, 0.0), c(6.0, 0.0)]);
    }

    #[test]
    fn ladder_examples() {
        let g = Grid::baseline();
        let l = PhasePoint::new(1.0, 1.0);
        let e = atom(l, g).unwrap();
        assert!(annihilate(&e).axpy(-l.complex(), &e).unwrap().l2norm() < 1e-6);
        let e0 = atom(PhasePoint::default(), g).unwrap();
        assert!(annihilate(&e0).l2norm() < 1e-6);
        // Adjointness on smooth, well-centred signals.
        let (f, h) = (hermite_signal(2, g), atom(PhasePoint::new(-0.5, 0.7), g).unwrap());
        let lhs = inner(&annihilate(&f), &h).unwrap();
        let rhs = inner(&f, &create(&h)).unwrap();
        assert!((lhs - rhs).norm() < 1e-6);
    }

    #[test]
    fn harmonic_ground_state() {
        let g = Grid::baseline();
        let h0 = hermite_signal(0, g);
        let hh = harmonic(&h0);
        // The eigenvalue, read off numerically, is 1/(2π).
        let lambda = inner(&hh, &h0).unwrap();
        assert!((lambda - c(1.0 / (2.0 * PI), 0.0)).norm() < 1e-10);
        assert!(hh.axpy(-lambda, &h0).unwrap().l2norm() < 1e-8);
    }

    #[test]
    fn default_nodes_around_origin() {
        let n = default_nodes(3, PhasePoint::SHARP).unwrap();
        assert_eq!(n, vec![LatticeIndex::new(0, 0), LatticeIndex::new(-1, 0), LatticeIndex::new(0, -1), LatticeIndex::new(0, 1)]);
        let q = default_nodes(3, PhasePoint::new(0.0, 0.0)).unwrap();
        assert_eq!(q, vec![LatticeIndex::new(-1, -1), LatticeIndex::new(-1, 0), LatticeIndex::new(0, -1), LatticeIndex::new(0, 0)]);
        assert_eq!(default_nodes(6, PhasePoint::SHARP).unwrap().len(), 7);
        assert!(matches!(default_nodes(7, PhasePoint::SHARP), Err(Error::OrderTooLarge(7))));
    }

    #[test]
    fn dual_atom_examples() {
        let g = Grid::baseline();
        let d = dual_atoms(&[PhasePoint::SHARP], g).unwrap();
        let es = atom(PhasePoint::SHARP, g).unwrap();
        assert!(d.atoms[0].sub(&es).unwrap().l2norm() < 1e-14);
        let d = dual_atoms(&[PhasePoint::SHARP, PhasePoint::new(1.5, 0.5)], g).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                let v = sharp_functional(&annihilate_pow(&d.atoms[j], k)).unwrap();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((v - want).norm() < 1e-6, "{j} {k} {v}");
            }
        }
        let mu = atom(PhasePoint::new(0.5, 1.5), g).unwrap();
        assert!((sharp_functional(&mu).unwrap() + 1.0).norm() < 1e-6);
        assert!(matches!(dual_atoms(&[PhasePoint::new(0.5, 1.0)], g), Err(Error::NotSharp(..))));
        assert!(matches!(dual_atoms(&[PhasePoint::SHARP, PhasePoint::SHARP], g), Err(Error::RepeatedNodes)));
    }

    #[test]
    fn order_m_of_a_dual_atom_is_pure() {
        let g = Grid::baseline();
        let opts = ExpansionOptions::default();
        let nodes = default_nodes(2, PhasePoint::SHARP).unwrap();
        let duals = dual_atoms_indexed(&nodes, g).unwrap();
        for (j, d) in duals.atoms.iter().enumerate() {
            let e = order_m_coefficients(d, 2, Some(&nodes), 3, &opts).unwrap();
            for (k, b) in e.sharp_block.iter().enumerate() {
                assert!((b - if j == k { 1.0 } else { 0.0 }).norm() < 1e-6);
            }
            assert!(e.lattice.lattice.values().all(|v| v.norm() < 1e-3));
        }
        let e0 = atom(PhasePoint::default(), g).unwrap();
        let e = order_m_coefficients(&e0, 1, None, 3, &opts).unwrap();
        assert!(e.sharp_block.iter().all(|b| b.norm() < 1e-6));
        assert!((e.lattice(0, 0) - 1.0).norm() < 1e-3);
        assert!(matches!(order_m_coefficients(&e0, 7, None, 3, &opts), Err(Error::OrderTooLarge(7))));
    }

    #[test]
    fn hdelta_m_examples() {
        let g = Grid::baseline();
        let e0 = hermite_signal(0, g);
        let n0 = expansion::hdelta_norm(&e0, 2.0).unwrap();
        assert!((hdelta_m_norm(&e0, 2.0, 0).unwrap() - n0).abs() < 1e-15);
        assert!((hdelta_m_norm(&e0, 2.0, 1).unwrap() - n0).abs() < 1e-6);
        let h2 = hermite_signal(2, g);
        let norms: Vec<f64> = (0..3).map(|m| hdelta_m_norm(&h2, 1.5, m).unwrap()).collect();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]));
    }
}
