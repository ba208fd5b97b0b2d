//! Metaplectic operators of phase-plane rotations (the fractional Fourier
//! family).
//!
//! For `S = (a, b; c, d) = (cos φ, -sin φ; sin φ, cos φ)` with `b ≠ 0`,
//!
//! `M_S f(x) = (ib)^{-1/2} ∫ exp(πi((d/b)x² - (2/b)xy + (a/b)y²)) f(y) dy`,
//!
//! evaluated as chirp, direct sum over the grid, chirp. The direct sum is
//! used only where `|cot φ| <= 1`, so that both chirps stay well below the
//! grid's Nyquist rate; other angles are composed with `M_{π/2}`. The
//! representation is two-valued, so operators are defined up to sign; the
//! branch of `(ib)^{-1/2}` is the principal one.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gabor::{self, PhaseGrid};
use crate::higher::{annihilate, create};
use crate::numerics::{inner, loc_integral, pairwise_sum, SampledSignal};
use crate::phaseplane::{PhaseDomain, PhasePoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub angle: f64,
}

impl Rotation {
    pub fn new(angle: f64) -> Self {
        Rotation { angle }
    }

    /// `(a, b, c, d)`.
    pub fn matrix(&self) -> (f64, f64, f64, f64) {
        let (s, c) = self.angle.sin_cos();
        (c, -s, s, c)
    }

    pub fn apply(&self, l: PhasePoint) -> PhasePoint {
        l.rotate(self.angle)
    }

    /// Angle reduced to `(-π, π]`.
    pub fn reduced(&self) -> f64 {
        let mut a = self.angle.rem_euclid(2.0 * PI);
        if a > PI {
            a -= 2.0 * PI;
        }
        a
    }
}

/// `M_S f` on the grid of `f`.
pub fn metaplectic_apply(s: Rotation, f: &SampledSignal) -> SampledSignal {
    let phi = s.reduced();
    if phi == 0.0 {
        return f.clone();
    }
    if phi == PI {
        // M_π f(x) = i f(-x) on the symmetric grid.
        let mut v: Vec<Complex64> = f.values().iter().rev().map(|z| z * Complex64::i()).collect();
        v.shrink_to_fit();
        return SampledSignal::from_values(f.grid(), v).expect("same length");
    }
    if phi.abs() >= FRAC_PI_4 && phi.abs() <= 3.0 * FRAC_PI_4 {
        return direct(phi, f);
    }
    // |cot φ| > 1: rotate by ±π/2 first.
    let step = if phi > 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
    direct(phi - step, &direct(step, f))
}

fn direct(phi: f64, f: &SampledSignal) -> SampledSignal {
    let (a, b, _, d) = Rotation::new(phi).matrix();
    let grid = f.grid();
    let h = grid.step();
    let pref = (Complex64::i() * b).sqrt().inv();
    let xs: Vec<f64> = (0..grid.len()).map(|n| grid.x(n)).collect();
    let pre: Vec<Complex64> = f
        .values()
        .iter()
        .zip(&xs)
        .map(|(v, y)| v * Complex64::from_polar(1.0, PI * (a / b) * y * y))
        .collect();
    let out: Vec<Complex64> = xs
        .par_iter()
        .map(|x| {
            let sum = pairwise_sum(pre.len(), |n| pre[n] * Complex64::from_polar(1.0, -2.0 * PI * x * xs[n] / b));
            pref * Complex64::from_polar(1.0, PI * (d / b) * x * x) * sum * h
        })
        .collect();
    SampledSignal::from_values(grid, out).expect("same length")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCheck {
    /// `min_{|c|=1} ‖M_S e_λ - c e_{Sλ}‖`.
    pub deviation: f64,
    /// Optimal unimodular constant.
    pub constant: Complex64,
    /// `e^{iφ/2} e^{πi(pθ - qη)}` with `Sλ = (q, η)`.
    pub expected: Complex64,
    /// Angle between `constant` and `±expected`.
    pub phase_error: f64,
}

/// Compares `M_S e_λ` with `e_{Sλ}` up to a unimodular constant.
pub fn covariance_check(s: Rotation, l: PhasePoint, grid: crate::numerics::Grid) -> Result<CovarianceCheck> {
    let sl = s.apply(l);
    let e = gabor::atom(l, grid)?;
    let es = gabor::atom(sl, grid)?;
    let me = metaplectic_apply(s, &e);
    let ip = inner(&me, &es)?;
    let constant = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
    let deviation = me.axpy(-constant, &es)?.l2norm();
    let expected = Complex64::from_polar(1.0, s.angle / 2.0 + PI * (l.p * l.theta - sl.p * sl.theta));
    let r = constant / expected;
    let phase_error = r.arg().abs().min((-r).arg().abs());
    Ok(CovarianceCheck { deviation, constant, expected, phase_error })
}

/// `‖M_S(a f) - e^{-iφ} a(M_S f)‖`.
pub fn commutation_check(s: Rotation, f: &SampledSignal) -> Result<f64> {
    let lhs = metaplectic_apply(s, &annihilate(f));
    let rhs = annihilate(&metaplectic_apply(s, f));
    Ok(lhs.axpy(-Complex64::from_polar(1.0, -s.angle), &rhs)?.l2norm())
}

/// `‖M_S(a⁺ f) - e^{iφ} a⁺(M_S f)‖`.
pub fn commutation_check_adjoint(s: Rotation, f: &SampledSignal) -> Result<f64> {
    let lhs = metaplectic_apply(s, &create(f));
    let rhs = create(&metaplectic_apply(s, f));
    Ok(lhs.axpy(-Complex64::from_polar(1.0, s.angle), &rhs)?.l2norm())
}

/// Least deviation `min_{|c|=1} ‖f - c g‖` together with the optimal `c`.
pub fn deviation_up_to_constant(f: &SampledSignal, g: &SampledSignal) -> Result<(f64, Complex64)> {
    let ip = inner(f, g)?;
    let c = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
    Ok((f.axpy(-c, g)?.l2norm(), c))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    /// `max_λ ||<M_S f|e_{Sλ}>| - |<f|e_λ>||` over the grid.
    pub max_abs_diff: f64,
    /// `|‖M_S f‖_δ - ‖f‖_δ| / ‖f‖_δ` over the same grid.
    pub hdelta_rel_diff: f64,
}

pub fn hdelta_invariance_check(s: Rotation, f: &SampledSignal, delta: f64, grid: PhaseGrid) -> Result<InvarianceCheck> {
    let mf = metaplectic_apply(s, f);
    let pts: Vec<PhasePoint> = grid.points().collect();
    let pairs: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|l| (gabor::gabor_value(f, *l).norm(), gabor::gabor_value(&mf, s.apply(*l)).norm()))
        .collect();
    let max_abs_diff = pairs.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let w = grid.step * grid.step;
    let (mut n0, mut n1) = (0.0, 0.0);
    for (l, (a, b)) in pts.iter().zip(&pairs) {
        let weight = l.norm().powf(delta) + 1.0;
        n0 += weight * a * a * w;
        n1 += weight * b * b * w;
    }
    let (n0, n1) = (n0.sqrt(), n1.sqrt());
    Ok(InvarianceCheck { max_abs_diff, hdelta_rel_diff: if n0 > 0.0 { (n1 - n0).abs() / n0 } else { n1 } })
}

/// Both sides of the rotated localization inequality:
/// `∫ |M_S f|² I(x - q) dx` with `q = sup {p : λ ∈ S(D)}`, and
/// `∫_{Φ∖D} |<f|e_λ>|² dλ` on `grid`.
pub fn rotated_localization(s: Rotation, f: &SampledSignal, d: &PhaseDomain, grid: PhaseGrid) -> Result<(f64, f64)> {
    let (a, b, _, _) = s.matrix();
    let q = d.support(PhasePoint::new(a, b)).ok_or(crate::error::Error::UnboundedDomain)?;
    let mf = metaplectic_apply(s, f);
    let sg = mf.grid();
    let lhs = pairwise_sum(mf.len(), |n| Complex64::new(mf.values()[n].norm_sqr() * loc_integral(sg.x(n) - q), 0.0)).re
        * sg.step();
    let rhs = crate::certainty::concentration_on(f, d, grid)?.total();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::atom;
    use crate::numerics::{hermite_signal, Grid};

    #[test]
    fn identity_and_parity() {
        let g = Grid::baseline();
        let f = atom(PhasePoint::new(1.0, 0.5), g).unwrap();
        assert_eq!(metaplectic_apply(Rotation::new(0.0), &f), f);
        let c = covariance_check(Rotation::new(PI), PhasePoint::new(1.0, 0.5), g).unwrap();
        assert!(c.deviation < 1e-12 && c.phase_error < 1e-12);
    }

    #[test]
    fn quarter_turn_is_fourier() {
        let g = Grid::baseline();
        let l = PhasePoint::new(1.0, 0.0);
        let m = metaplectic_apply(Rotation::new(FRAC_PI_2), &atom(l, g).unwrap());
        let want = atom(PhasePoint::new(0.0, 1.0), g).unwrap();
        let worst = m.values().iter().zip(want.values()).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn covariance_and_group_law() {
        let g = Grid::baseline();
        for (phi, l) in [(FRAC_PI_2, (1.0, 0.0)), (FRAC_PI_4, (1.0, 1.0)), (0.3, (0.5, -1.0)), (-2.8, (1.0, 1.0))] {
            let c = covariance_check(Rotation::new(phi), PhasePoint::new(l.0, l.1), g).unwrap();
            assert!(c.deviation < 1e-3 && c.phase_error < 1e-2, "{phi} {c:?}");
        }
        let f = hermite_signal(2, g).add(&atom(PhasePoint::new(1.0, -0.5), g).unwrap()).unwrap();
        let twice = metaplectic_apply(Rotation::new(FRAC_PI_4), &metaplectic_apply(Rotation::new(FRAC_PI_4), &f));
        let (dev, c) = deviation_up_to_constant(&twice, &metaplectic_apply(Rotation::new(FRAC_PI_2), &f)).unwrap();
        assert!(dev < 1e-3 * f.l2norm());
        assert!((c - 1.0).norm().min((c + 1.0).norm()) < 1e-2);
    }

    #[test]
    fn commutation() {
        let g = Grid::baseline();
        for phi in [0.0, FRAC_PI_2, 1.0] {
            let f = hermite_signal(1, g);
            assert!(commutation_check(Rotation::new(phi), &f).unwrap() < 1e-3);
            assert!(commutation_check_adjoint(Rotation::new(phi), &f).unwrap() < 1e-3);
        }
    }

    #[test]
    fn invariance_and_localization() {
        let g = Grid::baseline();
        let pg = PhaseGrid::square(4.0, 0.25).unwrap();
        let inv = hdelta_invariance_check(Rotation::new(FRAC_PI_2), &hermite_signal(2, g), 1.0, pg).unwrap();
        assert!(inv.max_abs_diff < 1e-3 && inv.hdelta_rel_diff < 1e-2, "{inv:?}");
        let d = PhaseDomain::disk(PhasePoint::default(), 1.0).unwrap();
        let (lhs, rhs) =
            rotated_localization(Rotation::new(PI / 3.0), &atom(PhasePoint::default(), g).unwrap(), &d, PhaseGrid::square(8.0, 0.125).unwrap())
                .unwrap();
        assert!(lhs <= rhs + 1e-3, "{lhs} {rhs}");
    }

    #[test]
    fn unitarity_on_angle_grid() {
        let g = Grid::baseline();
        let f = hermite_signal(3, g);
        for k in 0..12 {
            let phi = -PI + (k as f64 + 0.5) * PI / 6.0;
            let n = metaplectic_apply(Rotation::new(phi), &f).l2norm();
            assert!((n - f.l2norm()).abs() < 1e-4, "{phi} {n}");
        }
    }
}
