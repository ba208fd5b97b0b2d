use std::f64::consts::{FRAC_1_SQRT_2, PI};

use proptest::prelude::*;
use relaxed_gabor::certainty::{self, CertaintyOptions};
use relaxed_gabor::config::RunConfig;
use relaxed_gabor::expansion::{self, hdelta_norm};
use relaxed_gabor::gabor::{self, atom, atom_inner, CoefficientSet};
use relaxed_gabor::higher;
use relaxed_gabor::io;
use relaxed_gabor::metaplectic::{deviation_up_to_constant, metaplectic_apply, Rotation};
use relaxed_gabor::numerics::{hermite_signal, inner, loc_integral, theta, Grid, SampledSignal, ThetaConfig};
use relaxed_gabor::phaseplane::{lattice_points_in, neighborhood, symplectic_form, LatticeIndex, PhaseDomain, PhasePoint};
use relaxed_gabor::zak;
use relaxed_gabor::Complex64;

/// Largest `zak_sobolev_norm / hdelta_norm` at δ = 1 over h_0..h_5 (0.9512), rounded up.
const ZAK_SOBOLEV_C: f64 = 0.952;

fn grid() -> Grid {
    Grid::baseline()
}

fn point(r: f64) -> impl Strategy<Value = PhasePoint> {
    (-r..r, -r..r).prop_map(|(p, t)| PhasePoint::new(p, t))
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0, -1.0..1.0).prop_map(|(a, b)| Complex64::new(a, b))
}

fn atoms_sum(terms: &[(PhasePoint, Complex64)]) -> SampledSignal {
    gabor::synthesize_points(terms, grid())
}

fn cheap() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

fn costly(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn symplectic_form_is_rotation_invariant(u in point(5.0), v in point(5.0), phi in -PI..PI) {
        prop_assert!((symplectic_form(u.rotate(phi), v.rotate(phi)) - symplectic_form(u, v)).abs() <= 1e-12);
    }

    #[test]
    fn nested_neighborhoods(rho in 0.5..2.0f64, a in 0.1..1.0f64, b in 0.1..1.0f64, m in point(4.0)) {
        let k = PhaseDomain::disk(PhasePoint::default(), rho).unwrap();
        let nn = neighborhood(&neighborhood(&k, a).unwrap(), b).unwrap();
        let n = neighborhood(&k, a + b).unwrap();
        // Boundary distances are sampled at 1/32.
        if nn.contains(m) {
            prop_assert!(m.norm() <= rho + a + b + 1.0 / 32.0);
        }
        if m.norm() < rho + a + b - 1.0 / 32.0 {
            prop_assert!(nn.contains(m) && n.contains(m));
        }
    }

    #[test]
    fn lattice_count_is_area_plus_perimeter(rho in 2.0..10.0f64) {
        let d = PhaseDomain::disk(PhasePoint::default(), rho).unwrap();
        let count = lattice_points_in(&d, false).unwrap().len();
        let r = rho.ceil() as i64;
        let brute = (-r..=r).flat_map(|k| (-r..=r).map(move |j| (k, j))).filter(|&(k, j)| ((k * k + j * j) as f64).sqrt() <= rho).count();
        prop_assert_eq!(count, brute);
        prop_assert!((count as f64 - PI * rho * rho).abs() <= 2.0 * PI * rho * FRAC_1_SQRT_2 + 1.0);
    }

    #[test]
    fn nearest_lattice_point_within_half_diagonal(m in point(6.0)) {
        let l = LatticeIndex::nearest(m).lattice_point();
        prop_assert!(l.dist(m) <= FRAC_1_SQRT_2);
    }

    #[test]
    fn theta_quasi_periodicity(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let z = Complex64::new(x, y);
        let cfg = ThetaConfig::default();
        let lhs = theta(z + Complex64::i(), cfg);
        let rhs = (Complex64::new(PI, 0.0) - Complex64::new(0.0, 2.0 * PI) * z).exp() * theta(z, cfg);
        prop_assert!((lhs - rhs).norm() <= 1e-8 * rhs.norm().max(1.0));
    }

    #[test]
    fn loc_integral_symmetry(x in -6.0..6.0f64) {
        prop_assert!((loc_integral(x) + loc_integral(-x) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn atom_inner_matches_quadrature(l in point(3.0), m in point(3.0)) {
        let q = inner(&atom(l, grid()).unwrap(), &atom(m, grid()).unwrap()).unwrap();
        prop_assert!((q - atom_inner(l, m)).norm() <= 1e-8);
    }

    #[test]
    fn gabor_symmetry_of_real_even_signals(c in prop::array::uniform3(-1.0..1.0f64), m in point(3.0)) {
        let g = grid();
        let mut f = SampledSignal::zeros(g);
        for (n, &a) in [0, 2, 4].iter().zip(&c) {
            f = f.axpy(Complex64::new(a, 0.0), &hermite_signal(*n, g)).unwrap();
        }
        let v = gabor::gabor_value(&f, m).norm();
        let w = gabor::gabor_value(&f, PhasePoint::new(-m.p, -m.theta)).norm();
        prop_assert!((v - w).abs() <= 1e-10);
    }

    #[test]
    fn vandermonde_inverse_on_sharp_nodes(m in 0usize..=6, seeds in prop::collection::vec((-5i64..5, -5i64..5), 7)) {
        let mut nodes: Vec<Complex64> = Vec::new();
        for (k, j) in seeds {
            let z = LatticeIndex::new(k, j).sharp_point();
            if z.norm() <= 5.0 && !nodes.contains(&z.complex()) {
                nodes.push(z.complex());
            }
        }
        nodes.truncate(m + 1);
        let n = nodes.len();
        let v = higher::vandermonde_inverse(&nodes).unwrap();
        let w = nalgebra::DMatrix::from_fn(n, n, |j, k| nodes[j].powu(k as u32));
        let p = v * w;
        for a in 0..n {
            for b in 0..n {
                let want = if a == b { 1.0 } else { 0.0 };
                prop_assert!((p[(a, b)] - want).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn annihilation_eigen_relation(l in point(2.0)) {
        let e = atom(l, grid()).unwrap();
        prop_assert!(higher::annihilate(&e).axpy(-l.complex(), &e).unwrap().l2norm() <= 1e-6);
    }

    #[test]
    fn metaplectic_unitarity(phi in -PI..PI, n in 0usize..4) {
        let h = hermite_signal(n, grid()).axpy(Complex64::new(0.5, 0.5), &atom(PhasePoint::new(1.0, -1.0), grid()).unwrap()).unwrap();
        prop_assert!((metaplectic_apply(Rotation::new(phi), &h).l2norm() - h.l2norm()).abs() <= 1e-4 * h.l2norm());
    }

    #[test]
    fn signal_json_round_trip_is_bit_exact(vals in prop::collection::vec((any::<f64>(), any::<f64>()), 1025)) {
        let vals: Vec<Complex64> = vals.into_iter().map(|(a, b)| Complex64::new(if a.is_finite() { a } else { 0.0 }, if b.is_finite() { b } else { 0.0 })).collect();
        let f = SampledSignal::from_values(grid(), vals).unwrap();
        let text = serde_json::to_string(&io::signal_to_json(&f)).unwrap();
        let back = io::signal_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn config_overrides_round_trip(cutoff in 1usize..=6, order in 0usize..=6, delta in 0.0..3.0f64, seed in any::<u64>()) {
        let cfg = RunConfig::default()
            .with_overrides(&[format!("cutoff={cutoff}"), format!("order={order}"), format!("delta={delta}"), format!("seed={seed}")])
            .unwrap();
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(costly(16))]

    #[test]
    fn zak_unitarity_and_round_trip(terms in prop::collection::vec((point(3.0), coeff()), 1..4)) {
        let f = atoms_sum(&terms);
        let z = zak::zak(&f, 64).unwrap();
        prop_assert!((z.l2norm() - f.l2norm()).abs() <= 1e-6 * f.l2norm().max(1e-300));
        prop_assert!(zak::zak_inverse(&z, grid()).unwrap().relative_error(&f).unwrap() <= 1e-8);
    }

    #[test]
    fn zak_factorization(k in -2i64..=2, j in -2i64..=2, r in 0.0..1.0f64, eta in 0.0..1.0f64) {
        let g = grid();
        let base = zak::zak(&atom(PhasePoint::new(r, eta), g).unwrap(), 64).unwrap();
        let moved = zak::zak(&atom(PhasePoint::new(k as f64 + r, j as f64 + eta), g).unwrap(), 64).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..64 {
            for jj in 0..64 {
                let (y, xi) = (base.y(i), base.xi(jj));
                let ph = Complex64::from_polar(1.0, 2.0 * PI * (k as f64 * xi + j as f64 * y + k as f64 * eta));
                worst = worst.max((moved.get(i, jj) - ph * base.get(i, jj)).norm());
            }
        }
        prop_assert!(worst <= 1e-8, "{}", worst);
    }

    #[test]
    fn zak_sobolev_control(terms in prop::collection::vec((point(3.0), coeff()), 1..4)) {
        let f = atoms_sum(&terms);
        prop_assume!(f.l2norm() > 1e-3);
        let z = zak::zak(&f, 64).unwrap();
        prop_assert!(zak::zak_sobolev_norm(&z, 1.0) <= ZAK_SOBOLEV_C * hdelta_norm(&f, 1.0).unwrap());
    }

    #[test]
    fn hdelta_grows_with_delta_away_from_origin(terms in prop::collection::vec((2.0..3.0f64, -PI..PI, coeff()), 1..3)) {
        let pts: Vec<(PhasePoint, Complex64)> = terms.iter().map(|&(r, a, c)| (PhasePoint::new(r * a.cos(), r * a.sin()), c)).collect();
        let f = atoms_sum(&pts);
        prop_assume!(f.l2norm() > 1e-3);
        prop_assert!(hdelta_norm(&f, 1.0).unwrap() <= hdelta_norm(&f, 2.0).unwrap());
    }

    #[test]
    fn hdelta_m_norm_is_monotone_in_m(terms in prop::collection::vec((point(2.0), coeff()), 1..3)) {
        let f = atoms_sum(&terms);
        let mut prev = 0.0;
        for m in 0..=2 {
            let n = higher::hdelta_m_norm(&f, 1.0, m).unwrap();
            prop_assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn metaplectic_is_two_valued(a in -PI..PI, b in -PI..PI) {
        let f = hermite_signal(1, grid()).axpy(Complex64::new(0.3, -0.2), &atom(PhasePoint::new(0.5, 1.0), grid()).unwrap()).unwrap();
        let composed = metaplectic_apply(Rotation::new(a), &metaplectic_apply(Rotation::new(b), &f));
        let direct = metaplectic_apply(Rotation::new(a + b), &f);
        let (dev, c) = deviation_up_to_constant(&composed, &direct).unwrap();
        prop_assert!(dev <= 1e-3, "{}", dev);
        prop_assert!((c - 1.0).norm().min((c + 1.0).norm()) <= 1e-2, "{}", c);
    }
}

proptest! {
    #![proptest_config(costly(6))]

    #[test]
    fn expansion_idempotence(vals in prop::collection::vec(coeff(), 25)) {
        let mut c = CoefficientSet::new();
        for (n, v) in vals.iter().enumerate() {
            c.lattice.insert(LatticeIndex::new(n as i64 / 5 - 2, n as i64 % 5 - 2), *v);
        }
        let f = gabor::synthesize(&c, grid()).unwrap();
        let e = expansion::relaxed_coefficients(&f, 2).unwrap();
        prop_assert!(e.sharp.norm() <= 1e-3);
        for (i, want) in &c.lattice {
            prop_assert!((e.lattice(i.k, i.j) - want).norm() <= 1e-3);
        }
    }

    #[test]
    fn biorthogonality_of_dual_atoms(m in 0usize..=3, k in -2i64..=1, j in -2i64..=1) {
        let centre = LatticeIndex::new(k, j).sharp_point();
        let nodes: Vec<PhasePoint> = higher::default_nodes(m, centre).unwrap().iter().map(|n| n.sharp_point()).collect();
        let d = higher::dual_atoms(&nodes, grid()).unwrap();
        for (s, dj) in d.atoms.iter().enumerate() {
            let mut ak = dj.clone();
            for t in 0..=m {
                if t > 0 {
                    ak = higher::annihilate(&ak);
                }
                let want = if s == t { 1.0 } else { 0.0 };
                prop_assert!((expansion::sharp_functional(&ak).unwrap() - want).norm() <= 1e-6);
            }
        }
    }

    #[test]
    fn dual_atom_norm_bound(m in 0usize..=2, l in point(3.5)) {
        let nodes: Vec<PhasePoint> = higher::default_nodes(m, PhasePoint::SHARP).unwrap().iter().map(|n| n.sharp_point()).collect();
        let big_l = nodes.iter().map(|n| n.dist(l)).fold(0.0, f64::max);
        prop_assume!(big_l <= 3.0);
        let big_m = nodes.iter().map(|n| n.norm()).fold(0.0, f64::max);
        let d = higher::dual_atoms(&nodes, grid()).unwrap();
        let mut f = SampledSignal::zeros(grid());
        for (j, dj) in d.atoms.iter().enumerate() {
            f = f.axpy(l.complex().powu(j as u32), dj).unwrap();
        }
        let lhs = higher::hdelta_m_norm(&f, 1.5, m).unwrap();
        prop_assert!(lhs <= (big_m + 1.0).powf(m as f64 + 1.5) * big_l.powi(m as i32));
    }
}

proptest! {
    #![proptest_config(costly(3))]

    #[test]
    fn certainty_decomposition_is_exact(l in point(1.4), c in coeff()) {
        let k = PhaseDomain::disk(PhasePoint::default(), 2.0).unwrap();
        let f = atom(l, grid()).unwrap().scale(c);
        let dec = certainty::decompose_with(&f, &k, 3.0, 1, &CertaintyOptions::default()).unwrap();
        prop_assert!(dec.exactness(&f).unwrap() <= 1e-10);
        let nested = certainty::NestedDomains::new(&k, 3.0, 1).unwrap();
        prop_assert!(nested.is_nested(0.125));
    }
}
