//! Invariant suite run by `relaxed-gabor verify`.
//!
//! Every check records its measured value, threshold and verdict. Random
//! inputs come from a ChaCha8 stream seeded by the config, and every
//! reduction has a fixed order, so equal configs give byte-identical reports.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certainty;
use crate::config::RunConfig;
use crate::error::Result;
use crate::expansion::{self, ExpansionOptions};
use crate::gabor::{self, atom, atom_inner, CoefficientSet};
use crate::higher;
use crate::metaplectic::{self, Rotation};
use crate::numerics::{hermite_signal, inner, loc_integral, theta, SampledSignal};
use crate::phaseplane::{LatticeIndex, PhaseDomain, PhasePoint};
use crate::zak;

/// `Θ(0)`, direct summation.
pub const THETA_ZERO: f64 = 1.291_996_007_5;
/// `I(-1) = erfc(√(2π))/2`.
pub const LOC_MINUS_ONE: f64 = 1.963_752_94e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Counts towards the verdict.
    Invariant,
    /// Reported only.
    Measurement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub module: String,
    pub kind: Kind,
    pub value: f64,
    /// `"<="` or `">="`.
    pub comparison: String,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn push(&mut self, module: &str, name: &str, kind: Kind, value: f64, le: bool, threshold: f64) {
        let passed = match kind {
            Kind::Measurement => true,
            Kind::Invariant if le => value <= threshold,
            Kind::Invariant => value >= threshold,
        };
        self.checks.push(CheckResult {
            name: name.into(),
            module: module.into(),
            kind,
            value,
            comparison: if le { "<=" } else { ">=" }.into(),
            threshold,
            passed,
        });
    }

    fn at_most(&mut self, module: &str, name: &str, value: f64, threshold: f64) {
        // NaN fails.
        let v = if value.is_nan() { f64::INFINITY } else { value };
        self.push(module, name, Kind::Invariant, v, true, threshold);
    }

    fn at_least(&mut self, module: &str, name: &str, value: f64, threshold: f64) {
        let v = if value.is_nan() { f64::NEG_INFINITY } else { value };
        self.push(module, name, Kind::Invariant, v, false, threshold);
    }

    fn measure(&mut self, module: &str, name: &str, value: f64) {
        self.push(module, name, Kind::Measurement, value, true, f64::INFINITY);
    }

    /// Records an error as a failed check instead of aborting the suite.
    fn guard(&mut self, module: &str, name: &str, r: Result<()>) {
        if r.is_err() {
            self.at_most(module, name, f64::INFINITY, 0.0);
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, radius: f64) -> PhasePoint {
    loop {
        let p = PhasePoint::new(rng.gen_range(-radius..radius), rng.gen_range(-radius..radius));
        if p.norm() <= radius {
            return p;
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs the suite with the config's seed.
pub fn run(cfg: &RunConfig) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s = Suite { checks: Vec::new() };
    let g = cfg.grid();
    let tc = cfg.theta();

    // numerics
    s.at_most("numerics", "theta_zero", (theta(Complex64::new(0.0, 0.0), tc).re - THETA_ZERO).abs(), 1e-9);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        // Im z + 1 stays below the reduction threshold, so both sides are the raw
        // truncated series.
        let z = Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(0.5..0.95));
        let lhs = theta(z + Complex64::i(), tc);
        let rhs = (Complex64::new(PI, 0.0) - Complex64::new(0.0, 2.0 * PI) * z).exp() * theta(z, tc);
        worst = worst.max((lhs - rhs).norm() / rhs.norm());
    }
    s.at_most("numerics", "theta_quasi_periodicity", worst, 1e-10);
    s.at_most("numerics", "loc_integral_minus_one", (loc_integral(-1.0) - LOC_MINUS_ONE).abs(), 1e-12);
    let hs: Vec<SampledSignal> = (0..4).map(|n| hermite_signal(n, g)).collect();
    let mut ortho: f64 = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { 1.0 } else { 0.0 };
            ortho = ortho.max((inner(&hs[a], &hs[b]).unwrap_or_default() - want).norm());
        }
    }
    s.at_most("numerics", "hermite_orthonormality", ortho, 1e-10);

    // gabor
    let r: Result<()> = (|| {
        let pg = cfg.phase_grid()?;
        let mut worst: f64 = 0.0;
        for h in &hs {
            let field = gabor::gabor_transform(h, pg)?;
            worst = worst.max(rel(field.mass(), h.norm_sq()));
        }
        s.at_most("gabor", "parseval_hermite_0_3", worst, 1e-3);
        let mut worst: f64 = 0.0;
        for _ in 0..cfg.samples {
            let (l, m) = (random_point(&mut rng, 3.0), random_point(&mut rng, 3.0));
            let q = inner(&atom(l, g)?, &atom(m, g)?)?;
            worst = worst.max((q - atom_inner(l, m)).norm());
        }
        s.at_most("gabor", "atom_inner_closed_form", worst, 1e-8);
        let mut worst = f64::NEG_INFINITY;
        for t in 0..cfg.samples.min(5) {
            let mut c = CoefficientSet::new();
            for k in -2..=2 {
                for j in -2..=2 {
                    c.lattice.insert(LatticeIndex::new(k, j), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                }
            }
            let tm = gabor::tail_mass(&c, 1.0 + (t % 2) as f64)?;
            worst = worst.max(tm.measured / tm.bound);
        }
        s.at_most("gabor", "tail_over_bound", worst, 1.0);
        Ok(())
    })();
    s.guard("gabor", "gabor_errors", r);

    // zak
    let r: Result<()> = (|| {
        let f = hs[2].add(&atom(PhasePoint::new(1.0, -0.5), g)?)?;
        let z = zak::zak(&f, cfg.zak_n)?;
        s.at_most("zak", "norm_ratio", rel(z.l2norm(), f.l2norm()), 1e-6);
        s.at_most("zak", "round_trip", zak::zak_inverse(&z, g)?.relative_error(&f)?, 1e-8);
        let z0 = zak::zak(&hs[0], cfg.zak_n)?;
        let mut worst: f64 = 0.0;
        for i in 0..cfg.zak_n {
            for j in 0..cfg.zak_n {
                let (y, xi) = (z0.y(i), z0.xi(j));
                let want = theta(Complex64::new(xi, y), tc) * (-PI * y * y).exp();
                worst = worst.max((z0.get(i, j) - want).norm());
            }
        }
        s.at_most("zak", "gaussian_image_theta", worst, 1e-8);
        Ok(())
    })();
    s.guard("zak", "zak_errors", r);

    // expansion
    let opts = ExpansionOptions { sharp: LatticeIndex::new(0, 0), ..cfg.expansion_options() };
    let r: Result<()> = (|| {
        let sf = |f: &SampledSignal| expansion::sharp_functional_cfg(f, tc);
        let mut worst = (sf(&atom(PhasePoint::SHARP, g)?)? - 1.0).norm();
        for (k, j) in [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-2, 1), (2, -2)] {
            worst = worst.max(sf(&atom(PhasePoint::new(k as f64, j as f64), g)?)?.norm());
        }
        s.at_most("expansion", "sharp_functional", worst, 1e-6);
        let mut worst: f64 = 0.0;
        for l in [PhasePoint::new(0.0, 0.0), PhasePoint::new(1.0, 0.0), PhasePoint::new(0.0, 1.0), PhasePoint::SHARP] {
            let e = expansion::relaxed_coefficients_with(&atom(l, g)?, cfg.cutoff, &opts)?;
            let target = LatticeIndex::of_lattice(l);
            let mut dev = if target.is_some() { e.sharp.norm() } else { (e.sharp - 1.0).norm() };
            for (i, c) in &e.coefficients.lattice {
                let want = if Some(*i) == target { 1.0 } else { 0.0 };
                dev = dev.max((c - want).norm());
            }
            worst = worst.max(dev);
        }
        s.at_most("expansion", "purity", worst, 1e-3);
        let res: Vec<f64> = [2usize, 4, 6]
            .iter()
            .map(|&r| expansion::reconstruct_with(&hs[2], r, &opts).map(|x| x.residual))
            .collect::<Result<_>>()?;
        let growth = res.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        s.at_most("expansion", "reconstruction_nonincreasing", growth, 1.1);
        s.measure("expansion", "reconstruction_h2_residual_r6", res[2]);
        Ok(())
    })();
    s.guard("expansion", "expansion_errors", r);

    // higher
    let r: Result<()> = (|| {
        let mut worst: f64 = 0.0;
        for m in 0..=crate::error::MAX_ORDER {
            let nodes: Vec<Complex64> = (0..=m)
                .map(|_| random_point(&mut rng, 1.0).complex())
                .collect();
            let v = higher::vandermonde_inverse(&nodes)?;
            let w = nalgebra::DMatrix::from_fn(m + 1, m + 1, |j, k| nodes[j].powu(k as u32));
            let prod = v * w;
            for a in 0..=m {
                for b in 0..=m {
                    let want = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((prod[(a, b)] - want).norm());
                }
            }
        }
        s.at_most("higher", "vandermonde_inverse", worst, 1e-10);
        let mut worst: f64 = 0.0;
        for m in 0..=3 {
            let nodes = higher::default_nodes(m, PhasePoint::SHARP)?;
            let duals = higher::dual_atoms(&nodes.iter().map(|n| n.sharp_point()).collect::<Vec<_>>(), g)?;
            for (j, d) in duals.atoms.iter().enumerate() {
                let mut ak = d.clone();
                for k in 0..=m {
                    if k > 0 {
                        ak = higher::annihilate(&ak);
                    }
                    let want = if j == k { 1.0 } else { 0.0 };
                    worst = worst.max((expansion::sharp_functional_cfg(&ak, tc)? - want).norm());
                }
            }
        }
        s.at_most("higher", "biorthogonality", worst, 1e-6);
        let mut worst: f64 = 0.0;
        for _ in 0..cfg.samples {
            let l = random_point(&mut rng, 2.0);
            let e = atom(l, g)?;
            worst = worst.max(higher::annihilate(&e).axpy(-l.complex(), &e)?.l2norm());
        }
        s.at_most("higher", "eigen_relation", worst, 1e-6);
        let e0 = higher::order_m_coefficients(&hs[3], 0, None, cfg.cutoff, &opts)?;
        let e2 = higher::order_m_coefficients(&hs[3], 2, None, cfg.cutoff, &opts)?;
        let gap = higher::decay_exponent(&e2.lattice, 2, cfg.cutoff)? - higher::decay_exponent(&e0.lattice, 2, cfg.cutoff)?;
        s.at_least("higher", "order_2_decay_gain", gap, 0.8);
        Ok(())
    })();
    s.guard("higher", "higher_errors", r);

    // metaplectic
    let r: Result<()> = (|| {
        let (mut dev, mut phase): (f64, f64) = (0.0, 0.0);
        for phi in [FRAC_PI_4, FRAC_PI_2] {
            for l in [PhasePoint::new(1.0, 0.0), PhasePoint::new(1.0, 1.0)] {
                let c = metaplectic::covariance_check(Rotation::new(phi), l, g)?;
                dev = dev.max(c.deviation);
                phase = phase.max(c.phase_error);
            }
        }
        s.at_most("metaplectic", "covariance_deviation", dev, 1e-3);
        s.at_most("metaplectic", "covariance_phase", phase, 1e-2);
        let mut comm: f64 = 0.0;
        for phi in [FRAC_PI_4, FRAC_PI_2] {
            comm = comm.max(metaplectic::commutation_check(Rotation::new(phi), &hs[1])?);
            comm = comm.max(metaplectic::commutation_check_adjoint(Rotation::new(phi), &hs[1])?);
        }
        s.at_most("metaplectic", "commutation", comm, 1e-3);
        let mut unit: f64 = 0.0;
        for k in 0..12 {
            let phi = -PI + (k as f64 + 0.5) * PI / 6.0;
            unit = unit.max((metaplectic::metaplectic_apply(Rotation::new(phi), &hs[3]).l2norm() - 1.0).abs());
        }
        s.at_most("metaplectic", "unitarity", unit, 1e-4);
        Ok(())
    })();
    s.guard("metaplectic", "metaplectic_errors", r);

    // certainty
    let r: Result<()> = (|| {
        let k = PhaseDomain::disk(PhasePoint::default(), 3.0)?;
        let f = atom(PhasePoint::default(), g)?;
        let copts = cfg.certainty_options();
        let dec = certainty::decompose_with(&f, &k, copts.min_radius, 2, &copts)?;
        s.at_most("certainty", "exactness", dec.exactness(&f)?, 1e-10);
        s.at_most("certainty", "deep_atom_residual", dec.report.relative_residual, 0.05);
        let mut worst = f64::NEG_INFINITY;
        for rad in [2.0, 3.0, 4.0] {
            let d = certainty::degrees_of_freedom_report(&PhaseDomain::disk(PhasePoint::default(), rad)?, 3.0)?;
            worst = worst.max(d.excess.abs() - (certainty::DOF_SLOPE * 3.0 * d.area.sqrt() + certainty::DOF_OFFSET));
        }
        s.at_most("certainty", "dof_excess_margin", worst, 0.0);
        Ok(())
    })();
    s.guard("certainty", "certainty_errors", r);

    let passed = s.checks.iter().all(|c| c.passed);
    VerifyReport { config_hash: cfg.hash(), seed: cfg.seed, checks: s.checks, passed }
}
