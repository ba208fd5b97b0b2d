//! Run configuration: every numerical default in one JSON object, validated
//! before any computation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certainty::{CertaintyOptions, C_DELTA};
use crate::error::{Error, Result, MAX_ORDER};
use crate::expansion::ExpansionOptions;
use crate::gabor::{PhaseGrid, SYNTHESIS_MARGIN};
use crate::numerics::{Grid, ThetaConfig};
use crate::phaseplane::LatticeIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Signal grid half width `T`.
    pub half_width: f64,
    /// Signal grid step `h`.
    pub step: f64,
    /// Zak grid size `N`.
    pub zak_n: usize,
    /// Theta truncation `Q`.
    pub theta_terms: u32,
    /// Phase-grid spacing `Δλ`.
    pub phase_step: f64,
    /// Half side of the phase box.
    pub phase_box: f64,
    /// Lattice cutoff `R`.
    pub cutoff: usize,
    pub delta: f64,
    /// Expansion order `m`.
    pub order: usize,
    /// Certainty radius `r`.
    pub radius: f64,
    /// Smallest admissible certainty radius `r₀`.
    pub min_radius: f64,
    /// Phase-grid spacing of the certainty integrals.
    pub decompose_step: f64,
    /// Lattice cutoff of the per-offset expansions in the certainty integrals.
    pub ring_cutoff: usize,
    /// Refine the Zak quadrature around `♯`.
    pub refine: bool,
    /// Index `(k, j)` of the sharp point `♯ + (k, j)`.
    pub sharp: [i64; 2],
    /// Seed of the randomized checks.
    pub seed: u64,
    /// Random cases per randomized check.
    pub samples: usize,
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            half_width: 8.0,
            step: 1.0 / 64.0,
            zak_n: 64,
            theta_terms: ThetaConfig::default().terms,
            phase_step: 1.0 / 16.0,
            phase_box: 8.0,
            cutoff: 6,
            delta: 1.0,
            order: 0,
            radius: 4.0,
            min_radius: 3.0,
            decompose_step: 1.0 / 8.0,
            ring_cutoff: 8,
            refine: true,
            sharp: [0, 0],
            seed: 7,
            samples: 10,
            output_dir: None,
        }
    }
}

fn bad(field: &str, msg: impl Into<String>) -> Error {
    Error::Config { field: field.into(), msg: msg.into() }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides; values are parsed as JSON, falling back
    /// to a plain string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o.split_once('=').ok_or_else(|| bad(o, "expected key=value"))?;
            let map = v.as_object_mut().expect("config serializes to an object");
            if !map.contains_key(key) {
                return Err(bad(key, "unknown field"));
            }
            let val = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.into()));
            map.insert(key.into(), val);
        }
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| bad("override", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = Grid::new(self.half_width, self.step).map_err(|e| bad("half_width/step", e.to_string()))?;
        if self.zak_n < 2 || self.zak_n % 2 == 1 {
            return Err(bad("zak_n", "must be even and at least 2 so that ♯ is not a quadrature node"));
        }
        let ratio = 1.0 / (self.zak_n as f64 * self.step);
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(bad("zak_n", format!("1/N = {} is not a multiple of h = {}", 1.0 / self.zak_n as f64, self.step)));
        }
        if !grid.unit_divisible() {
            return Err(bad("step", "1/h must be an integer"));
        }
        if self.theta_terms < 1 {
            return Err(bad("theta_terms", "must be at least 1"));
        }
        if !(self.phase_step > 0.0) {
            return Err(bad("phase_step", "must be positive"));
        }
        if !(self.phase_box > 0.0 && self.phase_box <= self.half_width) {
            return Err(bad("phase_box", format!("must lie in (0, T = {}]", self.half_width)));
        }
        if self.cutoff < 1 || self.cutoff as f64 > self.half_width - SYNTHESIS_MARGIN {
            return Err(bad("cutoff", format!("must lie in [1, T - {SYNTHESIS_MARGIN}]")));
        }
        if !(self.delta >= 0.0) {
            return Err(bad("delta", "must be nonnegative"));
        }
        if self.order > MAX_ORDER {
            return Err(bad("order", format!("exceeds the cap {MAX_ORDER}")));
        }
        if !(self.min_radius > 0.0) {
            return Err(bad("min_radius", "must be positive"));
        }
        if !(self.radius >= self.min_radius) {
            return Err(bad("radius", format!("must be at least min_radius = {}", self.min_radius)));
        }
        if !(self.decompose_step > 0.0) {
            return Err(bad("decompose_step", "must be positive"));
        }
        if self.ring_cutoff < 1 || self.ring_cutoff >= self.zak_n / 2 {
            return Err(bad("ring_cutoff", "must lie in [1, N/2)"));
        }
        let sharp_p = self.sharp[0] as f64 + 0.5;
        if sharp_p.abs() > self.half_width - SYNTHESIS_MARGIN {
            return Err(bad("sharp", "sharp point outside the safe region"));
        }
        if self.samples == 0 {
            return Err(bad("samples", "must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.half_width, self.step).expect("validated")
    }

    pub fn theta(&self) -> ThetaConfig {
        ThetaConfig { terms: self.theta_terms }
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid> {
        PhaseGrid::square(self.phase_box, self.phase_step)
    }

    pub fn expansion_options(&self) -> ExpansionOptions {
        ExpansionOptions {
            zak_n: self.zak_n,
            theta: self.theta(),
            refine: self.refine,
            sharp: LatticeIndex::new(self.sharp[0], self.sharp[1]),
        }
    }

    pub fn certainty_options(&self) -> CertaintyOptions {
        CertaintyOptions {
            phase_step: self.decompose_step,
            phase_box: self.phase_box,
            ring_cutoff: self.ring_cutoff,
            delta: self.delta,
            c_delta: C_DELTA,
            min_radius: self.min_radius,
            expansion: ExpansionOptions { sharp: LatticeIndex::new(0, 0), ..self.expansion_options() },
            baseline: false,
        }
    }

    /// Default certainty order `⌊r/e⌋ - 1`, at least 0.
    pub fn default_certainty_order(&self) -> usize {
        ((self.radius / std::f64::consts::E).floor() - 1.0).max(0.0) as usize
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
