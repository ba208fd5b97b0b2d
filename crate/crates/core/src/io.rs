//! File formats: signals, Gabor and Zak fields, coefficient sets, domains.
//!
//! Signal CSV has columns `x,re,im`. Floats are written in Rust's shortest
//! round-trip form, so CSV and JSON round trips are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gabor::{CoefficientSet, GaborField, SharpBlock};
use crate::numerics::{Grid, SampledSignal};
use crate::phaseplane::{LatticeIndex, PhaseDomain, Shape};
use crate::zak::ZakField;

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad {what} value {s:?}") })
}

/// Reads `x,re,im` rows (optional header) and checks that they sample `grid`.
pub fn read_signal_csv<R: Read>(reader: R, grid: Grid) -> Result<SampledSignal> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut values = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 1;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if rec.len() != 3 {
            return Err(Error::Parse { line, msg: format!("expected 3 columns, found {}", rec.len()) });
        }
        if idx == 0 && rec.get(0) == Some("x") {
            continue;
        }
        let x = parse_f64(&rec[0], line, "x")?;
        let n = values.len();
        if n >= grid.len() {
            return Err(Error::Parse { line, msg: format!("more than {} samples", grid.len()) });
        }
        if (x - grid.x(n)).abs() > 1e-9 {
            return Err(Error::Parse { line, msg: format!("x = {x} does not match grid node {}", grid.x(n)) });
        }
        values.push(Complex64::new(parse_f64(&rec[1], line, "re")?, parse_f64(&rec[2], line, "im")?));
    }
    if values.is_empty() {
        return Err(Error::Parse { line: 1, msg: "empty signal file".into() });
    }
    if values.len() != grid.len() {
        return Err(Error::Parse {
            line: values.len() + 1,
            msg: format!("expected {} samples, found {}", grid.len(), values.len()),
        });
    }
    SampledSignal::from_values(grid, values)
}

pub fn load_signal_csv(path: &Path, grid: Grid) -> Result<SampledSignal> {
    read_signal_csv(std::fs::File::open(path)?, grid)
}

pub fn write_signal_csv<W: Write>(mut w: W, f: &SampledSignal) -> Result<()> {
    writeln!(w, "x,re,im")?;
    for (n, v) in f.values().iter().enumerate() {
        writeln!(w, "{},{},{}", f.x(n), v.re, v.im)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalJson {
    #[serde(rename = "T")]
    pub half_width: f64,
    pub h: f64,
    pub values: Vec<[f64; 2]>,
}

pub fn signal_to_json(f: &SampledSignal) -> SignalJson {
    let g = f.grid();
    SignalJson { half_width: g.half_width(), h: g.step(), values: f.values().iter().map(|v| [v.re, v.im]).collect() }
}

pub fn signal_from_json(s: &SignalJson) -> Result<SampledSignal> {
    let grid = Grid::new(s.half_width, s.h)?;
    SampledSignal::from_values(grid, s.values.iter().map(|v| Complex64::new(v[0], v[1])).collect())
}

pub fn write_field_csv<W: Write>(mut w: W, field: &GaborField) -> Result<()> {
    writeln!(w, "p,theta,re,im")?;
    let g = field.grid;
    for i in 0..g.np {
        for j in 0..g.ntheta {
            let l = g.point(i, j);
            let v = field.get(i, j);
            writeln!(w, "{},{},{},{}", l.p, l.theta, v.re, v.im)?;
        }
    }
    Ok(())
}

/// `# N = <n>` header line, then `y,xi,re,im`.
pub fn write_zak_csv<W: Write>(mut w: W, z: &ZakField) -> Result<()> {
    let n = z.size();
    writeln!(w, "# N = {n}")?;
    writeln!(w, "y,xi,re,im")?;
    for i in 0..n {
        for j in 0..n {
            let v = z.get(i, j);
            writeln!(w, "{},{},{},{}", z.y(i), z.xi(j), v.re, v.im)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZakJson {
    #[serde(rename = "N")]
    pub n: usize,
    /// Row-major in `(y, ξ)`.
    pub values: Vec<[f64; 2]>,
}

pub fn zak_to_json(z: &ZakField) -> ZakJson {
    ZakJson { n: z.size(), values: z.values().iter().map(|v| [v.re, v.im]).collect() }
}

pub fn zak_from_json(z: &ZakJson) -> Result<ZakField> {
    ZakField::from_values(z.n, z.values.iter().map(|v| Complex64::new(v[0], v[1])).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub k: i64,
    pub j: i64,
    pub sharp: bool,
    pub re: f64,
    pub im: f64,
}

/// Coefficient file: entries plus the optional sharp block of an order-m
/// expansion and free-form diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub coefficients: Vec<CoefficientEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharp_block: Option<Vec<[f64; 2]>>,
    /// Sharp nodes `[p, θ]` of the block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoefficientInput {
    List(Vec<CoefficientEntry>),
    File(CoefficientFile),
}

pub fn coefficients_to_file(c: &CoefficientSet) -> CoefficientFile {
    let entry = |(i, v): (&LatticeIndex, &Complex64), sharp| CoefficientEntry { k: i.k, j: i.j, sharp, re: v.re, im: v.im };
    let mut coefficients: Vec<_> = c.lattice.iter().map(|e| entry(e, false)).collect();
    coefficients.extend(c.sharp.iter().map(|e| entry(e, true)));
    let (sharp_block, nodes) = match &c.sharp_block {
        Some(b) => (
            Some(b.values.iter().map(|v| [v.re, v.im]).collect()),
            Some(b.nodes.iter().map(|n| {
                let p = n.sharp_point();
                [p.p, p.theta]
            }).collect()),
        ),
        None => (None, None),
    };
    CoefficientFile { coefficients, sharp_block, nodes, diagnostics: None }
}

pub fn coefficients_from_file(f: &CoefficientFile) -> Result<CoefficientSet> {
    let mut c = CoefficientSet::new();
    for e in &f.coefficients {
        let map = if e.sharp { &mut c.sharp } else { &mut c.lattice };
        if map.insert(LatticeIndex::new(e.k, e.j), Complex64::new(e.re, e.im)).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate coefficient ({}, {}, sharp = {})", e.k, e.j, e.sharp)));
        }
    }
    match (&f.sharp_block, &f.nodes) {
        (Some(vals), Some(nodes)) => {
            if vals.len() != nodes.len() {
                return Err(Error::InvalidParameter("sharp_block and nodes differ in length".into()));
            }
            let nodes = nodes
                .iter()
                .map(|n| LatticeIndex::of_sharp(crate::phaseplane::PhasePoint::new(n[0], n[1])).ok_or(Error::NotSharp(n[0], n[1])))
                .collect::<Result<Vec<_>>>()?;
            c.sharp_block = Some(SharpBlock { nodes, values: vals.iter().map(|v| Complex64::new(v[0], v[1])).collect() });
        }
        (None, None) => {}
        _ => return Err(Error::InvalidParameter("sharp_block requires nodes".into())),
    }
    Ok(c)
}

/// Accepts either a bare list of entries or a full coefficient file.
pub fn parse_coefficients(text: &str) -> Result<CoefficientSet> {
    match serde_json::from_str::<CoefficientInput>(text)? {
        CoefficientInput::List(coefficients) => coefficients_from_file(&CoefficientFile { coefficients, ..Default::default() }),
        CoefficientInput::File(f) => coefficients_from_file(&f),
    }
}

pub fn parse_domain(text: &str) -> Result<PhaseDomain> {
    let shape: Shape = serde_json::from_str(text)?;
    PhaseDomain::from_shape(shape)
}

pub fn load_domain(path: &Path) -> Result<PhaseDomain> {
    parse_domain(&std::fs::read_to_string(path)?)
}
