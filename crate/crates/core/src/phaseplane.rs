//! Points, lattice, symplectic form and domains of the phase plane.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MEMBERSHIP_EPS: f64 = 1e-12;
const AREA_RESOLUTION: f64 = 1.0 / 64.0;

/// A point `λ = (p, θ)` of the phase plane.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub p: f64,
    pub theta: f64,
}

impl PhasePoint {
    pub const fn new(p: f64, theta: f64) -> Self {
        PhasePoint { p, theta }
    }

    /// The sharp offset `♯ = (1/2, 1/2)`.
    pub const SHARP: PhasePoint = PhasePoint::new(0.5, 0.5);

    pub fn norm_sq(self) -> f64 {
        self.p * self.p + self.theta * self.theta
    }

    pub fn norm(self) -> f64 {
        self.p.hypot(self.theta)
    }

    /// Complex label `p + iθ`.
    pub fn complex(self) -> Complex64 {
        Complex64::new(self.p, self.theta)
    }

    pub fn dist(self, other: PhasePoint) -> f64 {
        (self - other).norm()
    }

    /// Image under the rotation by `angle`, matrix `(cos, -sin; sin, cos)`.
    pub fn rotate(self, angle: f64) -> PhasePoint {
        let (s, c) = angle.sin_cos();
        PhasePoint::new(c * self.p - s * self.theta, s * self.p + c * self.theta)
    }

    pub fn dot(self, other: PhasePoint) -> f64 {
        self.p * other.p + self.theta * other.theta
    }
}

impl std::ops::Add for PhasePoint {
    type Output = PhasePoint;
    fn add(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.p + o.p, self.theta + o.theta)
    }
}

impl std::ops::Sub for PhasePoint {
    type Output = PhasePoint;
    fn sub(self, o: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.p - o.p, self.theta - o.theta)
    }
}

impl std::ops::Neg for PhasePoint {
    type Output = PhasePoint;
    fn neg(self) -> PhasePoint {
        PhasePoint::new(-self.p, -self.theta)
    }
}

impl std::ops::Mul<f64> for PhasePoint {
    type Output = PhasePoint;
    fn mul(self, s: f64) -> PhasePoint {
        PhasePoint::new(self.p * s, self.theta * s)
    }
}

impl fmt::Display for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.theta)
    }
}

impl From<[f64; 2]> for PhasePoint {
    fn from(a: [f64; 2]) -> Self {
        PhasePoint::new(a[0], a[1])
    }
}

/// Integer index `(k, j)` of a lattice point, or of the sharp point
/// `(k + 1/2, j + 1/2)` when paired with a sharp flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct LatticeIndex {
    pub k: i64,
    pub j: i64,
}

impl LatticeIndex {
    pub const fn new(k: i64, j: i64) -> Self {
        LatticeIndex { k, j }
    }

    pub fn lattice_point(self) -> PhasePoint {
        PhasePoint::new(self.k as f64, self.j as f64)
    }

    pub fn sharp_point(self) -> PhasePoint {
        PhasePoint::new(self.k as f64 + 0.5, self.j as f64 + 0.5)
    }

    pub fn point(self, sharp: bool) -> PhasePoint {
        if sharp {
            self.sharp_point()
        } else {
            self.lattice_point()
        }
    }

    /// Index of the lattice point `λ`, if it is one.
    pub fn of_lattice(p: PhasePoint) -> Option<Self> {
        integral(p.p).zip(integral(p.theta)).map(|(k, j)| LatticeIndex::new(k, j))
    }

    /// Index of the sharp point `μ`, if it is one.
    pub fn of_sharp(p: PhasePoint) -> Option<Self> {
        Self::of_lattice(p - PhasePoint::SHARP)
    }

    pub fn nearest(p: PhasePoint) -> Self {
        LatticeIndex::new(p.p.round() as i64, p.theta.round() as i64)
    }
}

impl std::ops::Add for LatticeIndex {
    type Output = LatticeIndex;
    fn add(self, o: LatticeIndex) -> LatticeIndex {
        LatticeIndex::new(self.k + o.k, self.j + o.j)
    }
}

fn integral(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() < 1e-9).then_some(r as i64)
}

/// `σ[(x,ξ),(y,η)] = ηx - ξy`.
pub fn symplectic_form(u: PhasePoint, v: PhasePoint) -> f64 {
    v.theta * u.p - u.theta * v.p
}

/// `J(p, θ) = (θ, -p)`, so that `σ[u, v] = <u | Jv>`.
pub fn j_map(u: PhasePoint) -> PhasePoint {
    PhasePoint::new(u.theta, -u.p)
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: PhasePoint,
    pub max: PhasePoint,
}

impl BBox {
    fn union(self, o: BBox) -> BBox {
        BBox {
            min: PhasePoint::new(self.min.p.min(o.min.p), self.min.theta.min(o.min.theta)),
            max: PhasePoint::new(self.max.p.max(o.max.p), self.max.theta.max(o.max.theta)),
        }
    }

    fn grow(self, r: f64) -> BBox {
        BBox { min: self.min - PhasePoint::new(r, r), max: self.max + PhasePoint::new(r, r) }
    }
}

/// Analytic region descriptions; this is also the JSON domain format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Rect { min: [f64; 2], max: [f64; 2] },
    /// Simple polygon, vertices in order.
    Polygon { vertices: Vec<[f64; 2]> },
    Union { parts: Vec<Shape> },
    Points { points: Vec<[f64; 2]> },
    /// `{μ : <μ, normal> <= offset}`.
    Halfplane { normal: [f64; 2], offset: f64 },
    Neighborhood { base: Box<Shape>, radius: f64 },
}

impl Shape {
    fn distance(&self, m: PhasePoint) -> f64 {
        match self {
            Shape::Disk { center, radius } => (m.dist((*center).into()) - radius).max(0.0),
            Shape::Rect { min, max } => {
                let dx = (min[0] - m.p).max(0.0).max(m.p - max[0]);
                let dy = (min[1] - m.theta).max(0.0).max(m.theta - max[1]);
                dx.hypot(dy)
            }
            Shape::Polygon { vertices } => {
                if vertices.is_empty() {
                    return f64::INFINITY;
                }
                if point_in_polygon(vertices, m) {
                    return 0.0;
                }
                let n = vertices.len();
                (0..n)
                    .map(|i| segment_distance(m, vertices[i].into(), vertices[(i + 1) % n].into()))
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::Union { parts } => parts.iter().map(|s| s.distance(m)).fold(f64::INFINITY, f64::min),
            Shape::Points { points } => points.iter().map(|p| m.dist((*p).into())).fold(f64::INFINITY, f64::min),
            Shape::Halfplane { normal, offset } => {
                let n = PhasePoint::from(*normal);
                ((m.dot(n) - offset) / n.norm()).max(0.0)
            }
            Shape::Neighborhood { base, radius } => (base.distance(m) - radius).max(0.0),
        }
    }

    fn bbox(&self) -> Option<BBox> {
        match self {
            Shape::Disk { center, radius } => {
                let c = PhasePoint::from(*center);
                Some(BBox { min: c, max: c }.grow(*radius))
            }
            Shape::Rect { min, max } => Some(BBox { min: (*min).into(), max: (*max).into() }),
            Shape::Polygon { vertices } | Shape::Points { points: vertices } => {
                let mut it = vertices.iter().map(|v| {
                    let p = PhasePoint::from(*v);
                    BBox { min: p, max: p }
                });
                let first = it.next()?;
                Some(it.fold(first, BBox::union))
            }
            Shape::Union { parts } => {
                let mut acc: Option<BBox> = None;
                for s in parts {
                    let b = s.bbox()?;
                    acc = Some(match acc {
                        Some(a) => a.union(b),
                        None => b,
                    });
                }
                acc
            }
            Shape::Halfplane { .. } => None,
            Shape::Neighborhood { base, radius } => base.bbox().map(|b| b.grow(*radius)),
        }
    }

    fn support(&self, u: PhasePoint) -> Option<f64> {
        let max_of = |vs: &[[f64; 2]]| vs.iter().map(|v| PhasePoint::from(*v).dot(u)).reduce(f64::max);
        match self {
            Shape::Disk { center, radius } => Some(PhasePoint::from(*center).dot(u) + radius * u.norm()),
            Shape::Rect { min, max } => max_of(&[*min, *max, [min[0], max[1]], [max[0], min[1]]]),
            Shape::Polygon { vertices } | Shape::Points { points: vertices } => max_of(vertices),
            Shape::Union { parts } => {
                let mut best: Option<f64> = None;
                for s in parts {
                    let v = s.support(u)?;
                    best = Some(best.map_or(v, |b| b.max(v)));
                }
                best
            }
            Shape::Halfplane { .. } => None,
            Shape::Neighborhood { base, radius } => base.support(u).map(|v| v + radius * u.norm()),
        }
    }

    fn exact_area(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match self {
            Shape::Disk { radius, .. } => Some(PI * radius * radius),
            Shape::Rect { min, max } => Some((max[0] - min[0]) * (max[1] - min[1])),
            Shape::Points { points } if points.len() == 1 => Some(0.0),
            Shape::Neighborhood { base, radius } => match base.as_ref() {
                Shape::Disk { radius: r0, .. } => Some(PI * (r0 + radius).powi(2)),
                Shape::Rect { min, max } => {
                    let (w, h) = (max[0] - min[0], max[1] - min[1]);
                    Some(w * h + 2.0 * radius * (w + h) + PI * radius * radius)
                }
                Shape::Points { points } if points.len() == 1 => Some(PI * radius * radius),
                _ => None,
            },
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape::Disk { radius, .. } | Shape::Neighborhood { radius, .. } if *radius < 0.0 => {
                Err(Error::NegativeRadius(*radius))
            }
            Shape::Rect { min, max } if min[0] > max[0] || min[1] > max[1] => {
                Err(Error::InvalidParameter("rect min exceeds max".into()))
            }
            Shape::Polygon { vertices } if vertices.len() < 3 => {
                Err(Error::InvalidParameter("polygon needs at least 3 vertices".into()))
            }
            Shape::Halfplane { normal, .. } if normal[0] == 0.0 && normal[1] == 0.0 => {
                Err(Error::InvalidParameter("half-plane normal is zero".into()))
            }
            Shape::Union { parts } => parts.iter().try_for_each(Shape::validate),
            Shape::Neighborhood { base, .. } => base.validate(),
            _ => Ok(()),
        }
    }
}

fn point_in_polygon(vs: &[[f64; 2]], m: PhasePoint) -> bool {
    let mut inside = false;
    let n = vs.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (vs[i][0], vs[i][1]);
        let (xj, yj) = (vs[j][0], vs[j][1]);
        if (yi > m.theta) != (yj > m.theta) && m.p < (xj - xi) * (m.theta - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn segment_distance(m: PhasePoint, a: PhasePoint, b: PhasePoint) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    let t = if len2 > 0.0 { ((m - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    m.dist(a + ab * t)
}

type Predicate = dyn Fn(PhasePoint) -> bool + Send + Sync;

/// Region given by a membership predicate and a bounding box. Distances are
/// measured to boundary samples taken at `resolution`.
#[derive(Clone)]
pub struct PredicateDomain {
    pred: Arc<Predicate>,
    bbox: BBox,
    resolution: f64,
    boundary: Arc<Vec<PhasePoint>>,
    grown: f64,
}

impl PredicateDomain {
    fn distance(&self, m: PhasePoint) -> f64 {
        let d = if (self.pred)(m) {
            0.0
        } else {
            self.boundary.iter().map(|b| m.dist(*b)).fold(f64::INFINITY, f64::min)
        };
        (d - self.grown).max(0.0)
    }
}

impl fmt::Debug for PredicateDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredicateDomain")
            .field("bbox", &self.bbox)
            .field("resolution", &self.resolution)
            .field("boundary_samples", &self.boundary.len())
            .field("grown", &self.grown)
            .finish()
    }
}

/// A region of the phase plane.
#[derive(Clone, Debug)]
pub enum PhaseDomain {
    Shape(Shape),
    Predicate(PredicateDomain),
}

impl PhaseDomain {
    pub fn from_shape(shape: Shape) -> Result<Self> {
        shape.validate()?;
        Ok(PhaseDomain::Shape(shape))
    }

    pub fn disk(center: PhasePoint, radius: f64) -> Result<Self> {
        Self::from_shape(Shape::Disk { center: [center.p, center.theta], radius })
    }

    pub fn rect(min: PhasePoint, max: PhasePoint) -> Result<Self> {
        Self::from_shape(Shape::Rect { min: [min.p, min.theta], max: [max.p, max.theta] })
    }

    pub fn point(p: PhasePoint) -> Self {
        PhaseDomain::Shape(Shape::Points { points: vec![[p.p, p.theta]] })
    }

    /// Predicate region inside `bbox`, boundary sampled at `resolution`.
    pub fn predicate(
        pred: impl Fn(PhasePoint) -> bool + Send + Sync + 'static,
        bbox: BBox,
        resolution: f64,
    ) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::InvalidParameter(format!("resolution {resolution}")));
        }
        let b = bbox.grow(resolution);
        let nx = ((b.max.p - b.min.p) / resolution).ceil() as usize + 1;
        let ny = ((b.max.theta - b.min.theta) / resolution).ceil() as usize + 1;
        let at = |i: usize, j: usize| PhasePoint::new(b.min.p + i as f64 * resolution, b.min.theta + j as f64 * resolution);
        let inside: Vec<bool> = (0..nx * ny).map(|idx| pred(at(idx / ny, idx % ny))).collect();
        let mut boundary = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                if !inside[i * ny + j] {
                    continue;
                }
                let neighbours = [(i + 1, j), (i, j + 1), (i.wrapping_sub(1), j), (i, j.wrapping_sub(1))];
                for (a, c) in neighbours {
                    if a < nx && c < ny && !inside[a * ny + c] {
                        boundary.push((at(i, j) + at(a, c)) * 0.5);
                    }
                }
            }
        }
        Ok(PhaseDomain::Predicate(PredicateDomain {
            pred: Arc::new(pred),
            bbox,
            resolution,
            boundary: Arc::new(boundary),
            grown: 0.0,
        }))
    }

    /// Euclidean distance from `m` to the domain.
    pub fn distance(&self, m: PhasePoint) -> f64 {
        match self {
            PhaseDomain::Shape(s) => s.distance(m),
            PhaseDomain::Predicate(d) => d.distance(m),
        }
    }

    pub fn contains(&self, m: PhasePoint) -> bool {
        self.distance(m) <= MEMBERSHIP_EPS
    }

    pub fn bbox(&self) -> Option<BBox> {
        match self {
            PhaseDomain::Shape(s) => s.bbox(),
            PhaseDomain::Predicate(d) => Some(d.bbox.grow(d.grown)),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.bbox().is_some()
    }

    /// `sup_{μ ∈ D} <μ, u>`; `None` when unbounded in that direction.
    pub fn support(&self, u: PhasePoint) -> Option<f64> {
        match self {
            PhaseDomain::Shape(s) => s.support(u),
            PhaseDomain::Predicate(d) => {
                let b = d.bbox.grow(d.grown);
                let corners = [b.min, b.max, PhasePoint::new(b.min.p, b.max.theta), PhasePoint::new(b.max.p, b.min.theta)];
                corners.iter().map(|c| c.dot(u)).reduce(f64::max)
            }
        }
    }

    /// Area, exact for disks and rectangles and their neighborhoods,
    /// otherwise counted on a grid of spacing 1/64.
    pub fn area(&self) -> Result<f64> {
        if let PhaseDomain::Shape(s) = self {
            if let Some(a) = s.exact_area() {
                return Ok(a);
            }
        }
        let b = self.bbox().ok_or(Error::UnboundedDomain)?;
        let h = AREA_RESOLUTION;
        let nx = ((b.max.p - b.min.p) / h).ceil() as usize;
        let ny = ((b.max.theta - b.min.theta) / h).ceil() as usize;
        let mut count = 0usize;
        for i in 0..nx {
            for j in 0..ny {
                let m = PhasePoint::new(b.min.p + (i as f64 + 0.5) * h, b.min.theta + (j as f64 + 0.5) * h);
                if self.contains(m) {
                    count += 1;
                }
            }
        }
        Ok(count as f64 * h * h)
    }

    /// The JSON shape, when the domain is analytic.
    pub fn shape(&self) -> Option<&Shape> {
        match self {
            PhaseDomain::Shape(s) => Some(s),
            PhaseDomain::Predicate(_) => None,
        }
    }
}

/// `{μ : dist(μ, D) <= r}`.
pub fn neighborhood(domain: &PhaseDomain, r: f64) -> Result<PhaseDomain> {
    if !(r >= 0.0) {
        return Err(Error::NegativeRadius(r));
    }
    Ok(match domain {
        PhaseDomain::Shape(Shape::Neighborhood { base, radius }) => {
            PhaseDomain::Shape(Shape::Neighborhood { base: base.clone(), radius: radius + r })
        }
        PhaseDomain::Shape(s) => PhaseDomain::Shape(Shape::Neighborhood { base: Box::new(s.clone()), radius: r }),
        PhaseDomain::Predicate(d) => PhaseDomain::Predicate(PredicateDomain { grown: d.grown + r, ..d.clone() }),
    })
}

/// Points of `Λ` (or `Λ+♯`) inside the domain, sorted by `(k, j)`.
pub fn lattice_points_in(domain: &PhaseDomain, sharp: bool) -> Result<Vec<LatticeIndex>> {
    let b = domain.bbox().ok_or(Error::UnboundedDomain)?;
    let off = if sharp { 0.5 } else { 0.0 };
    let k0 = (b.min.p - off).floor() as i64 - 1;
    let k1 = (b.max.p - off).ceil() as i64 + 1;
    let j0 = (b.min.theta - off).floor() as i64 - 1;
    let j1 = (b.max.theta - off).ceil() as i64 + 1;
    let mut out = Vec::new();
    for k in k0..=k1 {
        for j in j0..=j1 {
            let idx = LatticeIndex::new(k, j);
            if domain.contains(idx.point(sharp)) {
                out.push(idx);
            }
        }
    }
    Ok(out)
}
