//! Convex demand regions and the geometry derived from them.
//!
//! A region is stored as its convex hull plus two monotone chains:
//! the lower envelope `h_lo(x)` and the upper envelope `h_hi(x)`.
//! Point and segment regions are kept as degenerate hulls.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on coordinates.
pub const TOL: f64 = 1e-9;

/// Default number of vertices when polygonizing an ellipse.
pub const DEFAULT_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Polygon,
    Segment,
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("region needs at least one point")]
    Empty,
    #[error("coordinate ({x}, {y}) is negative")]
    NegativeCoordinate { x: f64, y: f64 },
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("x = {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("ellipse shape matrix is not positive semi-definite")]
    NotPsd,
    #[error("ellipse needs at least 3 segments, got {0}")]
    TooFewSegments(usize),
}

/// Convex advice region.
#[derive(Debug, Clone, PartialEq)]
pub struct MlRegion {
    vertices: Vec<Point>,
    shape: Shape,
    lower: Vec<Point>,
    upper: Vec<Point>,
}

/// Distinguished points of a region for a given capacity.
///
/// `l.y` and `h.y` are capped at `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyPoints {
    pub l: Point,
    pub h: Point,
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    /// Where the lower envelope meets `x + y = m`.
    pub r0: Vec<Point>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

// Distance-scaled turn test so the tolerance stays in coordinate units.
fn turns_left(o: Point, a: Point, b: Point) -> bool {
    let len = ((b.x - o.x).powi(2) + (b.y - o.y).powi(2)).sqrt();
    if len <= TOL {
        return false;
    }
    cross(o, a, b) / len > TOL
}

fn half_hull(sorted: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(sorted.len());
    for &p in sorted {
        while out.len() >= 2 && !turns_left(out[out.len() - 2], out[out.len() - 1], p) {
            out.pop();
        }
        out.push(p);
    }
    out
}

fn sort_dedup(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    // snap nearly equal abscissae so vertical edges stay vertical
    let mut anchor = f64::NEG_INFINITY;
    for p in pts.iter_mut() {
        if p.x - anchor <= TOL {
            p.x = anchor;
        } else {
            anchor = p.x;
        }
    }
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() <= TOL && (a.y - b.y).abs() <= TOL);
    pts
}

fn lower_chain(sorted: &[Point]) -> Vec<Point> {
    let mut chain = half_hull(sorted);
    // drop the vertical run at the right end, keeping its lowest point
    while chain.len() >= 2 && (chain[chain.len() - 1].x - chain[chain.len() - 2].x).abs() <= TOL {
        chain.pop();
    }
    chain
}

fn upper_chain(points: &[Point]) -> Vec<Point> {
    let flipped: Vec<Point> = points.iter().map(|p| Point::new(p.x, -p.y)).collect();
    lower_chain(&sort_dedup(&flipped))
        .into_iter()
        .map(|p| Point::new(p.x, -p.y))
        .collect()
}

fn chain_eval(chain: &[Point], x: f64) -> f64 {
    if chain.len() == 1 {
        return chain[0].y;
    }
    let x = x.clamp(chain[0].x, chain[chain.len() - 1].x);
    let i = chain.partition_point(|p| p.x < x).clamp(1, chain.len() - 1);
    let (a, b) = (chain[i - 1], chain[i]);
    let t = (x - a.x) / (b.x - a.x);
    a.y + t * (b.y - a.y)
}

// Abscissae where `f(x) = chain(x) + slope * x - level` vanishes.
fn chain_roots(chain: &[Point], slope: f64, level: f64) -> Vec<f64> {
    let f = |p: &Point| p.y + slope * p.x - level;
    let mut out = Vec::new();
    if chain.len() == 1 {
        if f(&chain[0]).abs() <= TOL {
            out.push(chain[0].x);
        }
        return out;
    }
    for w in chain.windows(2) {
        let (fa, fb) = (f(&w[0]), f(&w[1]));
        if fa.abs() <= TOL {
            out.push(w[0].x);
        }
        if fb.abs() <= TOL {
            out.push(w[1].x);
        }
        if (fa < -TOL && fb > TOL) || (fa > TOL && fb < -TOL) {
            out.push(w[0].x + (w[1].x - w[0].x) * fa / (fa - fb));
        }
    }
    dedup_sorted(out)
}

/// Sorts and merges values closer than `TOL`.
pub fn dedup_sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= TOL);
    xs
}

impl MlRegion {
    /// Convex hull of `points`. Collinear or coincident input gives a
    /// segment or point region.
    pub fn from_points(points: &[Point]) -> Result<Self, RegionError> {
        if points.is_empty() {
            return Err(RegionError::Empty);
        }
        for p in points {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(RegionError::NonFinite);
            }
            if p.x < 0.0 || p.y < 0.0 {
                return Err(RegionError::NegativeCoordinate { x: p.x, y: p.y });
            }
        }
        let pts = sort_dedup(points);
        if pts.len() == 1 {
            return Ok(MlRegion {
                vertices: pts.clone(),
                shape: Shape::Point,
                lower: pts.clone(),
                upper: pts,
            });
        }
        let lo = half_hull(&pts);
        let rev: Vec<Point> = pts.iter().rev().copied().collect();
        let hi = half_hull(&rev);
        let mut vertices: Vec<Point> = lo[..lo.len() - 1].to_vec();
        vertices.extend_from_slice(&hi[..hi.len() - 1]);
        let shape = if vertices.len() <= 2 { Shape::Segment } else { Shape::Polygon };
        let lower = lower_chain(&pts);
        let upper = upper_chain(&pts);
        Ok(MlRegion { vertices, shape, lower, upper })
    }

    /// Point region at `(x, y)`.
    pub fn point(x: f64, y: f64) -> Result<Self, RegionError> {
        Self::from_points(&[Point::new(x, y)])
    }

    /// Axis-aligned box `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self, RegionError> {
        Self::from_points(&[
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    /// Hull vertices in counter-clockwise order.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn is_degenerate(&self) -> bool {
        self.shape != Shape::Polygon
    }

    /// Vertices of the lower envelope, left to right.
    pub fn lower_chain(&self) -> &[Point] {
        &self.lower
    }

    /// Vertices of the upper envelope, left to right.
    pub fn upper_chain(&self) -> &[Point] {
        &self.upper
    }

    pub fn x_lo(&self) -> f64 {
        self.lower[0].x
    }

    pub fn x_hi(&self) -> f64 {
        self.lower[self.lower.len() - 1].x
    }

    pub fn y_lo(&self) -> f64 {
        self.vertices.iter().map(|p| p.y).fold(f64::INFINITY, f64::min)
    }

    pub fn y_hi(&self) -> f64 {
        self.vertices.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `h_lo(x)` with `x` clamped into the domain.
    pub fn lower_at(&self, x: f64) -> f64 {
        chain_eval(&self.lower, x)
    }

    /// `h_hi(x)` with `x` clamped into the domain.
    pub fn upper_at(&self, x: f64) -> f64 {
        chain_eval(&self.upper, x)
    }

    pub fn envelope(&self, x: f64, side: Side) -> Result<f64, RegionError> {
        let (lo, hi) = (self.x_lo(), self.x_hi());
        if !(x >= lo - TOL && x <= hi + TOL) {
            return Err(RegionError::OutOfDomain { x, lo, hi });
        }
        Ok(match side {
            Side::Lower => self.lower_at(x),
            Side::Upper => self.upper_at(x),
        })
    }

    /// Envelope capped at `m`.
    pub fn envelope_capped(&self, x: f64, side: Side, m: f64) -> Result<f64, RegionError> {
        self.envelope(x, side).map(|v| v.min(m))
    }

    /// Abscissae where `h(x) + slope * x = level` on the chosen envelope.
    pub fn line_crossings(&self, side: Side, slope: f64, level: f64) -> Vec<f64> {
        match side {
            Side::Lower => chain_roots(&self.lower, slope, level),
            Side::Upper => chain_roots(&self.upper, slope, level),
        }
    }

    /// Abscissae where the lower envelope equals `level`.
    pub fn lower_crossings(&self, level: f64) -> Vec<f64> {
        chain_roots(&self.lower, 0.0, level)
    }

    /// Abscissae where the upper envelope equals `level`.
    pub fn upper_crossings(&self, level: f64) -> Vec<f64> {
        chain_roots(&self.upper, 0.0, level)
    }

    pub fn key_points(&self, m: f64) -> KeyPoints {
        let (y_lo, y_hi) = (self.y_lo(), self.y_hi());

        let x_l = if y_lo < m {
            self.lower
                .iter()
                .find(|p| p.y <= y_lo + TOL)
                .map(|p| p.x)
                .unwrap_or(self.x_lo())
        } else {
            self.x_lo()
        };
        let l = Point::new(x_l, self.lower_at(x_l).min(m));

        let x_h = if y_hi <= m {
            self.upper
                .iter()
                .rev()
                .find(|p| p.y >= y_hi - TOL)
                .map(|p| p.x)
                .unwrap_or(self.x_hi())
        } else if self.upper_at(self.x_hi()) >= m {
            self.x_hi()
        } else {
            self.upper_crossings(m).last().copied().unwrap_or(self.x_hi())
        };
        let h = Point::new(x_h, self.upper_at(x_h).min(m));

        KeyPoints {
            l,
            h,
            x_lo: self.x_lo(),
            x_hi: self.x_hi(),
            y_lo,
            y_hi,
            r0: self.r0(m),
        }
    }

    /// Intersection of the lower envelope with `x + y = m`. When an edge
    /// lies on the line, its two endpoints are returned.
    pub fn r0(&self, m: f64) -> Vec<Point> {
        let xs = chain_roots(&self.lower, 1.0, m);
        let picked: Vec<f64> = match xs.len() {
            0 => vec![],
            1 => vec![xs[0]],
            _ => vec![xs[0], xs[xs.len() - 1]],
        };
        picked
            .into_iter()
            .map(|x| Point::new(x, self.lower_at(x)))
            .collect()
    }

    /// Vertex abscissae together with the `r0` abscissae.
    pub fn x_vertices(&self, m: f64) -> Vec<f64> {
        let mut xs: Vec<f64> = self.vertices.iter().map(|p| p.x).collect();
        xs.extend(self.r0(m).iter().map(|p| p.x));
        dedup_sorted(xs)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        if !(x >= self.x_lo() - TOL && x <= self.x_hi() + TOL) {
            return false;
        }
        y >= self.lower_at(x) - TOL && y <= self.upper_at(x) + TOL
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut a = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            a += v[i].x * v[j].y - v[j].x * v[i].y;
        }
        a.abs() / 2.0
    }

    pub fn to_spec(&self) -> RegionSpec {
        RegionSpec::Polygon {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
        }
    }
}

/// Square root of a symmetric PSD 2x2 matrix.
fn sqrt_psd(s: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2], RegionError> {
    let (a, b, c) = (s[0][0], 0.5 * (s[0][1] + s[1][0]), s[1][1]);
    let scale = a.abs().max(c.abs()).max(b.abs()).max(1.0);
    let det = a * c - b * b;
    if a < -TOL * scale || c < -TOL * scale || det < -TOL * scale * scale {
        return Err(RegionError::NotPsd);
    }
    let sd = det.max(0.0).sqrt();
    let t = (a + c + 2.0 * sd).max(0.0).sqrt();
    if t <= 0.0 {
        return Ok([[0.0; 2]; 2]);
    }
    Ok([[(a + sd) / t, b / t], [b / t, (c + sd) / t]])
}

fn clip(poly: &[Point], inside: impl Fn(&Point) -> f64) -> Vec<Point> {
    let mut out = Vec::new();
    if poly.is_empty() {
        return out;
    }
    for i in 0..poly.len() {
        let cur = poly[i];
        let prev = poly[(i + poly.len() - 1) % poly.len()];
        let (dc, dp) = (inside(&cur), inside(&prev));
        if dc >= 0.0 {
            if dp < 0.0 {
                let t = dp / (dp - dc);
                out.push(Point::new(prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)));
            }
            out.push(cur);
        } else if dp >= 0.0 {
            let t = dp / (dp - dc);
            out.push(Point::new(prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)));
        }
    }
    out
}

/// Inscribed polygon of the ellipse `{c + S^(1/2) u : |u| <= 1}`, clipped
/// to the nonnegative quadrant. A circle of radius r has `S = r^2 I`.
pub fn polygonize_ellipse(
    center: Point,
    shape: [[f64; 2]; 2],
    segments: usize,
) -> Result<MlRegion, RegionError> {
    if segments < 3 {
        return Err(RegionError::TooFewSegments(segments));
    }
    if !center.x.is_finite() || !center.y.is_finite() {
        return Err(RegionError::NonFinite);
    }
    if center.x < 0.0 || center.y < 0.0 {
        return Err(RegionError::NegativeCoordinate { x: center.x, y: center.y });
    }
    let r = sqrt_psd(shape)?;
    let ring: Vec<Point> = (0..segments)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
            let (s, c) = th.sin_cos();
            Point::new(
                center.x + r[0][0] * c + r[0][1] * s,
                center.y + r[1][0] * c + r[1][1] * s,
            )
        })
        .collect();
    let clipped = clip(&clip(&ring, |p| p.x), |p| p.y);
    let pts: Vec<Point> = clipped
        .into_iter()
        .map(|p| Point::new(p.x.max(0.0), p.y.max(0.0)))
        .collect();
    if pts.is_empty() {
        return MlRegion::from_points(&[center]);
    }
    MlRegion::from_points(&pts)
}

fn default_segments() -> usize {
    DEFAULT_SEGMENTS
}

/// Region file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Ellipse {
        center: [f64; 2],
        shape: [[f64; 2]; 2],
        #[serde(default = "default_segments")]
        segments: usize,
    },
    Point {
        at: [f64; 2],
    },
}

impl RegionSpec {
    pub fn build(&self) -> Result<MlRegion, RegionError> {
        match self {
            RegionSpec::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
                MlRegion::from_points(&pts)
            }
            RegionSpec::Ellipse { center, shape, segments } => {
                polygonize_ellipse(Point::new(center[0], center[1]), *shape, *segments)
            }
            RegionSpec::Point { at } => MlRegion::point(at[0], at[1]),
        }
    }
}
