//! Advice regions built from demand samples.
//!
//! The ellipse path uses Welzl's randomized incremental algorithm with
//! closed-form small bases:
//! - 1 or 2 boundary points give a point or segment;
//! - 3 give the Steiner circumellipse;
//! - 4 give the least-area member of the pencil of conics through them;
//! - 5 give the unique conic.
//!
//! Khachiyan's iteration is the fallback when a basis degenerates
//! numerically.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::region::{polygonize_ellipse, MlRegion, Point, RegionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdviceError {
    #[error("no samples")]
    NoSamples,
    #[error("coverage fraction {0} is outside (0, 1]")]
    BadCoverage(f64),
    #[error(transparent)]
    Region(#[from] RegionError),
}

fn check(samples: &[Point], z: f64) -> Result<(), AdviceError> {
    if samples.is_empty() {
        return Err(AdviceError::NoSamples);
    }
    if !(z > 0.0 && z <= 1.0) {
        return Err(AdviceError::BadCoverage(z));
    }
    for p in samples {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(RegionError::NonFinite.into());
        }
        if p.x < 0.0 || p.y < 0.0 {
            return Err(RegionError::NegativeCoordinate { x: p.x, y: p.y }.into());
        }
    }
    Ok(())
}

/// Number of samples that must stay covered.
pub fn keep_count(n: usize, z: f64) -> usize {
    // guard against z * n landing a hair above an integer
    (((z * n as f64) - 1e-9).ceil() as usize).clamp(1, n)
}

fn bbox(pts: &[Point]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        b.0 = b.0.min(p.x);
        b.1 = b.1.max(p.x);
        b.2 = b.2.min(p.y);
        b.3 = b.3.max(p.y);
    }
    b
}

fn bbox_area(pts: &[Point]) -> f64 {
    let b = bbox(pts);
    (b.1 - b.0) * (b.3 - b.2)
}

/// Bounding box of the samples after greedily trimming extreme points
/// down to `ceil(z n)` survivors.
pub fn box_advice(samples: &[Point], z: f64) -> Result<MlRegion, AdviceError> {
    check(samples, z)?;
    let keep = keep_count(samples.len(), z);
    let mut pts = samples.to_vec();
    while pts.len() > keep {
        let b = bbox(&pts);
        let mut best: Option<(f64, usize)> = None;
        for i in 0..pts.len() {
            let p = pts[i];
            if p.x != b.0 && p.x != b.1 && p.y != b.2 && p.y != b.3 {
                continue;
            }
            let mut rest = pts.clone();
            rest.remove(i);
            let a = bbox_area(&rest);
            if best.map_or(true, |(ba, _)| a < ba) {
                best = Some((a, i));
            }
        }
        let (_, i) = best.expect("some point is extreme");
        pts.remove(i);
    }
    let b = bbox(&pts);
    Ok(MlRegion::rect(b.0, b.1, b.2, b.3)?)
}

/// Degenerate region at the sample mean.
pub fn point_advice(samples: &[Point]) -> Result<MlRegion, AdviceError> {
    check(samples, 1.0)?;
    let n = samples.len() as f64;
    let (sx, sy) = (neumaier(samples.iter().map(|p| p.x)), neumaier(samples.iter().map(|p| p.y)));
    Ok(MlRegion::point(sx / n, sy / n)?)
}

fn neumaier(it: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for v in it {
        let t = s + v;
        if s.abs() >= v.abs() {
            comp += (s - t) + v;
        } else {
            comp += (v - t) + s;
        }
        s = t;
    }
    s + comp
}

type Mat = [[f64; 2]; 2];

/// Ellipse `{c + S^(1/2) u : |u| <= 1}`; `s` may be singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipse {
    pub center: Point,
    pub shape: Mat,
}

// eigenvalues (ascending) and unit eigenvectors of a symmetric 2x2
fn sym_eig(s: Mat) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, c) = (s[0][0], 0.5 * (s[0][1] + s[1][0]), s[1][1]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l0, l1) = (mean - r, mean + r);
    let v1 = if b.abs() > 1e-300 {
        let v = [l1 - c, b];
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        [v[0] / n, v[1] / n]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v0 = [-v1[1], v1[0]];
    ([l0, l1], [v0, v1])
}

impl Ellipse {
    fn point(p: Point) -> Self {
        Ellipse { center: p, shape: [[0.0; 2]; 2] }
    }

    fn segment(p: Point, q: Point) -> Self {
        let d = [0.5 * (q.x - p.x), 0.5 * (q.y - p.y)];
        Ellipse {
            center: Point::new(0.5 * (p.x + q.x), 0.5 * (p.y + q.y)),
            shape: [[d[0] * d[0], d[0] * d[1]], [d[0] * d[1], d[1] * d[1]]],
        }
    }

    pub fn area(&self) -> f64 {
        let s = self.shape;
        std::f64::consts::PI * (s[0][0] * s[1][1] - s[0][1] * s[1][0]).max(0.0).sqrt()
    }

    /// Squared ellipse norm of `p - center`; infinite off a degenerate
    /// ellipse's span.
    pub fn distance(&self, p: Point) -> f64 {
        let (vals, vecs) = sym_eig(self.shape);
        let scale = vals[1].abs().max(1.0);
        let d = [p.x - self.center.x, p.y - self.center.y];
        let mut out = 0.0;
        for k in 0..2 {
            let proj = d[0] * vecs[k][0] + d[1] * vecs[k][1];
            if vals[k] > 1e-12 * scale {
                out += proj * proj / vals[k];
            } else if proj.abs() > 1e-7 * scale.sqrt() {
                return f64::INFINITY;
            }
        }
        out
    }

    fn contains(&self, p: Point, tol: f64) -> bool {
        self.distance(p) <= 1.0 + tol
    }

    pub fn polygonize(&self, segments: usize) -> Result<MlRegion, RegionError> {
        polygonize_ellipse(self.center, self.shape, segments)
    }
}

fn collinear(a: Point, b: Point, c: Point) -> bool {
    let cr = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let scale = ((b.x - a.x).hypot(b.y - a.y)).max((c.x - a.x).hypot(c.y - a.y)).max(1e-300);
    cr.abs() <= 1e-12 * scale * scale
}

fn steiner(r: &[Point]) -> Option<Ellipse> {
    if collinear(r[0], r[1], r[2]) {
        return None;
    }
    let g = Point::new((r[0].x + r[1].x + r[2].x) / 3.0, (r[0].y + r[1].y + r[2].y) / 3.0);
    let mut s = [[0.0; 2]; 2];
    for p in r {
        let d = [p.x - g.x, p.y - g.y];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] += 2.0 / 3.0 * d[i] * d[j];
            }
        }
    }
    Some(Ellipse { center: g, shape: s })
}

// conic x^T M x over homogeneous (x, y, 1)
type Conic = [[f64; 3]; 3];

fn line(p: Point, q: Point) -> [f64; 3] {
    [q.y - p.y, p.x - q.x, q.x * p.y - p.x * q.y]
}

fn line_pair(l1: [f64; 3], l2: [f64; 3]) -> Conic {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = 0.5 * (l1[i] * l2[j] + l2[i] * l1[j]);
        }
    }
    m
}

fn conic_to_ellipse(m: &Conic) -> Option<Ellipse> {
    let mut m = *m;
    let a = [[m[0][0], m[0][1]], [m[1][0], m[1][1]]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !(det > 0.0) {
        return None;
    }
    if a[0][0] < 0.0 {
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
    let a = [[m[0][0], m[0][1]], [m[1][0], m[1][1]]];
    let b = [m[0][2], m[1][2]];
    // center solves A z = -b
    let cx = -(a[1][1] * b[0] - a[0][1] * b[1]) / det;
    let cy = -(-a[1][0] * b[0] + a[0][0] * b[1]) / det;
    let k = m[2][2] + b[0] * cx + b[1] * cy;
    if !(k < 0.0) {
        return None;
    }
    // (z - c)^T (A / -k) (z - c) <= 1, so S = -k A^{-1}
    let s = [[-k * a[1][1] / det, k * a[0][1] / det], [k * a[1][0] / det, -k * a[0][0] / det]];
    Some(Ellipse { center: Point::new(cx, cy), shape: s })
}

fn pencil_area(c1: &Conic, c2: &Conic, th: f64) -> Option<(f64, Ellipse)> {
    let (s, c) = th.sin_cos();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = c * c1[i][j] + s * c2[i][j];
        }
    }
    conic_to_ellipse(&m).map(|e| (e.area(), e))
}

fn four_point(r: &[Point]) -> Option<Ellipse> {
    let g = Point::new(r.iter().map(|p| p.x).sum::<f64>() / 4.0, r.iter().map(|p| p.y).sum::<f64>() / 4.0);
    let mut q = r.to_vec();
    q.sort_by(|a, b| {
        let ta = (a.y - g.y).atan2(a.x - g.x);
        let tb = (b.y - g.y).atan2(b.x - g.x);
        ta.total_cmp(&tb)
    });
    for i in 0..4 {
        if collinear(q[i], q[(i + 1) % 4], q[(i + 2) % 4]) {
            return None;
        }
    }
    let c1 = line_pair(line(q[0], q[1]), line(q[2], q[3]));
    let c2 = line_pair(line(q[1], q[2]), line(q[3], q[0]));
    // coarse scan first; a narrow ellipse window needs the fine one
    let scan = |n: usize| {
        let step = std::f64::consts::PI / n as f64;
        let mut best: Option<(f64, f64)> = None;
        let mut hits = 0;
        for i in 0..n {
            let th = (i as f64 + 0.5) * step;
            if let Some((a, _)) = pencil_area(&c1, &c2, th) {
                hits += 1;
                if best.map_or(true, |(ba, _)| a < ba) {
                    best = Some((a, th));
                }
            }
        }
        (best, hits, step)
    };
    let (mut best, hits, mut step) = scan(256);
    if hits < 16 {
        (best, _, step) = scan(8192);
    }
    let (_, th0) = best?;
    // golden-section refinement around the best sample
    let (mut lo, mut hi) = (th0 - step, th0 + step);
    let f = |t: f64| pencil_area(&c1, &c2, t).map_or(f64::INFINITY, |v| v.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    pencil_area(&c1, &c2, 0.5 * (lo + hi)).map(|v| v.1)
}

fn five_point(r: &[Point]) -> Option<Ellipse> {
    // null vector of the 5x6 design matrix via the 5x5 minors
    let rows: Vec<[f64; 6]> = r.iter().map(|p| [p.x * p.x, p.x * p.y, p.y * p.y, p.x, p.y, 1.0]).collect();
    let mut coef = [0.0; 6];
    for (k, out) in coef.iter_mut().enumerate() {
        let mut sub = [[0.0; 5]; 5];
        for i in 0..5 {
            let mut c = 0;
            for j in 0..6 {
                if j != k {
                    sub[i][c] = rows[i][j];
                    c += 1;
                }
            }
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *out = sign * det5(sub);
    }
    let [a, b, c, d, e, f] = coef;
    let m = [[a, b / 2.0, d / 2.0], [b / 2.0, c, e / 2.0], [d / 2.0, e / 2.0, f]];
    conic_to_ellipse(&m)
}

fn det5(mut a: [[f64; 5]; 5]) -> f64 {
    let mut det = 1.0;
    for col in 0..5 {
        let piv = (col..5).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for i in col + 1..5 {
            let f = a[i][col] / a[col][col];
            for j in col..5 {
                a[i][j] -= f * a[col][j];
            }
        }
    }
    det
}

fn basis(r: &[Point]) -> Option<Option<Ellipse>> {
    match r.len() {
        0 => Some(None),
        1 => Some(Some(Ellipse::point(r[0]))),
        2 => Some(Some(Ellipse::segment(r[0], r[1]))),
        3 => steiner(r).map(Some),
        4 => four_point(r).map(Some),
        _ => five_point(r).map(Some),
    }
}

const WELZL_TOL: f64 = 1e-7;

// Outer None: numerical failure. Inner None: empty set.
fn welzl(p: &[Point], n: usize, r: &mut Vec<Point>) -> Option<Option<Ellipse>> {
    if n == 0 || r.len() == 5 {
        return basis(r);
    }
    let q = p[n - 1];
    let e = welzl(p, n - 1, r)?;
    if let Some(e) = e {
        if e.contains(q, WELZL_TOL) {
            return Some(Some(e));
        }
    }
    r.push(q);
    let out = welzl(p, n - 1, r);
    r.pop();
    out
}

/// Khachiyan's minimum-volume enclosing ellipse, to relative accuracy `tol`.
pub fn khachiyan(points: &[Point], tol: f64) -> Ellipse {
    let n = points.len();
    let mut u = vec![1.0 / n as f64; n];
    let lifted: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, 1.0]).collect();
    for _ in 0..200_000 {
        let mut x = [[0.0; 3]; 3];
        for (w, q) in u.iter().zip(&lifted) {
            for i in 0..3 {
                for j in 0..3 {
                    x[i][j] += w * q[i] * q[j];
                }
            }
        }
        let xi = match inv3(x) {
            Some(v) => v,
            None => break,
        };
        let (mut jmax, mut mmax) = (0, f64::NEG_INFINITY);
        for (k, q) in lifted.iter().enumerate() {
            let mut v = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    v += q[i] * xi[i][j] * q[j];
                }
            }
            if v > mmax {
                mmax = v;
                jmax = k;
            }
        }
        let step = (mmax - 3.0) / (3.0 * (mmax - 1.0));
        if step <= tol {
            break;
        }
        for w in u.iter_mut() {
            *w *= 1.0 - step;
        }
        u[jmax] += step;
    }
    let c = [
        u.iter().zip(points).map(|(w, p)| w * p.x).sum::<f64>(),
        u.iter().zip(points).map(|(w, p)| w * p.y).sum::<f64>(),
    ];
    let mut cov = [[0.0; 2]; 2];
    for (w, p) in u.iter().zip(points) {
        let d = [p.x - c[0], p.y - c[1]];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] += w * d[i] * d[j];
            }
        }
    }
    // S = 2 cov, then scaled so every point is inside
    let mut e = Ellipse {
        center: Point::new(c[0], c[1]),
        shape: [[2.0 * cov[0][0], 2.0 * cov[0][1]], [2.0 * cov[1][0], 2.0 * cov[1][1]]],
    };
    let worst = points.iter().map(|&p| e.distance(p)).fold(0.0, f64::max);
    if worst.is_finite() && worst > 1.0 {
        for row in e.shape.iter_mut() {
            for v in row.iter_mut() {
                *v *= worst;
            }
        }
    }
    e
}

fn inv3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    Some(r)
}

/// Minimum-area ellipse enclosing `points`.
pub fn min_enclosing_ellipse(points: &[Point]) -> Option<Ellipse> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() <= 1e-12 && (a.y - b.y).abs() <= 1e-12);
    match pts.len() {
        0 => return None,
        1 => return Some(Ellipse::point(pts[0])),
        _ => {}
    }
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    if pts.iter().all(|&p| collinear(a, b, p)) {
        // extreme points along the common line
        let dir = [b.x - a.x, b.y - a.y];
        let key = |p: &Point| p.x * dir[0] + p.y * dir[1];
        let lo = *pts.iter().min_by(|p, q| key(p).total_cmp(&key(q))).unwrap();
        let hi = *pts.iter().max_by(|p, q| key(p).total_cmp(&key(q))).unwrap();
        return Some(Ellipse::segment(lo, hi));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    pts.shuffle(&mut rng);
    let fit = welzl(&pts, pts.len(), &mut Vec::with_capacity(5)).flatten();
    match fit {
        Some(e) if pts.iter().all(|&p| e.contains(p, 1e-6)) => Some(e),
        _ => Some(khachiyan(&pts, 1e-12)),
    }
}

/// Trims samples by dropping the farthest point (in ellipse distance)
/// until `ceil(z n)` remain, then returns the enclosing ellipse of the
/// survivors.
pub fn trimmed_ellipse(samples: &[Point], z: f64) -> Result<Ellipse, AdviceError> {
    check(samples, z)?;
    let keep = keep_count(samples.len(), z);
    let mut pts = samples.to_vec();
    let mut e = min_enclosing_ellipse(&pts).ok_or(AdviceError::NoSamples)?;
    while pts.len() > keep {
        let d: Vec<f64> = pts.iter().map(|&p| e.distance(p)).collect();
        let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<usize> = (0..pts.len()).filter(|&i| d[i] >= dmax - 1e-9).collect();
        let mut best: Option<(f64, usize, Ellipse)> = None;
        for &i in &tied {
            let mut rest = pts.clone();
            rest.remove(i);
            let cand = min_enclosing_ellipse(&rest).ok_or(AdviceError::NoSamples)?;
            if best.as_ref().map_or(true, |b| cand.area() < b.0) {
                best = Some((cand.area(), i, cand));
            }
        }
        let (_, i, cand) = best.expect("at least one farthest point");
        pts.remove(i);
        e = cand;
    }
    Ok(e)
}

/// Polygon circumscribing the trimmed enclosing ellipse, so that every
/// survivor stays inside the region.
pub fn ellipse_advice(samples: &[Point], z: f64, segments: usize) -> Result<MlRegion, AdviceError> {
    let e = trimmed_ellipse(samples, z)?;
    if segments < 3 {
        return Err(RegionError::TooFewSegments(segments).into());
    }
    let grow = 1.0 / (std::f64::consts::PI / segments as f64).cos().powi(2) * (1.0 + 1e-9);
    let mut shape = e.shape;
    for row in shape.iter_mut() {
        for v in row.iter_mut() {
            *v *= grow;
        }
    }
    let center = Point::new(e.center.x.max(0.0), e.center.y.max(0.0));
    Ok(polygonize_ellipse(center, shape, segments)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::Shape;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&p| p.into()).collect()
    }

    #[test]
    fn keep_counts() {
        assert_eq!(keep_count(10, 0.9), 9);
        assert_eq!(keep_count(25, 0.9), 23);
        assert_eq!(keep_count(25, 0.8), 20);
        assert_eq!(keep_count(1, 0.1), 1);
    }

    #[test]
    fn box_full_coverage_is_bbox() {
        let s = pts(&[(1.0, 2.0), (3.0, 7.0), (5.0, 4.0)]);
        let r = box_advice(&s, 1.0).unwrap();
        assert_eq!((r.x_lo(), r.x_hi(), r.y_lo(), r.y_hi()), (1.0, 5.0, 2.0, 7.0));
    }

    #[test]
    fn box_trims_outlier() {
        let mut s = pts(&[
            (10.0, 10.0),
            (12.0, 19.0),
            (15.0, 15.0),
            (20.0, 11.0),
            (11.0, 20.0),
            (18.0, 18.0),
            (13.0, 12.0),
            (17.0, 14.0),
            (19.0, 16.0),
        ]);
        s.push(Point::new(100.0, 100.0));
        let r = box_advice(&s, 0.9).unwrap();
        assert_eq!((r.x_lo(), r.x_hi(), r.y_lo(), r.y_hi()), (10.0, 20.0, 10.0, 20.0));
    }

    #[test]
    fn single_sample_gives_point() {
        let s = pts(&[(4.0, 5.0)]);
        assert_eq!(box_advice(&s, 0.9).unwrap().shape(), Shape::Point);
        assert_eq!(ellipse_advice(&s, 0.9, 64).unwrap().shape(), Shape::Point);
        assert_eq!(point_advice(&s).unwrap().vertices()[0], Point::new(4.0, 5.0));
    }

    #[test]
    fn point_advice_mean() {
        let r = point_advice(&pts(&[(1.0, 1.0), (3.0, 3.0)])).unwrap();
        assert_eq!(r.vertices()[0], Point::new(2.0, 2.0));
    }

    #[test]
    fn bad_input() {
        assert_eq!(box_advice(&[], 0.9), Err(AdviceError::NoSamples));
        assert_eq!(box_advice(&pts(&[(1.0, 1.0)]), 0.0), Err(AdviceError::BadCoverage(0.0)));
        assert!(point_advice(&pts(&[(-1.0, 1.0)])).is_err());
    }

    #[test]
    fn three_points_on_boundary() {
        let s = pts(&[(0.0, 0.0), (4.0, 0.0), (1.0, 3.0)]);
        let e = min_enclosing_ellipse(&s).unwrap();
        for p in &s {
            assert!((e.distance(*p) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn circle_samples() {
        let (cx, cy, r) = (15.0, 12.0, 3.0);
        let s: Vec<Point> = (0..12)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 12.0 + 0.1;
                Point::new(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect();
        let e = min_enclosing_ellipse(&s).unwrap();
        assert!((e.center.x - cx).abs() < 1e-6 * r && (e.center.y - cy).abs() < 1e-6 * r);
        let (vals, _) = sym_eig(e.shape);
        for v in vals {
            assert!((v.sqrt() - r).abs() < 1e-6 * r);
        }
    }

    #[test]
    fn collinear_samples() {
        let s = pts(&[(1.0, 1.0), (2.0, 2.0), (4.0, 4.0)]);
        let e = min_enclosing_ellipse(&s).unwrap();
        assert_eq!(e.area(), 0.0);
        assert!(s.iter().all(|&p| e.contains(p, 1e-9)));
    }

    #[test]
    fn khachiyan_encloses() {
        let s = pts(&[(0.0, 0.0), (4.0, 1.0), (1.0, 3.0), (3.0, 4.0), (2.0, 2.0)]);
        let e = khachiyan(&s, 1e-10);
        assert!(s.iter().all(|&p| e.distance(p) <= 1.0 + 1e-9));
        let w = min_enclosing_ellipse(&s).unwrap();
        assert!((w.area() - e.area()).abs() < 1e-4 * e.area());
    }

    #[test]
    fn ellipse_coverage_and_determinism() {
        let s = pts(&[
            (10.0, 12.0),
            (14.0, 18.0),
            (16.0, 11.0),
            (13.0, 15.0),
            (19.0, 17.0),
            (11.0, 19.0),
            (17.0, 14.0),
            (12.0, 13.0),
            (15.0, 16.0),
            (29.0, 2.0),
        ]);
        let r = ellipse_advice(&s, 0.9, 64).unwrap();
        assert!(s.iter().filter(|p| r.contains(p.x, p.y)).count() >= 9);
        assert!(!r.contains(29.0, 2.0));
        assert_eq!(r, ellipse_advice(&s, 0.9, 64).unwrap());
    }
}
