use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlError {
    #[error("a protection-level curve needs at least one breakpoint")]
    Empty,
    #[error("breakpoint ({x}, {p}) is not finite or has negative x")]
    BadPoint { x: f64, p: f64 },
    #[error("breakpoint abscissae must be strictly increasing (at x = {0})")]
    Unsorted(f64),
}

/// Continuous piecewise-linear protection level `p(x)`.
///
/// Evaluation clamps to the first/last breakpoint outside their range, so
/// the curve is constant beyond its last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PlFunction {
    points: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for PlFunction {
    type Error = PlError;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self, PlError> {
        PlFunction::new(v)
    }
}

impl From<PlFunction> for Vec<(f64, f64)> {
    fn from(f: PlFunction) -> Self {
        f.points
    }
}

const MERGE: f64 = 1e-12;

impl PlFunction {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, PlError> {
        if points.is_empty() {
            return Err(PlError::Empty);
        }
        for &(x, p) in &points {
            if !x.is_finite() || !p.is_finite() || x < 0.0 {
                return Err(PlError::BadPoint { x, p });
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(PlError::Unsorted(w[1].0));
            }
        }
        Ok(PlFunction { points })
    }

    /// Builds from unsorted samples of a continuous curve, merging
    /// abscissae closer than 1e-12 and dropping collinear interior points.
    pub(crate) fn from_samples(mut pts: Vec<(f64, f64)>) -> Self {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            match merged.last() {
                Some(q) if p.0 - q.0 <= MERGE => {}
                _ => merged.push(p),
            }
        }
        PlFunction { points: merged }.simplified(1e-12)
    }

    pub fn constant(value: f64, horizon: f64) -> Self {
        if horizon > 0.0 {
            PlFunction { points: vec![(0.0, value), (horizon, value)] }
        } else {
            PlFunction { points: vec![(0.0, value)] }
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Last breakpoint abscissa.
    pub fn horizon(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if x >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|q| q.0 <= x);
        let (a, b) = (pts[i - 1], pts[i]);
        a.1 + (x - a.0) / (b.0 - a.0) * (b.1 - a.1)
    }

    /// Drops interior breakpoints whose removal changes the curve by at
    /// most `tol`.
    pub fn simplified(&self, tol: f64) -> Self {
        let pts = &self.points;
        if pts.len() <= 2 {
            return self.clone();
        }
        let mut out = vec![pts[0]];
        for i in 1..pts.len() - 1 {
            let a = out[out.len() - 1];
            let (b, c) = (pts[i], pts[i + 1]);
            let interp = a.1 + (b.0 - a.0) / (c.0 - a.0) * (c.1 - a.1);
            if (interp - b.1).abs() > tol {
                out.push(b);
            }
        }
        out.push(pts[pts.len() - 1]);
        PlFunction { points: out }
    }

    /// Pointwise `max(self, c)`.
    pub fn max_const(&self, c: f64) -> Self {
        let mut pts = Vec::with_capacity(self.points.len() * 2);
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            pts.push((a.0, a.1.max(c)));
            if (a.1 - c) * (b.1 - c) < 0.0 {
                let x = a.0 + (c - a.1) / (b.1 - a.1) * (b.0 - a.0);
                pts.push((x, c));
            }
        }
        let last = self.points[self.points.len() - 1];
        pts.push((last.0, last.1.max(c)));
        Self::from_samples(pts)
    }

    /// Restriction to `[0, x_end]`, padded flat if `x_end` is past the
    /// horizon.
    pub fn truncated(&self, x_end: f64) -> Self {
        let mut pts: Vec<(f64, f64)> = self.points.iter().copied().filter(|q| q.0 < x_end).collect();
        pts.push((x_end, self.eval(x_end)));
        Self::from_samples(pts)
    }

    /// Extends flat to `x_end` when the horizon is shorter.
    pub fn extended_to(&self, x_end: f64) -> Self {
        if x_end <= self.horizon() + MERGE {
            return self.clone();
        }
        let mut pts = self.points.clone();
        pts.push((x_end, self.eval(x_end)));
        PlFunction { points: pts }
    }

    /// Joins `self` (ending at `tail`'s first abscissa) with `tail`.
    pub fn concat(&self, tail: &PlFunction) -> Self {
        let start = tail.points[0].0;
        let mut pts: Vec<(f64, f64)> = self.points.iter().copied().filter(|q| q.0 < start - MERGE).collect();
        pts.extend_from_slice(&tail.points);
        Self::from_samples(pts)
    }
}
