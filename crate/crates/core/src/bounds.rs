//! Consistency band `l~(x;C) <= p(x) <= u(x;C)` and the robustness
//! corridor `g_lo(x;R) <= p(x) <= g_hi(x;R)`.
//!
//! Pointwise bounds:
//! - `U(x)`: the largest `p` with `cp(p; (x, h_lo(x))) >= C`;
//! - `L(x)`: the smallest `p` with `cp(p; (x, h_hi(x))) >= C`.
//!
//! A valid (non-increasing, slope >= -1) protection level lies between
//! them iff it lies in the band
//! - `u(x) = min over x' <= x of U(x')` (m to the left of the region);
//! - `l~(x) = max over x' of L(x') - (x - x')+`, floored at zero.
//!
//! Both are piecewise linear with kinks at a finite breakpoint set, so
//! every quantity here is evaluated exactly.

use serde::Serialize;
use thiserror::Error;

use crate::pareto::PlFunction;
use crate::ratios::Rewards;
use crate::region::{dedup_sorted, MlRegion, Side, TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("x = {x} lies outside [0, {hi}]")]
    OutOfDomain { x: f64, hi: f64 },
    #[error("consistency target {0} is outside [0, 1]")]
    InvalidTarget(f64),
    #[error("robust target {r} is outside (0, {rho}]")]
    TargetOutOfRange { r: f64, rho: f64 },
}

/// Threshold abscissae of the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Right end of the stretch where `u = m`.
    pub x_u_lo: f64,
    /// Where `u` reaches its final value.
    pub x_u_hi: f64,
    pub x_h: f64,
    /// Where `l` reaches zero.
    pub x_l_hi: f64,
    /// Where `l~` leaves `l` for its slope -1 extension.
    pub x_minus_one: f64,
}

#[derive(Debug, Clone)]
pub struct BoundContext {
    region: MlRegion,
    rw: Rewards,
    c: f64,
    // breakpoints of U, values and running minimum
    ub: Vec<f64>,
    u_vals: Vec<f64>,
    u_prefix_min: Vec<f64>,
    // breakpoints of L, values, suffix max and prefix max of L(b) + b
    lb: Vec<f64>,
    l_vals: Vec<f64>,
    l_suffix_max: Vec<f64>,
    ray_prefix_max: Vec<f64>,
}

fn linear_root(a: f64, fa: f64, b: f64, fb: f64) -> Option<f64> {
    if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
        let x = a + (b - a) * fa / (fa - fb);
        (x > a && x < b).then_some(x)
    } else {
        None
    }
}

// Adds interior roots of `f` on each sub-interval; `f(x, mid)` evaluates
// the linear branch active at `mid`.
fn refine(base: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = base.clone();
    for w in base.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if let Some(x) = linear_root(a, f(a, mid), b, f(b, mid)) {
            out.push(x);
        }
    }
    dedup_sorted(out)
}

impl BoundContext {
    pub fn new(region: &MlRegion, rw: &Rewards, c: f64) -> Result<Self, BoundsError> {
        if !(0.0..=1.0).contains(&c) {
            return Err(BoundsError::InvalidTarget(c));
        }
        let mut ctx = BoundContext {
            region: region.clone(),
            rw: *rw,
            c,
            ub: vec![],
            u_vals: vec![],
            u_prefix_min: vec![],
            lb: vec![],
            l_vals: vec![],
            l_suffix_max: vec![],
            ray_prefix_max: vec![],
        };
        ctx.build_upper();
        ctx.build_lower();
        Ok(ctx)
    }

    fn in_domain(&self, x: f64) -> bool {
        x >= self.region.x_lo() && x <= self.region.x_hi()
    }

    fn clip(&self, xs: Vec<f64>) -> Vec<f64> {
        let (lo, hi) = (self.region.x_lo(), self.region.x_hi());
        let mut xs: Vec<f64> = xs.into_iter().filter(|&x| x >= lo && x <= hi).collect();
        xs.push(lo);
        xs.push(hi);
        dedup_sorted(xs)
    }

    fn build_upper(&mut self) {
        let m = self.rw.m();
        let r = &self.region;
        let mut base: Vec<f64> = r.lower_chain().iter().map(|p| p.x).collect();
        base.extend(r.lower_crossings(m));
        base.extend(r.line_crossings(Side::Lower, 1.0, m));
        let base = self.clip(base);
        let ub = refine(base, |x, mid| {
            let branch = mid + self.region.lower_at(mid).min(m) >= m;
            self.closed_upper(x, branch) - m
        });
        self.u_vals = ub.iter().map(|&x| self.pointwise_upper(x)).collect();
        let mut run = f64::INFINITY;
        self.u_prefix_min = self
            .u_vals
            .iter()
            .map(|&v| {
                run = run.min(v);
                run
            })
            .collect();
        self.ub = ub;
    }

    fn build_lower(&mut self) {
        let m = self.rw.m();
        let r = &self.region;
        let mut base: Vec<f64> = r.upper_chain().iter().map(|p| p.x).collect();
        base.extend(r.upper_crossings(m));
        base.extend(r.line_crossings(Side::Upper, 1.0, m));
        base.push(m);
        let base = self.clip(base);
        let lb = refine(base, |x, _| self.closed_lower(x) - (m - x).max(0.0));
        self.l_vals = lb.iter().map(|&x| self.pointwise_lower(x)).collect();
        let n = lb.len();
        let mut suffix = vec![0.0; n];
        let mut run = 0.0f64;
        for i in (0..n).rev() {
            run = run.max(self.l_vals[i]);
            suffix[i] = run;
        }
        let mut prefix = vec![0.0; n];
        let mut run = f64::NEG_INFINITY;
        for i in 0..n {
            run = run.max(self.l_vals[i] + lb[i]);
            prefix[i] = run;
        }
        self.l_suffix_max = suffix;
        self.ray_prefix_max = prefix;
        self.lb = lb;
    }

    pub fn region(&self) -> &MlRegion {
        &self.region
    }

    pub fn rewards(&self) -> &Rewards {
        &self.rw
    }

    pub fn target(&self) -> f64 {
        self.c
    }

    // `x + cap(h_lo) >= m` selects the first branch.
    fn closed_upper(&self, x: f64, branch_hi: bool) -> f64 {
        let m = self.rw.m();
        let c = self.c;
        let yc = self.region.lower_at(x).min(m);
        let k = (1.0 - c) * self.rw.r_high() / self.rw.r_low();
        if branch_hi {
            (k + c) * yc + m * (1.0 - c)
        } else {
            k * yc - c * x + m
        }
    }

    fn closed_lower(&self, x: f64) -> f64 {
        let m = self.rw.m();
        let (rl, rh) = (self.rw.r_low(), self.rw.r_high());
        self.c * self.region.upper_at(x).min(m) - (1.0 - self.c) * m * rl / (rh - rl)
    }

    /// Largest protection level keeping the lower envelope point at `x`
    /// consistent. `x` is clamped into the region's domain.
    pub fn pointwise_upper(&self, x: f64) -> f64 {
        let m = self.rw.m();
        let x = x.clamp(self.region.x_lo(), self.region.x_hi());
        let branch = x + self.region.lower_at(x).min(m) >= m;
        self.closed_upper(x, branch).min(m)
    }

    /// Smallest protection level keeping the upper envelope point at `x`
    /// consistent (upper semicontinuous at its jumps). `x` is clamped.
    pub fn pointwise_lower(&self, x: f64) -> f64 {
        let m = self.rw.m();
        let x = x.clamp(self.region.x_lo(), self.region.x_hi());
        let closed = self.closed_lower(x);
        // slack keeps the jump value at a rounded root
        if closed >= (m - x).max(0.0) - TOL {
            closed.max(0.0)
        } else {
            0.0
        }
    }

    /// `u(x)` for any `x >= 0`; flat past the region.
    pub fn u_at(&self, x: f64) -> f64 {
        let m = self.rw.m();
        if x < self.region.x_lo() {
            return m;
        }
        let i = self.ub.partition_point(|&b| b <= x);
        let prior = self.u_prefix_min[i.max(1) - 1];
        if x >= self.region.x_hi() {
            return prior;
        }
        prior.min(self.pointwise_upper(x))
    }

    /// `l(x)`, the running maximum of `L` from the right.
    pub fn l_at(&self, x: f64) -> f64 {
        if x > self.region.x_hi() {
            return 0.0;
        }
        let i = self.lb.partition_point(|&b| b < x);
        let tail = if i < self.lb.len() { self.l_suffix_max[i] } else { 0.0 };
        let here = if self.in_domain(x) { self.pointwise_lower(x) } else { 0.0 };
        tail.max(here)
    }

    /// `l~(x)`.
    pub fn l_tilde_at(&self, x: f64) -> f64 {
        let i = self.lb.partition_point(|&b| b <= x);
        let ahead = if i < self.lb.len() { self.l_suffix_max[i] } else { 0.0 };
        let behind = if i > 0 { self.ray_prefix_max[i - 1] - x } else { 0.0 };
        let here = if self.in_domain(x) { self.pointwise_lower(x) } else { 0.0 };
        ahead.max(behind).max(here).max(0.0)
    }

    fn check(&self, x: f64) -> Result<(), BoundsError> {
        let hi = self.region.x_hi();
        if !(x >= 0.0 && x <= hi + TOL) {
            return Err(BoundsError::OutOfDomain { x, hi });
        }
        Ok(())
    }

    pub fn u_bound(&self, x: f64) -> Result<f64, BoundsError> {
        self.check(x).map(|_| self.u_at(x))
    }

    pub fn l_bound(&self, x: f64) -> Result<f64, BoundsError> {
        self.check(x).map(|_| self.l_at(x))
    }

    pub fn l_tilde(&self, x: f64) -> Result<f64, BoundsError> {
        self.check(x).map(|_| self.l_tilde_at(x))
    }

    /// All abscissae where `U` or `L` may kink or jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut xs = self.ub.clone();
        xs.extend_from_slice(&self.lb);
        dedup_sorted(xs)
    }

    /// `min_x u(x) - l~(x)` and the smallest abscissa attaining it.
    pub fn gap(&self) -> (f64, f64) {
        let mut best = (f64::INFINITY, self.region.x_lo());
        for x in self.breakpoints() {
            let g = self.pointwise_upper(x) - self.l_tilde_at(x);
            if g < best.0 - 1e-12 {
                best = (g, x);
            }
        }
        best
    }

    /// `l~` as an explicit curve on `[0, x_hi]`.
    pub fn l_tilde_pl(&self) -> PlFunction {
        let hi = self.region.x_hi();
        let m = self.rw.m();
        // candidate lines (slope, intercept) whose upper envelope is l~
        let mut lines: Vec<(f64, f64)> = vec![(0.0, 0.0)];
        for (&b, &v) in self.lb.iter().zip(&self.l_vals) {
            if v > 0.0 {
                lines.push((0.0, v));
                lines.push((-1.0, v + b));
            }
        }
        for w in self.lb.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let cm = self.closed_lower(mid);
            if cm > 0.0 && cm >= (m - mid).max(0.0) {
                let (ca, cb) = (self.closed_lower(a), self.closed_lower(b));
                let s = (cb - ca) / (b - a);
                lines.push((s, ca - s * a));
            }
        }
        let mut xs = vec![0.0, hi];
        xs.extend(self.lb.iter().copied());
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (s1, c1) = lines[i];
                let (s2, c2) = lines[j];
                if (s1 - s2).abs() > 1e-12 {
                    let x = (c2 - c1) / (s1 - s2);
                    if x > 0.0 && x < hi {
                        xs.push(x);
                    }
                }
            }
        }
        let pts: Vec<(f64, f64)> = xs.into_iter().map(|x| (x, self.l_tilde_at(x))).collect();
        PlFunction::from_samples(pts)
    }

    pub fn thresholds(&self) -> Thresholds {
        let m = self.rw.m();
        let (lo, hi) = (self.region.x_lo(), self.region.x_hi());

        let mut x_u_lo = lo;
        for (&b, &v) in self.ub.iter().zip(&self.u_prefix_min) {
            if v >= m - TOL {
                x_u_lo = b;
            } else {
                break;
            }
        }
        let final_min = *self.u_prefix_min.last().unwrap();
        let x_u_hi = self
            .ub
            .iter()
            .zip(&self.u_prefix_min)
            .find(|(&b, &v)| b >= x_u_lo && v <= final_min + TOL)
            .map(|(&b, _)| b)
            .unwrap_or(hi);

        let x_h = self.region.key_points(m).h.x;
        let x_l_hi = self
            .lb
            .iter()
            .copied()
            .find(|&b| b >= x_h - TOL && self.l_at(b) <= TOL)
            .unwrap_or(hi);

        let lt = self.l_tilde_pl();
        let mut xs: Vec<f64> = lt.breakpoints().iter().map(|q| q.0).collect();
        xs.extend(self.lb.iter().copied());
        let xs = dedup_sorted(xs);
        let mut x_minus_one = x_h;
        for x in xs.into_iter().filter(|&x| x >= x_h) {
            if (self.l_tilde_at(x) - self.l_at(x)).abs() <= 1e-9 {
                x_minus_one = x;
            } else {
                break;
            }
        }
        Thresholds { x_u_lo, x_u_hi, x_h, x_l_hi, x_minus_one }
    }
}

/// Constant lower edge of the robustness corridor, floored at zero.
pub fn g_lower(rw: &Rewards, r: f64) -> f64 {
    let a = rw.ratio();
    (rw.m() * (r - a) / (1.0 - a)).max(0.0)
}

/// Upper edge of the robustness corridor, `m - R x` frozen past `m`.
pub fn g_upper(rw: &Rewards, r: f64, x: f64) -> f64 {
    rw.m() - r * x.min(rw.m())
}

pub fn g_corridor(rw: &Rewards, r: f64, x: f64, side: Side) -> Result<f64, BoundsError> {
    let rho = rw.rho();
    if !(r > 0.0 && r <= rho + 1e-12) {
        return Err(BoundsError::TargetOutOfRange { r, rho });
    }
    if !(x >= 0.0) {
        return Err(BoundsError::OutOfDomain { x, hi: f64::INFINITY });
    }
    Ok(match side {
        Side::Lower => g_lower(rw, r),
        Side::Upper => g_upper(rw, r, x),
    })
}
