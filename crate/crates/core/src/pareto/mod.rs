//! C-Pareto optimal protection levels: best robust ratio subject to a
//! consistency target.
//!
//! The curve is solved in two pieces. The right piece fixes `p(x_hi)`
//! and extends it over `(x_hi, max(m, x_hi)]`; the left piece lifts the
//! band's lower edge to `p(x_hi)` over `[0, x_hi]`.

mod pl;

pub use pl::{PlError, PlFunction};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{g_lower, g_upper, BoundContext};
use crate::consistency::{ConsistencyError, FEASIBILITY_TOL};
use crate::ratios::{cp, DemandPoint, Rewards};
use crate::region::MlRegion;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RightSolution {
    pub p_at_xbar: f64,
    pub r_right: f64,
    /// Curve over `[x_hi, max(m, x_hi)]`.
    pub curve: PlFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeftSolution {
    /// Curve over `[0, x_hi]`.
    pub curve: PlFunction,
    pub r_left: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoSolution {
    pub c: f64,
    pub p_star: PlFunction,
    pub r_star: f64,
    pub r_right: f64,
    pub r_left: f64,
    pub p_right_at_xbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub c: f64,
    /// `None` when `c` is infeasible.
    pub r_star: Option<f64>,
}

fn feasible_ctx(region: &MlRegion, rw: &Rewards, c: f64) -> Result<BoundContext, ConsistencyError> {
    let ctx = BoundContext::new(region, rw, c)?;
    if ctx.gap().0 < -FEASIBILITY_TOL {
        return Err(ConsistencyError::InfeasibleTarget { c });
    }
    Ok(ctx)
}

fn right_from_ctx(ctx: &BoundContext) -> RightSolution {
    let rw = ctx.rewards();
    let m = rw.m();
    let rho = rw.rho();
    let xb = ctx.region().x_hi();
    let far = m.max(xb);

    let lo = ctx.l_tilde_at(xb);
    let hi = ctx.u_at(xb).max(lo);
    let g = g_lower(rw, rho);
    let p = g.clamp(lo, hi);

    let r_over = cp(p, DemandPoint::new(xb, 0.0), rw);
    let r_under = cp(p, DemandPoint::new(far, m), rw);
    let r_right = rho.min(r_over).min(r_under);

    let curve = if xb >= m {
        PlFunction::new(vec![(xb, p)]).expect("finite point")
    } else if p < g {
        debug_assert!((g_lower(rw, r_right) - p).abs() < 1e-7);
        PlFunction::new(vec![(xb, p), (m, p)]).expect("sorted")
    } else if p <= g_upper(rw, rho, xb) {
        // slide down with slope -1 until the corridor floor
        let knee = (xb + p - g).min(m);
        let mut pts = vec![(xb, p)];
        if knee > xb {
            pts.push((knee, p - (knee - xb)));
        }
        if m > knee {
            pts.push((m, g));
        }
        PlFunction::from_samples(pts)
    } else {
        debug_assert!((g_upper(rw, r_right, xb) - p).abs() < 1e-7);
        PlFunction::new(vec![(xb, p), (m, g_upper(rw, r_right, m))]).expect("sorted")
    };
    RightSolution { p_at_xbar: p, r_right, curve }
}

pub fn solve_right(region: &MlRegion, rw: &Rewards, c: f64) -> Result<RightSolution, ConsistencyError> {
    Ok(right_from_ctx(&feasible_ctx(region, rw, c)?))
}

/// Infimum over `(0, x_end]` of the ratio at `(x, 0)` under `curve`.
pub fn worst_low_only(curve: &PlFunction, x_end: f64, rw: &Rewards) -> f64 {
    let m = rw.m();
    let ratio = |x: f64| cp(curve.eval(x), DemandPoint::new(x, 0.0), rw);
    let mut xs: Vec<f64> = curve.breakpoints().iter().map(|q| q.0).filter(|&x| x > 0.0 && x < x_end).collect();
    xs.push(x_end);
    if m < x_end {
        xs.push(m);
    }
    // where the low demand first exceeds what the curve lets in
    for w in curve.breakpoints().windows(2) {
        let (a, b) = (w[0], w[1]);
        let fa = a.0 - (m - a.1);
        let fb = b.0 - (m - b.1);
        if fa * fb < 0.0 {
            let x = a.0 + (b.0 - a.0) * fa / (fa - fb);
            if x > 0.0 && x < x_end {
                xs.push(x);
            }
        }
    }
    xs.into_iter().filter(|&x| x > 0.0).map(ratio).fold(1.0, f64::min)
}

fn left_from_ctx(ctx: &BoundContext, p_right_at_xbar: f64) -> LeftSolution {
    let rw = ctx.rewards();
    let xb = ctx.region().x_hi();
    let curve = ctx.l_tilde_pl().max_const(p_right_at_xbar).truncated(xb);
    let corner = cp(curve.eval(xb), DemandPoint::new(xb, rw.m()), rw);
    let r_left = corner.min(worst_low_only(&curve, xb, rw));
    LeftSolution { curve, r_left }
}

pub fn solve_left(region: &MlRegion, rw: &Rewards, c: f64, p_right_at_xbar: f64) -> Result<LeftSolution, ConsistencyError> {
    let ctx = BoundContext::new(region, rw, c)?;
    Ok(left_from_ctx(&ctx, p_right_at_xbar))
}

pub fn solve_pareto(region: &MlRegion, rw: &Rewards, c: f64) -> Result<ParetoSolution, ConsistencyError> {
    let ctx = feasible_ctx(region, rw, c)?;
    let right = right_from_ctx(&ctx);
    let left = left_from_ctx(&ctx, right.p_at_xbar);
    let p_star = left.curve.concat(&right.curve);
    Ok(ParetoSolution {
        c,
        p_star,
        r_star: right.r_right.min(left.r_left),
        r_right: right.r_right,
        r_left: left.r_left,
        p_right_at_xbar: right.p_at_xbar,
    })
}

pub fn tradeoff_curve(region: &MlRegion, rw: &Rewards, c_grid: &[f64]) -> Vec<CurvePoint> {
    c_grid
        .par_iter()
        .map(|&c| CurvePoint {
            c,
            r_star: solve_pareto(region, rw, c).ok().map(|s| s.r_star),
        })
        .collect()
}
