//! Maximum consistent ratio `C*` and a consistent protection level.

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{BoundContext, BoundsError};
use crate::pareto::PlFunction;
use crate::ratios::{balance_point, DemandPoint, Rewards};
use crate::region::{dedup_sorted, MlRegion};

/// Slack allowed when testing `u - l~ >= 0`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsistencyError {
    #[error("consistency target {c} exceeds what the region allows")]
    InfeasibleTarget { c: f64 },
    #[error("no candidate ratio is feasible")]
    EmptyCandidateSet,
    #[error("epsilon {0} is outside (0, 0.5]")]
    BadEpsilon(f64),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bisection,
    Enumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CStarResult {
    pub c_star: f64,
    pub method: Method,
    pub witness_x: Option<f64>,
    pub candidate_set: Vec<f64>,
    /// Feasibility checks performed.
    pub iterations: usize,
}

/// Minimum of `u - l~` over the region and where it is attained.
pub fn feasibility_gap(region: &MlRegion, rw: &Rewards, c: f64) -> Result<(f64, f64), BoundsError> {
    Ok(BoundContext::new(region, rw, c)?.gap())
}

/// Whether some valid protection level reaches consistency `c`.
pub fn feasible(region: &MlRegion, rw: &Rewards, c: f64) -> bool {
    match feasibility_gap(region, rw, c) {
        Ok((g, _)) => g >= -FEASIBILITY_TOL,
        Err(_) => false,
    }
}

pub fn cstar_bisection(region: &MlRegion, rw: &Rewards, epsilon: f64) -> Result<CStarResult, ConsistencyError> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(ConsistencyError::BadEpsilon(epsilon));
    }
    let mut iterations = 1;
    if feasible(region, rw, 1.0) {
        return Ok(CStarResult {
            c_star: 1.0,
            method: Method::Bisection,
            witness_x: None,
            candidate_set: vec![],
            iterations,
        });
    }
    let (mut lo, mut hi) = (rw.rho(), 1.0);
    while hi - lo > epsilon {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        if feasible(region, rw, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CStarResult {
        c_star: lo,
        method: Method::Bisection,
        witness_x: None,
        candidate_set: vec![],
        iterations,
    })
}

/// Abscissae whose vertex pairs generate the candidate ratios.
fn pair_abscissae(region: &MlRegion, m: f64) -> Vec<f64> {
    let mut xs = region.x_vertices(m);
    xs.extend(region.upper_crossings(m));
    xs.extend(region.lower_crossings(m));
    dedup_sorted(xs)
}

/// Ratios at which a pair of envelope points balance.
pub fn candidate_ratios(region: &MlRegion, rw: &Rewards) -> Vec<f64> {
    let xs = pair_abscissae(region, rw.m());
    let mut out = Vec::new();
    for &x1 in &xs {
        let under = DemandPoint::new(x1, region.upper_at(x1));
        for &x2 in &xs {
            let over = DemandPoint::new(x2, region.lower_at(x2));
            let shift = if x2 <= x1 {
                if under.y < over.y {
                    continue;
                }
                0.0
            } else {
                if under.y - over.y < x2 - x1 {
                    continue;
                }
                x2 - x1
            };
            if let Ok(b) = balance_point(under, over, shift, rw) {
                out.push(b.ratio);
            }
        }
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-10);
    out
}

pub fn cstar_enumeration(region: &MlRegion, rw: &Rewards) -> Result<CStarResult, ConsistencyError> {
    let candidates = candidate_ratios(region, rw);
    // feasibility is monotone in C, and candidates are sorted descending
    let mut iterations = 0;
    let (mut lo, mut hi) = (0usize, candidates.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        iterations += 1;
        if feasible(region, rw, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let c_star = *candidates.get(lo).ok_or(ConsistencyError::EmptyCandidateSet)?;
    let (_, witness) = feasibility_gap(region, rw, c_star)?;
    Ok(CStarResult {
        c_star,
        method: Method::Enumeration,
        witness_x: Some(witness),
        candidate_set: candidates,
        iterations,
    })
}

/// The band's lower edge `l~`, extended flat to `max(m, x_hi)`.
pub fn consistent_pl(region: &MlRegion, rw: &Rewards, c: f64) -> Result<PlFunction, ConsistencyError> {
    let ctx = BoundContext::new(region, rw, c)?;
    if ctx.gap().0 < -FEASIBILITY_TOL {
        return Err(ConsistencyError::InfeasibleTarget { c });
    }
    Ok(ctx.l_tilde_pl().extended_to(rw.m().max(region.x_hi())))
}
