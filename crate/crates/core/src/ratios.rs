//! Compatible-ratio formulas for an ordered sequence "x low, then y high".

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatioError {
    #[error("rewards must satisfy 0 < r_low < r_high and m > 0 (got r_low={r_low}, r_high={r_high}, m={m})")]
    InvalidRewards { r_low: f64, r_high: f64, m: f64 },
    #[error("protection level {p} is on the wrong side of min(m, y) = {seam}")]
    BranchMismatch { p: f64, seam: f64 },
    #[error("no balancing protection level exists")]
    NoSolution,
}

/// Per-unit rewards and capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RewardsRaw")]
pub struct Rewards {
    r_low: f64,
    r_high: f64,
    m: f64,
}

#[derive(Deserialize)]
struct RewardsRaw {
    m: f64,
    r_low: f64,
    r_high: f64,
}

impl TryFrom<RewardsRaw> for Rewards {
    type Error = RatioError;
    fn try_from(r: RewardsRaw) -> Result<Self, Self::Error> {
        Rewards::new(r.r_low, r.r_high, r.m)
    }
}

impl Rewards {
    pub fn new(r_low: f64, r_high: f64, m: f64) -> Result<Self, RatioError> {
        let ok = r_low.is_finite() && r_high.is_finite() && m.is_finite();
        if !ok || r_low <= 0.0 || r_low >= r_high || m <= 0.0 {
            return Err(RatioError::InvalidRewards { r_low, r_high, m });
        }
        Ok(Rewards { r_low, r_high, m })
    }

    pub fn r_low(&self) -> f64 {
        self.r_low
    }

    pub fn r_high(&self) -> f64 {
        self.r_high
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `r_low / r_high`.
    pub fn ratio(&self) -> f64 {
        self.r_low / self.r_high
    }

    /// Best ratio achievable without advice, `1 / (2 - r_low/r_high)`.
    pub fn rho(&self) -> f64 {
        1.0 / (2.0 - self.ratio())
    }

    /// The fixed protection level that attains `rho`.
    pub fn bq_level(&self) -> f64 {
        self.m * (1.0 - self.rho())
    }
}

/// Free function form of [`Rewards::rho`].
pub fn rho(rw: &Rewards) -> f64 {
    rw.rho()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandPoint {
    pub x: f64,
    pub y: f64,
}

impl DemandPoint {
    pub fn new(x: f64, y: f64) -> Self {
        DemandPoint { x, y }
    }
}

/// Hindsight optimum for total demands `(x, y)`.
pub fn opt_reward(pt: DemandPoint, rw: &Rewards) -> f64 {
    let m = rw.m;
    pt.y.min(m) * rw.r_high + pt.x.min((m - pt.y).max(0.0)) * rw.r_low
}

fn ratio_or_one(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        1.0
    } else {
        (num / den).min(1.0)
    }
}

pub(crate) fn over_value(p: f64, pt: DemandPoint, rw: &Rewards) -> f64 {
    let m = rw.m;
    let num = pt.y.min(m) * rw.r_high + pt.x.min((m - p).max(0.0)) * rw.r_low;
    ratio_or_one(num, opt_reward(pt, rw))
}

pub(crate) fn under_value(p: f64, pt: DemandPoint, rw: &Rewards) -> f64 {
    let m = rw.m;
    let high = p.max(pt.y.min((m - pt.x).max(0.0)));
    let num = high * rw.r_high + pt.x.min((m - p).max(0.0)) * rw.r_low;
    ratio_or_one(num, opt_reward(pt, rw))
}

/// Ratio when the protection level covers all high demand.
pub fn cp_over(p: f64, pt: DemandPoint, rw: &Rewards) -> Result<f64, RatioError> {
    let seam = pt.y.min(rw.m);
    if p < seam {
        return Err(RatioError::BranchMismatch { p, seam });
    }
    Ok(over_value(p, pt, rw))
}

/// Ratio when the protection level falls short of the high demand.
pub fn cp_under(p: f64, pt: DemandPoint, rw: &Rewards) -> Result<f64, RatioError> {
    let seam = pt.y.min(rw.m);
    if p >= seam {
        return Err(RatioError::BranchMismatch { p, seam });
    }
    Ok(under_value(p, pt, rw))
}

pub fn cp(p: f64, pt: DemandPoint, rw: &Rewards) -> f64 {
    if p >= pt.y.min(rw.m) {
        over_value(p, pt, rw)
    } else {
        under_value(p, pt, rw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Balance {
    pub p: f64,
    pub ratio: f64,
}

/// Finds `p` in `[shift, m]` where the under-protection ratio at
/// `under_pt` meets the over-protection ratio at `over_pt` evaluated at
/// `p - shift`.
///
/// Each ratio is extended flat past its seam (value 1), which makes the
/// difference monotone in `p`.
pub fn balance_point(
    under_pt: DemandPoint,
    over_pt: DemandPoint,
    shift: f64,
    rw: &Rewards,
) -> Result<Balance, RatioError> {
    let m = rw.m;
    if !(shift >= 0.0) || shift > m {
        return Err(RatioError::NoSolution);
    }
    let yu = under_pt.y.min(m);
    let yo = over_pt.y.min(m);
    let fu = |p: f64| under_value(p.min(yu), under_pt, rw);
    let fo = |q: f64| over_value(q.max(yo), over_pt, rw);
    let d = |p: f64| fu(p) - fo(p - shift);

    let (mut lo, mut hi) = (shift, m);
    if d(lo) >= 0.0 {
        return Ok(Balance { p: lo, ratio: fu(lo) });
    }
    if d(hi) < 0.0 {
        return Err(RatioError::NoSolution);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 {
            break;
        }
        if d(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let ratio = 0.5 * (fu(hi) + fo(hi - shift));
    Ok(Balance { p: hi, ratio })
}
