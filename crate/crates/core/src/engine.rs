//! Online protection-level allocation over arbitrary arrival sequences.

use serde::{Deserialize, Serialize};

use crate::pareto::PlFunction;
use crate::ratios::{opt_reward, DemandPoint, Rewards};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub size: f64,
    pub class: Class,
}

impl Arrival {
    pub fn low(size: f64) -> Self {
        Arrival { size, class: Class::Low }
    }

    pub fn high(size: f64) -> Self {
        Arrival { size, class: Class::High }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngineState {
    pub remaining: f64,
    pub low_seen: f64,
    pub low_accepted: f64,
    pub high_accepted: f64,
    pub reward: f64,
}

impl EngineState {
    pub fn new(m: f64) -> Self {
        EngineState {
            remaining: m,
            low_seen: 0.0,
            low_accepted: 0.0,
            high_accepted: 0.0,
            reward: 0.0,
        }
    }
}

/// Serves one request and returns the units allocated to it.
pub fn offer(state: &mut EngineState, pl: &PlFunction, arrival: Arrival, rw: &Rewards) -> f64 {
    let s = arrival.size.max(0.0);
    match arrival.class {
        Class::High => {
            let a = s.min(state.remaining);
            state.remaining -= a;
            state.high_accepted += a;
            state.reward += a * rw.r_high();
            a
        }
        Class::Low => {
            let room = rw.m() - pl.eval(state.low_seen + s) - state.low_accepted;
            let a = room.clamp(0.0, s).min(state.remaining);
            state.low_seen += s;
            state.remaining -= a;
            state.low_accepted += a;
            state.reward += a * rw.r_low();
            a
        }
    }
}

/// Total low and high demand of a sequence.
pub fn totals(seq: &[Arrival]) -> DemandPoint {
    let mut d = DemandPoint::new(0.0, 0.0);
    for a in seq {
        match a.class {
            Class::Low => d.x += a.size,
            Class::High => d.y += a.size,
        }
    }
    d
}

pub fn hindsight_opt(seq: &[Arrival], rw: &Rewards) -> f64 {
    opt_reward(totals(seq), rw)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOutcome {
    pub reward: f64,
    pub opt: f64,
    /// 1 when the optimum is zero.
    pub ratio: f64,
    pub state: EngineState,
}

pub fn run_sequence(pl: &PlFunction, seq: &[Arrival], rw: &Rewards) -> RunOutcome {
    let mut state = EngineState::new(rw.m());
    for &a in seq {
        offer(&mut state, pl, a, rw);
    }
    let opt = hindsight_opt(seq, rw);
    let ratio = if opt > 0.0 { state.reward / opt } else { 1.0 };
    RunOutcome { reward: state.reward, opt, ratio, state }
}

/// All low demand first, then all high demand.
pub fn ordered_sequence(x: f64, y: f64) -> Vec<Arrival> {
    let mut seq = Vec::with_capacity(2);
    if x > 0.0 {
        seq.push(Arrival::low(x));
    }
    if y > 0.0 {
        seq.push(Arrival::high(y));
    }
    seq
}

fn chunks(total: f64, class: Class, out: &mut Vec<Arrival>) {
    let whole = total.floor();
    for _ in 0..whole as u64 {
        out.push(Arrival { size: 1.0, class });
    }
    let frac = total - whole;
    if frac > 0.0 {
        out.push(Arrival { size: frac, class });
    }
}

/// Unit-sized requests plus a fractional remainder for each class, low
/// first. Shuffle for a uniformly random order.
pub fn unit_chunks(x: f64, y: f64) -> Vec<Arrival> {
    let mut out = Vec::new();
    chunks(x, Class::Low, &mut out);
    chunks(y, Class::High, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Increase { x0: f64, x1: f64 },
    Slope { x0: f64, x1: f64, slope: f64 },
    Range { x: f64, p: f64 },
    NotFlat { x0: f64, x1: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Increase { x0, x1 } => write!(f, "increases on [{x0}, {x1}]"),
            Violation::Slope { x0, x1, slope } => write!(f, "slope {slope} < -1 on [{x0}, {x1}]"),
            Violation::Range { x, p } => write!(f, "value {p} at x = {x} is outside [0, m]"),
            Violation::NotFlat { x0, x1 } => write!(f, "not constant on [{x0}, {x1}] past the flat point"),
        }
    }
}

/// Checks the validity conditions: non-increasing, slope >= -1, values in
/// `[0, m]`, and constant from `flat_from` on when given.
pub fn validate_pl(pl: &PlFunction, m: f64, flat_from: Option<f64>) -> Vec<Violation> {
    const EPS: f64 = 1e-9;
    let mut out = Vec::new();
    for &(x, p) in pl.breakpoints() {
        if p < -EPS || p > m + EPS {
            out.push(Violation::Range { x, p });
        }
    }
    for w in pl.breakpoints().windows(2) {
        let ((x0, p0), (x1, p1)) = (w[0], w[1]);
        let slope = (p1 - p0) / (x1 - x0);
        if p1 > p0 + EPS {
            out.push(Violation::Increase { x0, x1 });
        }
        if slope < -1.0 - EPS {
            out.push(Violation::Slope { x0, x1, slope });
        }
        if let Some(f) = flat_from {
            if x1 > f + EPS && (p1 - p0).abs() > EPS {
                out.push(Violation::NotFlat { x0, x1 });
            }
        }
    }
    out
}
