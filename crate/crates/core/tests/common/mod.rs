#![allow(dead_code)]

pub mod checks;

use pareto_pl::engine::{ordered_sequence, run_sequence};
use pareto_pl::{MlRegion, PlFunction, Point, Rewards};
use rand::Rng;

pub fn rw() -> Rewards {
    Rewards::new(1.0 / 3.0, 1.0, 20.0).unwrap()
}

pub fn poly(v: &[(f64, f64)]) -> MlRegion {
    let pts: Vec<Point> = v.iter().map(|&p| p.into()).collect();
    MlRegion::from_points(&pts).unwrap()
}

/// `4 <= x, y <= 16`, `20 <= x + y <= 25`.
pub fn sum_region() -> MlRegion {
    poly(&[(4.0, 16.0), (9.0, 16.0), (16.0, 9.0), (16.0, 4.0)])
}

/// `4 <= x, y <= 16`, `0 <= y - x <= 5`.
pub fn diff_region() -> MlRegion {
    poly(&[(4.0, 4.0), (16.0, 16.0), (11.0, 16.0), (4.0, 9.0)])
}

pub fn random_rewards<R: Rng>(rng: &mut R) -> Rewards {
    let m = rng.gen_range(10.0..40.0);
    let ratio = rng.gen_range(0.1..0.9);
    Rewards::new(ratio, 1.0, m).unwrap()
}

/// Convex polygon with 5 to 12 vertices in `[0, 45]^2`.
pub fn random_polygon<R: Rng>(rng: &mut R) -> MlRegion {
    loop {
        let k = rng.gen_range(5..=12);
        let (cx, cy) = (rng.gen_range(2.0..35.0), rng.gen_range(2.0..35.0));
        let (a, b) = (rng.gen_range(1.0..12.0), rng.gen_range(1.0..12.0));
        let tilt: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let pts: Vec<Point> = (0..k)
            .map(|_| {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let (u, v) = (a * t.cos(), b * t.sin());
                Point::new(
                    (cx + u * tilt.cos() - v * tilt.sin()).max(0.0),
                    (cy + u * tilt.sin() + v * tilt.cos()).max(0.0),
                )
            })
            .collect();
        let r = MlRegion::from_points(&pts).unwrap();
        let n = r.vertices().len();
        if (5..=12).contains(&n) && r.x_hi() - r.x_lo() > 0.5 {
            return r;
        }
    }
}

/// Envelopes by intersecting the vertical line at `x` with every hull edge.
pub fn brute_envelope(region: &MlRegion, x: f64) -> (f64, f64) {
    let v = region.vertices();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        if (a.x - x).abs() <= 1e-12 {
            lo = lo.min(a.y);
            hi = hi.max(a.y);
        }
        if (a.x - x) * (b.x - x) < 0.0 {
            let y = a.y + (x - a.x) / (b.x - a.x) * (b.y - a.y);
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    (lo, hi)
}

/// Ordered-sequence ratio measured by the engine under a constant level.
pub fn engine_cp(p: f64, x: f64, y: f64, rw: &Rewards) -> f64 {
    let pl = PlFunction::constant(p, rw.m().max(x) + 1.0);
    run_sequence(&pl, &ordered_sequence(x, y), rw).ratio
}

/// Largest `p >= min(y, m)` whose ratio at `(x, y)` is at least `c`.
pub fn oracle_upper(x: f64, y: f64, c: f64, rw: &Rewards) -> f64 {
    let m = rw.m();
    let (mut lo, mut hi) = (y.min(m), m);
    if engine_cp(hi, x, y, rw) >= c {
        return m;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if engine_cp(mid, x, y, rw) >= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest `p <= min(y, m)` whose ratio at `(x, y)` is at least `c`.
pub fn oracle_lower(x: f64, y: f64, c: f64, rw: &Rewards) -> f64 {
    let (mut lo, mut hi) = (0.0, y.min(rw.m()));
    if engine_cp(lo, x, y, rw) >= c {
        return 0.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if engine_cp(mid, x, y, rw) >= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Whether a non-increasing, slope >= -1 curve fits between the pointwise
/// bounds on an `n`-point grid over the region (interval propagation).
pub fn grid_feasible(region: &MlRegion, rw: &Rewards, c: f64, n: usize) -> bool {
    let (x0, x1) = (region.x_lo(), region.x_hi());
    let mut reach: Option<(f64, f64)> = None;
    let mut prev_x = x0;
    for i in 0..n {
        let x = if n == 1 { x0 } else { x0 + (x1 - x0) * i as f64 / (n - 1) as f64 };
        let (lo_y, hi_y) = brute_envelope(region, x);
        // both envelope points, both sides of each
        let lo = oracle_lower(x, hi_y, c, rw).max(oracle_lower(x, lo_y, c, rw));
        let hi = oracle_upper(x, lo_y, c, rw).min(oracle_upper(x, hi_y, c, rw));
        let (a, b) = match reach {
            None => (lo, hi),
            Some((ra, rb)) => (lo.max(ra - (x - prev_x)), hi.min(rb)),
        };
        if a > b + 1e-9 {
            return false;
        }
        reach = Some((a, b));
        prev_x = x;
    }
    true
}

/// Largest grid value `c` in `[0, 1]` (step `1/(n_c - 1)`) passing the
/// grid feasibility test.
pub fn grid_cstar(region: &MlRegion, rw: &Rewards, n_c: usize, n_x: usize) -> f64 {
    let grid: Vec<f64> = (0..n_c).map(|i| i as f64 / (n_c - 1) as f64).collect();
    let (mut lo, mut hi) = (0usize, n_c - 1);
    if grid_feasible(region, rw, 1.0, n_x) {
        return 1.0;
    }
    // invariant: grid[lo] feasible, grid[hi] not
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if grid_feasible(region, rw, grid[mid], n_x) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    grid[lo]
}

/// Random valid protection level on `[0, horizon]`.
pub fn random_valid_pl<R: Rng>(rng: &mut R, m: f64, horizon: f64) -> PlFunction {
    let k = rng.gen_range(1..6);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..horizon)).collect();
    xs.sort_by(f64::total_cmp);
    let mut p = rng.gen_range(0.0..m);
    let mut pts = vec![(0.0, p)];
    let mut last = 0.0;
    for x in xs {
        if x - last < 1e-6 {
            continue;
        }
        let drop = rng.gen_range(0.0..=1.0) * (x - last);
        p = (p - drop).max(0.0);
        pts.push((x, p));
        last = x;
    }
    if horizon - last > 1e-6 {
        pts.push((horizon, p));
    }
    PlFunction::new(pts).unwrap()
}
