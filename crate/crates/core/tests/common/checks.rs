//! Randomized property checks shared by the proptest and acceptance suites.
//! Each returns the number of assertions made, or the first failure.

use super::*;
use pareto_pl::bounds::{g_lower, g_upper, BoundContext};
use pareto_pl::consistency::consistent_pl;
use pareto_pl::engine::{offer, run_sequence, unit_chunks, validate_pl, Arrival, EngineState};
use pareto_pl::pareto::solve_pareto;
use pareto_pl::ratios::{cp, cp_over, cp_under, DemandPoint};
use rand::seq::SliceRandom;

pub type Check = Result<usize, String>;

macro_rules! ensure {
    ($n:ident, $cond:expr, $($fmt:tt)+) => {{
        $n += 1;
        if !$cond {
            return Err(format!($($fmt)+));
        }
    }};
}

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
}

fn ordered_ratio(pl: &PlFunction, x: f64, y: f64, rw: &Rewards) -> f64 {
    run_sequence(pl, &ordered_sequence(x, y), rw).ratio
}

/// Validity, band and corridor membership, and engine-replayed guarantees
/// of the Pareto curve at target `c`.
pub fn pareto_guarantee(region: &MlRegion, rw: &Rewards, c: f64, n_grid: usize) -> Check {
    let mut n = 0;
    let sol = solve_pareto(region, rw, c).map_err(|e| format!("solve at c={c}: {e}"))?;
    let m = rw.m();
    let xb = region.x_hi();
    let far = m.max(xb);
    let p = &sol.p_star;

    let v = validate_pl(p, m, Some(far));
    ensure!(n, v.is_empty(), "invalid p*: {:?}", v);
    ensure!(n, (sol.r_star - sol.r_right.min(sol.r_left)).abs() <= 1e-9, "r_star is not min(r_right, r_left)");
    ensure!(n, sol.r_star <= rw.rho() + 1e-9, "r_star {} above rho", sol.r_star);

    let ctx = BoundContext::new(region, rw, c).unwrap();
    for x in grid(0.0, xb, n_grid) {
        let px = p.eval(x);
        ensure!(n, px >= ctx.l_tilde_at(x) - 1e-7, "p*({x}) = {px} below l~ {}", ctx.l_tilde_at(x));
        ensure!(n, px <= ctx.u_at(x) + 1e-7, "p*({x}) = {px} above u {}", ctx.u_at(x));
    }
    for x in grid(0.0, far, n_grid) {
        let px = p.eval(x);
        ensure!(n, px >= g_lower(rw, sol.r_star) - 1e-7, "p*({x}) below corridor");
        ensure!(n, px <= g_upper(rw, sol.r_star, x) + 1e-7, "p*({x}) above corridor");
    }

    let mut xs: Vec<f64> = grid(region.x_lo(), xb, n_grid).collect();
    xs.extend(region.vertices().iter().map(|q| q.x));
    for x in xs {
        let (lo, hi) = brute_envelope(region, x);
        for y in [lo, hi] {
            let r = ordered_ratio(p, x, y, rw);
            ensure!(n, r >= c - 1e-6, "consistency {r} < {c} at ({x}, {y})");
        }
    }
    for x in grid(0.0, far, n_grid) {
        for y in [0.0, m] {
            let r = ordered_ratio(p, x, y, rw);
            ensure!(n, r >= sol.r_star - 1e-6, "robustness {r} < {} at ({x}, {y})", sol.r_star);
        }
    }
    Ok(n)
}

/// Random permutations of unit-chunked demand never beat the ordered
/// sequence in the adversary's favour.
pub fn ordered_worst<R: Rng>(rng: &mut R, perms: usize) -> Check {
    let mut n = 0;
    let rw = random_rewards(rng);
    let m = rw.m();
    let (x, y) = (rng.gen_range(0.0..1.5 * m), rng.gen_range(0.0..1.5 * m));
    let pl = random_valid_pl(rng, m, m.max(x) + 1.0);
    let base = ordered_ratio(&pl, x, y, &rw);
    let mut seq = unit_chunks(x, y);
    for _ in 0..perms {
        seq.shuffle(rng);
        let r = run_sequence(&pl, &seq, &rw).ratio;
        ensure!(n, r >= base - 1e-9, "permuted ratio {r} < ordered {base} at ({x}, {y})");
    }
    Ok(n)
}

/// Splitting a low request into chunks leaves the low allocation unchanged.
pub fn chunk_invariance<R: Rng>(rng: &mut R) -> Check {
    let mut n = 0;
    let rw = random_rewards(rng);
    let m = rw.m();
    let x = rng.gen_range(0.1..1.5 * m);
    let pl = random_valid_pl(rng, m, m.max(x) + 1.0);
    let high_first = if rng.gen_bool(0.5) { rng.gen_range(0.0..m) } else { 0.0 };

    let run = |parts: &[f64]| {
        let mut st = EngineState::new(m);
        if high_first > 0.0 {
            offer(&mut st, &pl, Arrival::high(high_first), &rw);
        }
        for &s in parts {
            offer(&mut st, &pl, Arrival::low(s), &rw);
        }
        st.low_accepted
    };
    let whole = run(&[x]);
    let k = rng.gen_range(2..12);
    let mut cuts: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(0.0..x)).collect();
    cuts.push(0.0);
    cuts.push(x);
    cuts.sort_by(f64::total_cmp);
    let parts: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).filter(|&s| s > 0.0).collect();
    let split = run(&parts);
    ensure!(n, (whole - split).abs() <= 1e-9, "whole {whole} vs split {split} for x={x}");
    Ok(n)
}

/// Ratio formulas: monotonicity in `p`, capping, range, and reduction to
/// the envelope points.
pub fn ratio_laws<R: Rng>(rng: &mut R) -> Check {
    let mut n = 0;
    let rw = random_rewards(rng);
    let m = rw.m();
    let x = rng.gen_range(0.0..2.0 * m);
    let y = rng.gen_range(0.0..2.0 * m);
    let pt = DemandPoint::new(x, y);
    let cap = y.min(m);

    let (a, b) = (rng.gen_range(cap..=m), rng.gen_range(cap..=m));
    let (p1, p2) = (a.min(b), a.max(b));
    let (o1, o2) = (cp_over(p1, pt, &rw).unwrap(), cp_over(p2, pt, &rw).unwrap());
    ensure!(n, o1 >= o2 - 1e-12, "cp_over not non-increasing: {o1} < {o2}");
    if p1 > m - x + 1e-6 && p2 - p1 > 1e-6 && y < m {
        ensure!(n, o1 > o2, "cp_over not strict past m - x");
    }

    let (a, b) = (rng.gen_range(0.0..=cap), rng.gen_range(0.0..=cap));
    let (q1, q2) = (a.min(b), a.max(b));
    if q2 < cap {
        let (u1, u2) = (cp_under(q1, pt, &rw).unwrap(), cp_under(q2, pt, &rw).unwrap());
        ensure!(n, u2 >= u1 - 1e-12, "cp_under not non-decreasing: {u1} > {u2}");
    }

    let p = rng.gen_range(0.0..m);
    let r = cp(p, pt, &rw);
    ensure!(n, r > 0.0 && r <= 1.0, "ratio {r} outside (0, 1]");
    if y > m && p < m {
        let capped = cp_under(p, DemandPoint::new(x, m), &rw).unwrap();
        ensure!(n, (cp_under(p, pt, &rw).unwrap() - capped).abs() <= 1e-12, "y capping fails");
    }
    if x > m {
        ensure!(n, (r - cp(p, DemandPoint::new(m, y), &rw)).abs() <= 1e-12, "x capping fails");
    }

    let lo = rng.gen_range(0.0..2.0 * m);
    let hi = lo + rng.gen_range(0.0..m);
    let ends = cp(p, DemandPoint::new(x, lo), &rw).min(cp(p, DemandPoint::new(x, hi), &rw));
    let inner = grid(lo, hi, 400).map(|y| cp(p, DemandPoint::new(x, y), &rw)).fold(1.0, f64::min);
    ensure!(n, (inner - ends).abs() <= 1e-12, "interior y worse than the ends: {inner} < {ends}");
    Ok(n)
}

/// Band ordering, shape, and monotonicity in the target.
pub fn band_laws(region: &MlRegion, rw: &Rewards, c_star: f64, c1: f64, c2: f64) -> Check {
    let mut n = 0;
    let (c1, c2) = (c1.min(c2), c1.max(c2));
    let a = BoundContext::new(region, rw, c1).unwrap();
    let b = BoundContext::new(region, rw, c2).unwrap();
    let xb = region.x_hi();
    let tol = 1e-9 * rw.m();
    for x in grid(0.0, xb, 60) {
        ensure!(n, a.l_tilde_at(x) <= b.l_tilde_at(x) + tol, "l~ decreases in C at {x}");
        ensure!(n, a.u_at(x) >= b.u_at(x) - tol, "u increases in C at {x}");
        if c2 <= c_star {
            ensure!(n, b.l_at(x) <= b.u_at(x) + tol, "l > u at {x} with C <= C*");
        }
    }

    let th = b.thresholds();
    let h = (xb - th.x_u_lo) / 200.0;
    if h > 1e-6 {
        for x in grid(th.x_u_lo + h, xb - h, 100) {
            let d2 = b.u_at(x - h) + b.u_at(x + h) - 2.0 * b.u_at(x);
            ensure!(n, d2 >= -1e-7, "u not convex at {x}: {d2}");
        }
    }
    let lt = b.l_tilde_pl();
    let zero = lt.breakpoints().iter().find(|q| q.1 <= 1e-12).map_or(xb, |q| q.0);
    let h = zero / 200.0;
    if h > 1e-6 {
        for x in grid(h, zero - h, 100) {
            let d2 = b.l_tilde_at(x - h) + b.l_tilde_at(x + h) - 2.0 * b.l_tilde_at(x);
            ensure!(n, d2 <= 1e-7, "l~ not concave at {x}: {d2}");
        }
    }
    Ok(n)
}

/// Any valid curve inside the band is consistent at both envelope points.
pub fn band_soundness(region: &MlRegion, rw: &Rewards, c: f64, level: f64) -> Check {
    let mut n = 0;
    let ctx = BoundContext::new(region, rw, c).unwrap();
    let base = consistent_pl(region, rw, c).map_err(|e| e.to_string())?;
    let p = base.max_const(level);
    let xs: Vec<f64> = grid(region.x_lo(), region.x_hi(), 200).collect();
    if xs.iter().any(|&x| p.eval(x) > ctx.u_at(x)) {
        return Ok(n);
    }
    for x in xs {
        let (lo, hi) = brute_envelope(region, x);
        for y in [lo, hi] {
            let r = cp(p.eval(x), DemandPoint::new(x, y), rw);
            ensure!(n, r >= c - 1e-7, "in-band curve gives {r} < {c} at ({x}, {y})");
        }
    }
    Ok(n)
}
