//! Simulation pipeline: sample demand, build advice, solve for a policy,
//! and score it on a shared test set.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::advice::{box_advice, ellipse_advice, point_advice, AdviceError};
use crate::consistency::{cstar_bisection, cstar_enumeration, ConsistencyError};
use crate::engine::{run_sequence, unit_chunks};
use crate::pareto::{solve_pareto, PlFunction};
use crate::ratios::{cp, DemandPoint, RatioError, Rewards};
use crate::region::{Point, Shape, DEFAULT_SEGMENTS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Rewards(#[from] RatioError),
    #[error("trial {trial}: {source}")]
    Advice { trial: usize, source: AdviceError },
    #[error("trial {trial}: {source}")]
    Solve { trial: usize, source: ConsistencyError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandKind {
    UniformMixture,
    NormalMixture,
}

/// Each coordinate is drawn independently: with probability `weight`
/// from the main component, otherwise from `Uniform(cont_lo, cont_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandModel {
    pub kind: DemandKind,
    #[serde(default = "defaults::weight")]
    pub weight: f64,
    /// Uniform bounds or (mean, std) of the main component.
    #[serde(default)]
    pub main: Option<(f64, f64)>,
    #[serde(default = "defaults::contaminant")]
    pub contaminant: (f64, f64),
    /// Floor each draw to whole arrivals.
    #[serde(default)]
    pub discretize: bool,
}

mod defaults {
    pub fn weight() -> f64 {
        0.9
    }
    pub fn contaminant() -> (f64, f64) {
        (0.0, 30.0)
    }
    pub fn segments() -> usize {
        super::DEFAULT_SEGMENTS
    }
    pub fn n_test() -> usize {
        100
    }
    pub fn n_perms() -> usize {
        100
    }
}

impl DemandModel {
    pub fn uniform_mixture() -> Self {
        DemandModel {
            kind: DemandKind::UniformMixture,
            weight: 0.9,
            main: None,
            contaminant: (0.0, 30.0),
            discretize: false,
        }
    }

    pub fn normal_mixture() -> Self {
        DemandModel { kind: DemandKind::NormalMixture, ..Self::uniform_mixture() }
    }

    fn main_params(&self) -> (f64, f64) {
        self.main.unwrap_or(match self.kind {
            DemandKind::UniformMixture => (10.0, 20.0),
            DemandKind::NormalMixture => (15.0, 3.0),
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let (a, b) = self.main_params();
        let bad = |s: &str| Err(HarnessError::Config(s.to_string()));
        if !(0.0..=1.0).contains(&self.weight) {
            return bad("mixture weight must lie in [0, 1]");
        }
        if !(self.contaminant.0 < self.contaminant.1) {
            return bad("contaminant bounds must be increasing");
        }
        match self.kind {
            DemandKind::UniformMixture if !(a < b) => bad("uniform bounds must be increasing"),
            DemandKind::NormalMixture if !(b > 0.0) => bad("normal std must be positive"),
            _ => Ok(()),
        }
    }

    fn coordinate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.main_params();
        let v = if rng.gen::<f64>() < self.weight {
            match self.kind {
                DemandKind::UniformMixture => Uniform::new(a, b).sample(rng),
                DemandKind::NormalMixture => Normal::new(a, b).expect("validated std").sample(rng),
            }
        } else {
            Uniform::new(self.contaminant.0, self.contaminant.1).sample(rng)
        };
        let v = v.max(0.0);
        if self.discretize {
            v.floor()
        } else {
            v
        }
    }
}

pub fn sample_demand<R: Rng + ?Sized>(model: &DemandModel, rng: &mut R) -> DemandPoint {
    let x = model.coordinate(rng);
    let y = model.coordinate(rng);
    DemandPoint::new(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Order {
    Adversarial,
    Stochastic {
        #[serde(default = "defaults::n_perms")]
        n_perms: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// `None` for an empty test set.
    pub avg_cp: Option<f64>,
    pub worst_cp: Option<f64>,
    pub ratios: Vec<f64>,
}

impl EvalReport {
    fn from_ratios(ratios: Vec<f64>) -> Self {
        if ratios.is_empty() {
            return EvalReport { avg_cp: None, worst_cp: None, ratios };
        }
        let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        EvalReport { avg_cp: Some(avg), worst_cp: Some(worst), ratios }
    }
}

/// Scores `policy` on each test point: the ordered ratio, or the mean
/// ratio over `n_perms` shuffles of unit-sized requests.
pub fn evaluate<R: Rng + ?Sized>(
    policy: &PlFunction,
    testset: &[DemandPoint],
    order: Order,
    rw: &Rewards,
    rng: &mut R,
) -> EvalReport {
    let ratios = testset
        .iter()
        .map(|&pt| match order {
            Order::Adversarial => cp(policy.eval(pt.x), pt, rw),
            Order::Stochastic { n_perms } => {
                let mut seq = unit_chunks(pt.x, pt.y);
                let mut total = 0.0;
                for _ in 0..n_perms.max(1) {
                    seq.shuffle(rng);
                    total += run_sequence(policy, &seq, rw).ratio;
                }
                total / n_perms.max(1) as f64
            }
        })
        .collect();
    EvalReport::from_ratios(ratios)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdviceKind {
    Box,
    Ellipse,
    Point,
    /// Fixed protection level attaining the no-advice optimum.
    Bq,
    /// Not from the reference study: the fixed protection level on a
    /// 0.5-unit grid with the best average ratio on the training samples.
    FixedGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardsConfig {
    pub m: f64,
    pub r_low: f64,
    pub r_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: DemandModel,
    pub rewards: RewardsConfig,
    pub advice: AdviceKind,
    /// Coverage fraction for box and ellipse advice.
    pub z: f64,
    pub n_samples: usize,
    /// Number of advice draws (K).
    pub trials: usize,
    /// The target is `c_factor * C*`.
    pub c_factor: f64,
    #[serde(default = "defaults::n_test")]
    pub n_test: usize,
    pub order: Order,
    pub seed: u64,
    #[serde(default = "defaults::segments")]
    pub segments: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<Rewards, HarnessError> {
        self.model.validate()?;
        let rw = Rewards::new(self.rewards.r_low, self.rewards.r_high, self.rewards.m)?;
        let bad = |s: &str| Err(HarnessError::Config(s.to_string()));
        if !(self.z > 0.0 && self.z <= 1.0) {
            return bad("z must lie in (0, 1]");
        }
        if self.n_samples == 0 || self.trials == 0 {
            return bad("n_samples and trials must be positive");
        }
        if !(0.0..=1.0).contains(&self.c_factor) {
            return bad("c_factor must lie in [0, 1]");
        }
        if self.segments < 3 {
            return bad("segments must be at least 3");
        }
        Ok(rw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub c_star: Option<f64>,
    pub c: Option<f64>,
    pub r_star: Option<f64>,
    pub avg_cp: f64,
    pub worst_cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub avg_cp: f64,
    pub worst_cp: f64,
    /// Standard errors across trials.
    pub avg_cp_se: f64,
    pub worst_cp_se: f64,
    pub trials: Vec<TrialRecord>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const TEST_STREAM: u64 = 0;

fn fixed_grid_level(samples: &[Point], rw: &Rewards) -> f64 {
    let steps = (rw.m() / 0.5).round() as usize;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=steps {
        let p = (k as f64 * 0.5).min(rw.m());
        let avg = samples.iter().map(|s| cp(p, DemandPoint::new(s.x, s.y), rw)).sum::<f64>();
        if avg > best.0 + 1e-12 {
            best = (avg, p);
        }
    }
    best.1
}

struct Policy {
    pl: PlFunction,
    c_star: Option<f64>,
    c: Option<f64>,
    r_star: Option<f64>,
}

fn build_policy(cfg: &ExperimentConfig, rw: &Rewards, samples: &[Point], trial: usize) -> Result<Policy, HarnessError> {
    let horizon = rw.m();
    let flat = |p: f64| Policy {
        pl: PlFunction::constant(p, horizon),
        c_star: None,
        c: None,
        r_star: None,
    };
    let region = match cfg.advice {
        AdviceKind::Bq => return Ok(flat(rw.bq_level())),
        AdviceKind::FixedGrid => return Ok(flat(fixed_grid_level(samples, rw))),
        AdviceKind::Box => box_advice(samples, cfg.z),
        AdviceKind::Ellipse => ellipse_advice(samples, cfg.z, cfg.segments),
        AdviceKind::Point => point_advice(samples),
    }
    .map_err(|source| HarnessError::Advice { trial, source })?;
    let solve = |source| HarnessError::Solve { trial, source };
    let c_star = match region.shape() {
        Shape::Polygon if region.vertices().len() > 16 => cstar_bisection(&region, rw, 1e-6),
        _ => cstar_enumeration(&region, rw),
    }
    .map_err(solve)?
    .c_star;
    let c = cfg.c_factor * c_star;
    let sol = solve_pareto(&region, rw, c).map_err(solve)?;
    Ok(Policy { pl: sol.p_star, c_star: Some(c_star), c: Some(c), r_star: Some(sol.r_star) })
}

/// Shared test set for a seed.
pub fn test_set(model: &DemandModel, n: usize, seed: u64) -> Vec<DemandPoint> {
    let mut rng = stream(seed, TEST_STREAM);
    (0..n).map(|_| sample_demand(model, &mut rng)).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let rw = cfg.validate()?;
    let tests = test_set(&cfg.model, cfg.n_test, cfg.seed);
    if tests.is_empty() {
        return Err(HarnessError::Config("n_test must be positive".into()));
    }
    let trials: Result<Vec<TrialRecord>, HarnessError> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(cfg.seed, k as u64 + 1);
            let samples: Vec<Point> = (0..cfg.n_samples)
                .map(|_| {
                    let d = sample_demand(&cfg.model, &mut rng);
                    Point::new(d.x, d.y)
                })
                .collect();
            let policy = build_policy(cfg, &rw, &samples, k)?;
            let rep = evaluate(&policy.pl, &tests, cfg.order, &rw, &mut rng);
            Ok(TrialRecord {
                trial: k,
                c_star: policy.c_star,
                c: policy.c,
                r_star: policy.r_star,
                avg_cp: rep.avg_cp.expect("non-empty test set"),
                worst_cp: rep.worst_cp.expect("non-empty test set"),
            })
        })
        .collect();
    let trials = trials?;
    let mean_se = |f: &dyn Fn(&TrialRecord) -> f64| {
        let n = trials.len() as f64;
        let mean = trials.iter().map(f).sum::<f64>() / n;
        let var = if trials.len() > 1 {
            trials.iter().map(|t| (f(t) - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    };
    let (avg_cp, avg_cp_se) = mean_se(&|t| t.avg_cp);
    let (worst_cp, worst_cp_se) = mean_se(&|t| t.worst_cp);
    Ok(ExperimentReport { avg_cp, worst_cp, avg_cp_se, worst_cp_se, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rw() -> Rewards {
        Rewards::new(1.0 / 3.0, 1.0, 20.0).unwrap()
    }

    fn config(advice: AdviceKind) -> ExperimentConfig {
        ExperimentConfig {
            model: DemandModel::uniform_mixture(),
            rewards: RewardsConfig { m: 20.0, r_low: 1.0 / 3.0, r_high: 1.0 },
            advice,
            z: 0.9,
            n_samples: 10,
            trials: 8,
            c_factor: 0.9,
            n_test: 20,
            order: Order::Adversarial,
            seed: 7,
            segments: 64,
        }
    }

    #[test]
    fn uniform_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let d = sample_demand(&DemandModel::uniform_mixture(), &mut rng);
            assert!((0.0..=30.0).contains(&d.x) && (0.0..=30.0).contains(&d.y));
        }
        let pure = DemandModel { weight: 1.0, ..DemandModel::uniform_mixture() };
        for _ in 0..1000 {
            let d = sample_demand(&pure, &mut rng);
            assert!((10.0..=20.0).contains(&d.x) && (10.0..=20.0).contains(&d.y));
        }
    }

    #[test]
    fn normal_mixture_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += sample_demand(&DemandModel::normal_mixture(), &mut rng).x;
        }
        assert!((s / n as f64 - 15.0).abs() < 0.05);
    }

    #[test]
    fn discretized_draws_are_whole() {
        let m = DemandModel { discretize: true, ..DemandModel::uniform_mixture() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = sample_demand(&m, &mut rng);
            assert_eq!(d.x, d.x.floor());
        }
    }

    #[test]
    fn evaluate_bq_corner() {
        let pl = PlFunction::constant(8.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = evaluate(&pl, &[DemandPoint::new(20.0, 20.0)], Order::Adversarial, &rw(), &mut rng);
        assert!((rep.avg_cp.unwrap() - 0.6).abs() < 1e-12);
        assert!((rep.worst_cp.unwrap() - 0.6).abs() < 1e-12);
        let empty = evaluate(&pl, &[], Order::Adversarial, &rw(), &mut rng);
        assert_eq!(empty.avg_cp, None);
        assert!(empty.ratios.is_empty());
    }

    #[test]
    fn stochastic_not_below_adversarial() {
        let pl = PlFunction::constant(8.0, 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = [DemandPoint::new(20.0, 20.0), DemandPoint::new(14.5, 9.0), DemandPoint::new(5.0, 18.0)];
        let adv = evaluate(&pl, &pts, Order::Adversarial, &rw(), &mut rng);
        let sto = evaluate(&pl, &pts, Order::Stochastic { n_perms: 50 }, &rw(), &mut rng);
        for (a, s) in adv.ratios.iter().zip(&sto.ratios) {
            assert!(s >= &(a - 1e-9));
        }
    }

    #[test]
    fn deterministic_runs() {
        for kind in [AdviceKind::Box, AdviceKind::Point, AdviceKind::Bq, AdviceKind::FixedGrid] {
            let a = run_experiment(&config(kind)).unwrap();
            let b = run_experiment(&config(kind)).unwrap();
            assert_eq!(a, b);
            assert!(a.worst_cp <= a.avg_cp);
        }
    }

    #[test]
    fn ellipse_pipeline_runs() {
        let mut cfg = config(AdviceKind::Ellipse);
        cfg.model = DemandModel::normal_mixture();
        cfg.trials = 3;
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.trials.len(), 3);
        assert!(rep.trials.iter().all(|t| t.c_star.unwrap() >= 0.6 - 1e-9));
    }

    #[test]
    fn config_json_and_validation() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"model":{"kind":"uniform_mixture"},"rewards":{"m":20,"r_low":0.3333333333333333,"r_high":1},
                "advice":"bq","z":0.9,"n_samples":10,"trials":2,"c_factor":1.0,
                "order":{"type":"adversarial"},"seed":1}"#,
        )
        .unwrap();
        assert_eq!(cfg.n_test, 100);
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.z = 0.0;
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"model":{"kind":"uniform_mixture"}}"#).is_err());
    }
}
