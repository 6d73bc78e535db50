mod plfile;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pareto_pl::consistency::{cstar_bisection, cstar_enumeration, CStarResult, ConsistencyError};
use pareto_pl::engine::validate_pl;
use pareto_pl::harness::{run_experiment, ExperimentConfig, TrialRecord};
use pareto_pl::pareto::{solve_pareto, tradeoff_curve};
use pareto_pl::region::RegionSpec;
use pareto_pl::{MlRegion, Rewards};
use serde::Serialize;

use plfile::PlFile;

#[derive(Parser)]
#[command(name = "pareto-pl", version, about = "Protection levels that trade advice trust for worst-case guarantees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Largest consistent ratio a region admits.
    Cstar {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, value_enum, default_value_t = MethodArg::Enum)]
        method: MethodArg,
        /// Bisection tolerance.
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Pareto-optimal protection level for one consistency target.
    Pareto {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: Output,
    },
    /// Best robust ratio across a grid of consistency targets.
    Curve {
        #[command(flatten)]
        problem: Problem,
        /// Comma-separated targets.
        #[arg(long, value_delimiter = ',', conflicts_with = "steps")]
        grid: Vec<f64>,
        /// Evenly spaced targets on [0, C*].
        #[arg(long, default_value_t = 11)]
        steps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run a sampling experiment from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Writes `<out>.csv` (one row per trial) and `<out>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a protection-level file; exits 4 when it is not valid.
    Validate {
        pl: PathBuf,
    },
}

#[derive(Args)]
struct Problem {
    /// Region JSON file.
    #[arg(long)]
    region: PathBuf,
    /// Capacity.
    #[arg(long, default_value_t = 20.0)]
    m: f64,
    #[arg(long = "rl", default_value_t = 1.0 / 3.0)]
    r_low: f64,
    #[arg(long = "rh", default_value_t = 1.0)]
    r_high: f64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// Consistency target C.
    #[arg(long)]
    consistency: Option<f64>,
    /// Target as a fraction of C*.
    #[arg(long)]
    factor: Option<f64>,
}

#[derive(Args)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Bisect,
    Enum,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Input(String),
    Infeasible(String),
    InvalidPl(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::InvalidPl(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(s) | Failure::Infeasible(s) | Failure::InvalidPl(s) => s,
        }
    }
}

impl From<ConsistencyError> for Failure {
    fn from(e: ConsistencyError) -> Self {
        match e {
            ConsistencyError::InfeasibleTarget { .. } => Failure::Infeasible(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Res<T> = Result<T, Failure>;

fn input<E: std::fmt::Display>(ctx: &str) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{ctx}: {e}"))
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(input(&path.display().to_string()))
}

impl Problem {
    fn load(&self) -> Res<(MlRegion, Rewards)> {
        let rw = Rewards::new(self.r_low, self.r_high, self.m).map_err(input("rewards"))?;
        let name = self.region.display().to_string();
        let spec: RegionSpec = serde_json::from_str(&read(&self.region)?).map_err(input(&name))?;
        let region = spec.build().map_err(input(&name))?;
        Ok((region, rw))
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Res<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(input(&p.display().to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Res<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(input("json"))
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(input("csv"))?;
    }
    let bytes = w.into_inner().map_err(input("csv"))?;
    String::from_utf8(bytes).map_err(input("csv"))
}

fn check_epsilon(eps: f64) -> Res<()> {
    if eps > 0.0 && eps <= 0.5 {
        Ok(())
    } else {
        Err(Failure::Input(format!("epsilon {eps} is outside (0, 0.5]")))
    }
}

fn check_unit(name: &str, v: f64) -> Res<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Failure::Input(format!("{name} {v} is outside [0, 1]")))
    }
}

#[derive(Serialize)]
struct CStarRow {
    c_star: f64,
    method: &'static str,
    witness_x: Option<f64>,
    iterations: usize,
}

fn cmd_cstar(problem: &Problem, method: MethodArg, epsilon: f64, output: &Output) -> Res<()> {
    check_epsilon(epsilon)?;
    let (region, rw) = problem.load()?;
    let res: CStarResult = match method {
        MethodArg::Bisect => cstar_bisection(&region, &rw, epsilon)?,
        MethodArg::Enum => cstar_enumeration(&region, &rw)?,
    };
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => json(&res)?,
        Format::Csv => csv_rows(&[CStarRow {
            c_star: res.c_star,
            method: match method {
                MethodArg::Bisect => "bisection",
                MethodArg::Enum => "enumeration",
            },
            witness_x: res.witness_x,
            iterations: res.iterations,
        }])?,
    };
    emit(&output.out, &text)
}

fn resolve_target(region: &MlRegion, rw: &Rewards, target: &Target) -> Res<f64> {
    match (target.consistency, target.factor) {
        (Some(c), _) => check_unit("consistency", c).map(|_| c),
        (None, Some(f)) => {
            check_unit("factor", f)?;
            Ok(f * cstar_enumeration(region, rw)?.c_star)
        }
        (None, None) => Err(Failure::Input("give --consistency or --factor".into())),
    }
}

fn cmd_pareto(problem: &Problem, target: &Target, output: &Output) -> Res<()> {
    let (region, rw) = problem.load()?;
    let c = resolve_target(&region, &rw, target)?;
    let sol = solve_pareto(&region, &rw, c)?;
    let file = PlFile {
        m: rw.m(),
        r_low: rw.r_low(),
        r_high: rw.r_high(),
        flat_from: Some(rw.m().max(region.x_hi())),
        meta: [("c", c), ("r_star", sol.r_star), ("r_right", sol.r_right), ("r_left", sol.r_left)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        breakpoints: sol.p_star.breakpoints().to_vec(),
    };
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => file.to_csv().map_err(Failure::Input)?,
        Format::Json => json(&file)?,
    };
    emit(&output.out, &text)
}

#[derive(Serialize)]
struct CurveRow {
    c: f64,
    r_star: Option<f64>,
    feasible: bool,
}

fn cmd_curve(problem: &Problem, grid: &[f64], steps: usize, output: &Output) -> Res<()> {
    let (region, rw) = problem.load()?;
    let grid: Vec<f64> = if grid.is_empty() {
        if steps == 0 {
            return Err(Failure::Input("steps must be positive".into()));
        }
        let cs = cstar_enumeration(&region, &rw)?.c_star;
        let last = (steps - 1).max(1) as f64;
        (0..steps).map(|i| cs * i as f64 / last).collect()
    } else {
        for &c in grid {
            check_unit("grid value", c)?;
        }
        grid.to_vec()
    };
    let rows: Vec<CurveRow> = tradeoff_curve(&region, &rw, &grid)
        .into_iter()
        .map(|p| CurveRow { c: p.c, r_star: p.r_star, feasible: p.r_star.is_some() })
        .collect();
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_rows(&rows)?,
        Format::Json => json(&rows)?,
    };
    emit(&output.out, &text)
}

#[derive(Serialize)]
struct Summary<'a> {
    avg_cp: f64,
    worst_cp: f64,
    avg_cp_se: f64,
    worst_cp_se: f64,
    trials: usize,
    config: &'a ExperimentConfig,
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Option<PathBuf>) -> Res<()> {
    let name = config.display().to_string();
    let mut cfg: ExperimentConfig = serde_json::from_str(&read(config)?).map_err(input(&name))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = run_experiment(&cfg).map_err(|e| match e {
        pareto_pl::harness::HarnessError::Solve {
            source: ConsistencyError::InfeasibleTarget { .. },
            ..
        } => Failure::Infeasible(e.to_string()),
        other => Failure::Input(other.to_string()),
    })?;
    let summary = Summary {
        avg_cp: report.avg_cp,
        worst_cp: report.worst_cp,
        avg_cp_se: report.avg_cp_se,
        worst_cp_se: report.worst_cp_se,
        trials: report.trials.len(),
        config: &cfg,
    };
    let text = json(&summary)?;
    match out {
        None => emit(&None, &text),
        Some(prefix) => {
            let rows: &[TrialRecord] = &report.trials;
            emit(&Some(prefix.with_extension("csv")), &csv_rows(rows)?)?;
            emit(&Some(prefix.with_extension("json")), &text)
        }
    }
}

fn cmd_validate(path: &Path) -> Res<()> {
    let file = PlFile::parse(&read(path)?).map_err(input(&path.display().to_string()))?;
    let pl = file.function().map_err(|e| Failure::InvalidPl(format!("{}: {e}", path.display())))?;
    let violations = validate_pl(&pl, file.m, file.flat_from);
    if violations.is_empty() {
        println!("ok: {} breakpoints", pl.breakpoints().len());
        return Ok(());
    }
    let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(Failure::InvalidPl(lines.join("\n")))
}

fn init_threads() -> Res<()> {
    let Ok(v) = std::env::var("PARETO_PL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("PARETO_PL_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(input("thread pool"))
}

fn run(cli: Cli) -> Res<()> {
    init_threads()?;
    match &cli.command {
        Command::Cstar { problem, method, epsilon, output } => cmd_cstar(problem, *method, *epsilon, output),
        Command::Pareto { problem, target, output } => cmd_pareto(problem, target, output),
        Command::Curve { problem, grid, steps, output } => cmd_curve(problem, grid, *steps, output),
        Command::Simulate { config, seed, out } => cmd_simulate(config, *seed, out),
        Command::Validate { pl } => cmd_validate(pl),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
