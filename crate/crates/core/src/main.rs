use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cspath::dual::{self, DEFAULT_TOL};
use cspath::experiments::{self, ExperimentConfig};
use cspath::instance::{DistributionSpec, Instance, PathResult, StorageMode};
use cspath::pareto::{self, CspStatus, SolverOptions, DEFAULT_MAX_LABELS};
use cspath::theory::{self, Theorem2Variant};
use cspath::VERSION;

const EXIT_USAGE: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "cspath", version, about = "Budget-constrained shortest paths on random complete graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Solve the budget-constrained problem.
    Solve(SolveArgs),
    /// Maximize the Lagrangian dual, or evaluate psi at one multiplier.
    Dual(DualArgs),
    /// Print closed-form predictions.
    Theory(TheoryArgs),
    /// Run a configured Monte Carlo experiment.
    Experiment(ExperimentArgs),
    /// Shortest paths with xi^s edge lengths.
    Bh(BhArgs),
    /// Shortest paths with and without truncated heavy edges.
    Trunc(TruncArgs),
    /// Growth of the full Pareto frontier with n.
    Frontier(FrontierArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    ldist: DistributionSpec,
    #[arg(long, default_value = "uniform")]
    cdist: DistributionSpec,
    #[arg(long)]
    out: PathBuf,
    /// Store only the header; weights are regenerated from the seed.
    #[arg(long)]
    implicit: bool,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long, conflicts_with_all = ["n", "seed", "ldist", "cdist", "implicit"])]
    instance: Option<PathBuf>,
    #[arg(long, required_unless_present = "instance")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    ldist: DistributionSpec,
    #[arg(long, default_value = "uniform")]
    cdist: DistributionSpec,
    #[arg(long)]
    implicit: bool,
}

impl InstanceArgs {
    fn load(&self) -> Result<Instance, String> {
        let inst = match (&self.instance, self.n) {
            (Some(path), _) => Instance::read_instance(path).map_err(|e| format!("{}: {e}", path.display()))?,
            (None, Some(n)) => {
                let storage = if self.implicit {
                    StorageMode::Implicit
                } else {
                    StorageMode::Materialized
                };
                Instance::generate(n, self.seed, self.ldist, self.cdist, storage).map_err(|e| e.to_string())?
            }
            (None, None) => unreachable!("clap requires one source"),
        };
        Ok(inst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SolveMethod {
    Exact,
    Dual,
    Shrink,
    All,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    source: InstanceArgs,
    #[arg(long)]
    c0: f64,
    #[arg(long, value_enum, default_value_t = SolveMethod::Exact)]
    method: SolveMethod,
    #[arg(long)]
    json: bool,
    /// Recompute every reported path from the instance and fail on mismatch.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_LABELS)]
    max_labels: usize,
}

#[derive(Debug, Args)]
struct DualArgs {
    #[command(flatten)]
    source: InstanceArgs,
    #[arg(long, required_unless_present = "lambda")]
    c0: Option<f64>,
    /// Print psi at this multiplier only.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    c0: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Restrict to one exponent variant; both are printed by default.
    #[arg(long)]
    variant: Option<Theorem2Variant>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `workers` from the config file.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct BhArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct TruncArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to ln^2 n / n.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct FrontierArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    ngrid: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure with its exit code; the message goes to stderr.
struct Failure(u8, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn solver(msg: impl ToString) -> Failure {
    Failure(EXIT_SOLVER, msg.to_string())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn path_json(p: &PathResult) -> Value {
    json!({ "L": p.length, "cost": p.cost, "H": p.hops, "path": p.vertices })
}

fn path_text(p: &PathResult) -> String {
    let vs: Vec<String> = p.vertices.iter().map(usize::to_string).collect();
    format!("L={} cost={} H={} path={}", p.length, p.cost, p.hops, vs.join("-"))
}

fn instance_json(inst: &Instance) -> Value {
    json!({
        "n": inst.n(),
        "seed": inst.seed(),
        "ldist": inst.length_dist().to_string(),
        "cdist": inst.cost_dist().to_string(),
    })
}

fn verify_path(inst: &Instance, p: &PathResult, c0: Option<f64>, what: &str) -> Result<(), Failure> {
    p.verify(inst).map_err(|e| solver(format!("verification failed for {what}: {e}")))?;
    if let Some(c0) = c0 {
        if p.cost > c0 {
            return Err(solver(format!("verification failed for {what}: cost {} exceeds budget {c0}", p.cost)));
        }
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<u8, Failure> {
    let storage = if a.implicit {
        StorageMode::Implicit
    } else {
        StorageMode::Materialized
    };
    let inst = Instance::generate(a.n, a.seed, a.ldist, a.cdist, storage).map_err(|e| usage(e.to_string()))?;
    inst.write_instance(&a.out).map_err(solver)?;
    println!("{}", inst.header_line());
    Ok(0)
}

fn cmd_solve(a: &SolveArgs) -> Result<u8, Failure> {
    if !(a.c0 > 0.0) || a.c0.is_infinite() {
        return Err(usage(format!("--c0 must be positive and finite, got {}", a.c0)));
    }
    let inst = a.source.load().map_err(usage)?;
    let run = |m| a.method == m || a.method == SolveMethod::All;
    let mut out = serde_json::Map::new();
    out.insert("version".into(), json!(VERSION));
    out.insert("instance".into(), instance_json(&inst));
    out.insert("c0".into(), json!(a.c0));
    out.insert("method".into(), json!(format!("{:?}", a.method).to_lowercase()));
    let mut text = Vec::new();
    // Exit 3 only when no primal method found a path within budget.
    let mut any_primal = false;
    let mut any_feasible = false;

    if run(SolveMethod::Exact) {
        any_primal = true;
        let opts = SolverOptions { max_labels: a.max_labels };
        let frontier = pareto::target_frontier(&inst, opts).map_err(solver)?;
        let sol = pareto::select_within_budget(&frontier, a.c0);
        let stats = frontier.stats();
        let mut block = json!({
            "labels": stats.total_labels,
            "max_labels_per_node": stats.max_labels_per_node,
            "labels_at_target": stats.labels_at_target,
            "min_product": pareto::min_product_of(&frontier),
        });
        match &sol.status {
            CspStatus::Optimal(p) => {
                if a.verify {
                    verify_path(&inst, p, Some(a.c0), "exact")?;
                }
                any_feasible = true;
                block["status"] = json!("optimal");
                merge(&mut block, path_json(p));
                text.push(format!("exact status=optimal {}", path_text(p)));
            }
            CspStatus::Infeasible => {
                block["status"] = json!("infeasible");
                text.push("exact status=infeasible".into());
            }
        }
        out.insert("exact".into(), block);
    }
    if run(SolveMethod::Dual) {
        let d = dual::dual_maximize(&inst, a.c0, DEFAULT_TOL).map_err(solver)?;
        if a.verify {
            verify_path(&inst, &d.path, None, "dual")?;
        }
        let mut block = json!({
            "lambda_hat": d.lambda,
            "psi": d.psi_value,
            "dual_value": d.dual_value,
            "iterations": d.iterations,
        });
        merge(&mut block, path_json(&d.path));
        text.push(format!(
            "dual lambda_hat={} dual_value={} {}",
            d.lambda,
            d.dual_value,
            path_text(&d.path)
        ));
        out.insert("dual".into(), block);
    }
    if run(SolveMethod::Shrink) {
        any_primal = true;
        let s = dual::budget_shrink_solve(&inst, a.c0).map_err(solver)?;
        let mut block = json!({ "lambda": s.lambda, "delta": s.delta, "psi_calls": s.psi_calls });
        match s.path() {
            Some(p) => {
                if a.verify {
                    verify_path(&inst, p, Some(a.c0), "shrink")?;
                }
                any_feasible = true;
                block["status"] = json!("optimal");
                merge(&mut block, path_json(p));
                text.push(format!("shrink status=optimal {}", path_text(p)));
            }
            None => {
                block["status"] = json!("infeasible_heuristic");
                text.push("shrink status=infeasible_heuristic".into());
            }
        }
        out.insert("shrink".into(), block);
    }

    if a.json {
        print_json(&Value::Object(out));
    } else {
        for line in text {
            println!("{line}");
        }
    }
    if any_primal && !any_feasible {
        eprintln!("infeasible: no path within budget {}", a.c0);
        return Ok(EXIT_INFEASIBLE);
    }
    Ok(0)
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn cmd_dual(a: &DualArgs) -> Result<u8, Failure> {
    let inst = a.source.load().map_err(usage)?;
    if let Some(lambda) = a.lambda {
        let (value, path) = dual::psi(&inst, lambda).map_err(|e| match e {
            dual::DualError::InvalidLambda(_) => usage(e.to_string()),
            _ => solver(e),
        })?;
        println!("psi={value} lambda={lambda} {}", path_text(&path));
        return Ok(0);
    }
    let c0 = a.c0.expect("clap requires --c0 without --lambda");
    let d = dual::dual_maximize(&inst, c0, a.tol).map_err(|e| match e {
        dual::DualError::InvalidBudget(_) => usage(e.to_string()),
        _ => solver(e),
    })?;
    println!(
        "lambda_hat={} psi={} dual_value={} iterations={} {}",
        d.lambda,
        d.psi_value,
        d.dual_value,
        d.iterations,
        path_text(&d.path)
    );
    Ok(0)
}

fn cmd_theory(a: &TheoryArgs) -> Result<u8, Failure> {
    if a.n < 2 || !(a.c0 > 0.0) || !(a.gamma > 0.0 && a.gamma <= 1.0) {
        return Err(usage("need n >= 2, c0 > 0 and 0 < gamma <= 1"));
    }
    let variants: Vec<Theorem2Variant> = match a.variant {
        Some(v) => vec![v],
        None if a.gamma == 1.0 => vec![Theorem2Variant::Gamma2],
        None => Theorem2Variant::ALL.to_vec(),
    };
    let preds: Vec<_> = variants.iter().map(|&v| theory::predict(a.n, a.c0, a.gamma, v)).collect();
    if a.json {
        print_json(&json!({ "version": VERSION, "predictions": preds }));
        return Ok(0);
    }
    for p in &preds {
        let tag = if preds.len() > 1 { format!("[{}] ", p.variant.name()) } else { String::new() };
        println!(
            "{tag}L_pred={} H_pred={} lambda_star={} window=({},{})",
            p.l_pred, p.h_pred, p.lambda_star, p.c0_lo, p.c0_hi
        );
    }
    Ok(0)
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<u8, Failure> {
    let mut cfg = ExperimentConfig::from_file(&a.config).map_err(|e| usage(format!("{}: {e}", a.config.display())))?;
    if let Some(out) = &a.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    eprint!("{}", cfg.to_text());
    let out = experiments::run_experiment(&cfg).map_err(solver)?;
    println!("{}", out.trials_path.display());
    println!("{}", out.report_path.display());
    Ok(0)
}

fn cmd_bh(a: &BhArgs) -> Result<u8, Failure> {
    let report = experiments::simulate_bh_with(a.n, a.s, a.trials, a.seed, a.workers).map_err(|e| match e {
        experiments::ExperimentError::Invalid(_) => usage(e.to_string()),
        _ => solver(e),
    })?;
    print_json(&json!({ "version": VERSION, "bh": report }));
    Ok(0)
}

fn cmd_trunc(a: &TruncArgs) -> Result<u8, Failure> {
    let result = match a.threshold {
        Some(t) => experiments::truncation_experiment_with_threshold(a.n, a.trials, a.seed, t),
        None => experiments::truncation_experiment(a.n, a.trials, a.seed),
    };
    let report = result.map_err(|e| match e {
        experiments::ExperimentError::Invalid(_) | experiments::ExperimentError::Instance(_) => usage(e.to_string()),
        _ => solver(e),
    })?;
    print_json(&json!({ "version": VERSION, "truncation": report }));
    Ok(0)
}

fn cmd_frontier(a: &FrontierArgs) -> Result<u8, Failure> {
    let report = experiments::frontier_growth_experiment(&a.ngrid, a.trials, a.seed).map_err(|e| match e {
        experiments::ExperimentError::Invalid(_) => usage(e.to_string()),
        _ => solver(e),
    })?;
    print_json(&json!({ "version": VERSION, "frontier": report }));
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    eprintln!("cspath {VERSION} {:?}", cli.command);
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Dual(a) => cmd_dual(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Bh(a) => cmd_bh(a),
        Command::Trunc(a) => cmd_trunc(a),
        Command::Frontier(a) => cmd_frontier(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
