//! Seeded Monte Carlo experiments.
//!
//! A trial is keyed by `(n, trial_index)` and owns its instance, generated
//! from [`derive_seed`]. Trials run in parallel; records are sorted by
//! `(n, trial, method)` before anything is written or aggregated, so output
//! never depends on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dual::{self, DualError};
use crate::instance::{fmt_decimal, parse_decimal, DistributionSpec, Instance, InstanceError, StorageMode};
use crate::pareto::{self, CspStatus, ParetoError, SolverOptions};
use crate::rng::{mix64, GOLDEN_GAMMA};
use crate::theory::{self, Theorem2Variant};

pub const CSV_HEADER: &str = "n,c0,gamma,trial,seed,method,status,L,cost,H,runtime_ms,labels,lambda_hat,dual_value,min_product";
pub const TRIALS_FILE: &str = "trials.csv";
pub const REPORT_FILE: &str = "report.json";
/// A run fails when more than this fraction of trial records errored.
pub const MAX_ERROR_FRACTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{errored} of {total} trial records errored (limit {:.0}%)", MAX_ERROR_FRACTION * 100.0)]
    TooManyErrors { errored: usize, total: usize },
    #[error("trial csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    CsvIo(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Seed of trial `trial` at size `n`:
/// `mix64(mix64(master ^ mix64(n + GOLDEN_GAMMA)) ^ (trial + 1) * GOLDEN_GAMMA)`.
pub fn derive_seed(master_seed: u64, n: usize, trial: usize) -> u64 {
    let per_n = mix64(master_seed ^ mix64((n as u64).wrapping_add(GOLDEN_GAMMA)));
    mix64(per_n ^ (trial as u64).wrapping_add(1).wrapping_mul(GOLDEN_GAMMA))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum C0Rule {
    Absolute(f64),
    /// `lo + f (hi - lo)` inside the budget window for `n`, whatever the
    /// weight exponent.
    WindowFraction(f64),
}

impl C0Rule {
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            Self::Absolute(c0) => c0,
            Self::WindowFraction(f) => {
                let (lo, hi) = theory::c0_window(n as u64);
                lo + f * (hi - lo)
            }
        }
    }
}

impl fmt::Display for C0Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Absolute(v) => write!(f, "absolute:{v}"),
            Self::WindowFraction(v) => write!(f, "window:{v}"),
        }
    }
}

impl FromStr for C0Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, value) = s.split_once(':').ok_or_else(|| format!("expected window:<f> or absolute:<c0>, got {s:?}"))?;
        let v: f64 = value.parse().map_err(|_| format!("bad number {value:?}"))?;
        match kind {
            "window" if (0.0..=1.0).contains(&v) => Ok(Self::WindowFraction(v)),
            "window" => Err(format!("window fraction must lie in [0, 1], got {v}")),
            "absolute" if v > 0.0 => Ok(Self::Absolute(v)),
            "absolute" => Err(format!("absolute budget must be positive, got {v}")),
            _ => Err(format!("unknown c0 rule {kind:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Exact,
    Dual,
    Shrink,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Dual => "dual",
            Self::Shrink => "shrink",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "dual" => Ok(Self::Dual),
            "shrink" => Ok(Self::Shrink),
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub n_grid: Vec<usize>,
    pub c0_rule: C0Rule,
    pub gamma: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub exact_n_cap: usize,
    /// Label cap handed to the exact solver.
    pub max_labels: usize,
    /// Instances above this size are generated implicitly.
    pub materialize_n_cap: usize,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            n_grid: Vec::new(),
            c0_rule: C0Rule::WindowFraction(0.5),
            gamma: 1.0,
            trials: 1,
            master_seed: 0,
            methods: vec![Method::Exact, Method::Dual, Method::Shrink],
            exact_n_cap: 2000,
            max_labels: pareto::DEFAULT_MAX_LABELS,
            materialize_n_cap: 4096,
            workers: std::thread::available_parallelism().map_or(1, |p| p.get()),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parse the flat `key=value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| ExperimentError::Config { line: line_no, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(v: &str) -> Result<T, String> {
                v.parse::<T>().map_err(|_| format!("bad value {v:?}"))
            }
            let list = |v: &str| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect::<Vec<_>>();
            match key {
                "name" => cfg.name = value.to_string(),
                "n_grid" => {
                    cfg.n_grid = list(value)
                        .iter()
                        .map(|s| num::<usize>(s))
                        .collect::<Result<_, _>>()
                        .map_err(err)?
                }
                "c0_rule" => cfg.c0_rule = value.parse().map_err(err)?,
                "gamma" => cfg.gamma = num(value).map_err(err)?,
                "trials" => cfg.trials = num(value).map_err(err)?,
                "master_seed" => cfg.master_seed = num(value).map_err(err)?,
                "methods" => {
                    cfg.methods = list(value)
                        .iter()
                        .map(|s| s.parse::<Method>())
                        .collect::<Result<_, _>>()
                        .map_err(err)?
                }
                "exact_n_cap" => cfg.exact_n_cap = num(value).map_err(err)?,
                "max_labels" => cfg.max_labels = num(value).map_err(err)?,
                "materialize_n_cap" => cfg.materialize_n_cap = num(value).map_err(err)?,
                "workers" => cfg.workers = num(value).map_err(err)?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        cfg.methods.sort();
        cfg.methods.dedup();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Invalid(m.to_string()));
        if self.n_grid.is_empty() {
            return bad("n_grid must not be empty");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be strictly ascending");
        }
        if self.n_grid[0] < 3 {
            return bad("every n must be at least 3");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        Ok(())
    }

    /// Fully resolved configuration in the same `key=value` format.
    pub fn to_text(&self) -> String {
        format!(
            "name={}\nn_grid={}\nc0_rule={}\ngamma={}\ntrials={}\nmaster_seed={}\nmethods={}\nexact_n_cap={}\nmax_labels={}\nmaterialize_n_cap={}\nworkers={}\noutput_dir={}\n",
            self.name,
            join(&self.n_grid),
            self.c0_rule,
            self.gamma,
            self.trials,
            self.master_seed,
            join(&self.methods),
            self.exact_n_cap,
            self.max_labels,
            self.materialize_n_cap,
            self.workers,
            self.output_dir.display()
        )
    }

    pub fn distribution(&self) -> DistributionSpec {
        if self.gamma == 1.0 {
            DistributionSpec::Uniform
        } else {
            DistributionSpec::UniformPower(self.gamma)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrialStatus {
    Optimal,
    Infeasible,
    /// The budget-shrink heuristic found nothing within budget.
    InfeasibleHeuristic,
    /// A dual run, which yields a bound rather than a primal answer.
    Ok,
    Error,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::InfeasibleHeuristic => "infeasible_heuristic",
            Self::Ok => "ok",
            Self::Error => "error",
        }
    }
}

impl FromStr for TrialStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "optimal" => Self::Optimal,
            "infeasible" => Self::Infeasible,
            "infeasible_heuristic" => Self::InfeasibleHeuristic,
            "ok" => Self::Ok,
            "error" => Self::Error,
            _ => return Err(format!("unknown status {s:?}")),
        })
    }
}

/// One method run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub c0: f64,
    pub gamma: f64,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub status: TrialStatus,
    pub length: Option<f64>,
    pub cost: Option<f64>,
    pub hops: Option<usize>,
    pub runtime_ms: f64,
    pub labels: Option<usize>,
    pub lambda_hat: Option<f64>,
    pub dual_value: Option<f64>,
    pub min_product: Option<f64>,
}

impl TrialRecord {
    fn blank(n: usize, c0: f64, gamma: f64, trial: usize, seed: u64, method: Method) -> Self {
        Self {
            n,
            c0,
            gamma,
            trial,
            seed,
            method,
            status: TrialStatus::Error,
            length: None,
            cost: None,
            hops: None,
            runtime_ms: 0.0,
            labels: None,
            lambda_hat: None,
            dual_value: None,
            min_product: None,
        }
    }

    fn sort_key(&self) -> (usize, usize, Method) {
        (self.n, self.trial, self.method)
    }

    pub fn csv_fields(&self) -> [String; 15] {
        let opt = |x: Option<f64>| x.map(fmt_decimal).unwrap_or_default();
        let opt_u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.n.to_string(),
            fmt_decimal(self.c0),
            fmt_decimal(self.gamma),
            self.trial.to_string(),
            self.seed.to_string(),
            self.method.name().to_string(),
            self.status.name().to_string(),
            opt(self.length),
            opt(self.cost),
            opt_u(self.hops),
            fmt_decimal(self.runtime_ms),
            opt_u(self.labels),
            opt(self.lambda_hat),
            opt(self.dual_value),
            opt(self.min_product),
        ]
    }

    fn from_csv_fields(fields: &csv::StringRecord, line: usize) -> Result<Self, ExperimentError> {
        let err = |msg: String| ExperimentError::Csv { line, msg };
        if fields.len() != 15 {
            return Err(err(format!("expected 15 fields, got {}", fields.len())));
        }
        let f = |i: usize| fields.get(i).unwrap_or("");
        let float = |i: usize| parse_decimal(f(i)).ok_or_else(|| err(format!("bad number {:?}", f(i))));
        let opt_float = |i: usize| if f(i).is_empty() { Ok(None) } else { float(i).map(Some) };
        let int = |i: usize| f(i).parse::<u64>().map_err(|_| err(format!("bad integer {:?}", f(i))));
        let opt_int = |i: usize| if f(i).is_empty() { Ok(None) } else { int(i).map(|v| Some(v as usize)) };
        Ok(Self {
            n: int(0)? as usize,
            c0: float(1)?,
            gamma: float(2)?,
            trial: int(3)? as usize,
            seed: int(4)?,
            method: f(5).parse().map_err(err)?,
            status: f(6).parse().map_err(err)?,
            length: opt_float(7)?,
            cost: opt_float(8)?,
            hops: opt_int(9)?,
            runtime_ms: float(10)?,
            labels: opt_int(11)?,
            lambda_hat: opt_float(12)?,
            dual_value: opt_float(13)?,
            min_product: opt_float(14)?,
        })
    }
}

pub fn write_trials_csv(records: &[TrialRecord], out: impl Write) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_csv(input: impl std::io::Read) -> Result<Vec<TrialRecord>, ExperimentError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(ExperimentError::Csv {
            line: 1,
            msg: format!("unexpected header {header:?}"),
        });
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| TrialRecord::from_csv_fields(&rec?, i + 2))
        .collect()
}

/// Run every configured method on one trial instance.
pub fn run_trial(config: &ExperimentConfig, n: usize, trial: usize) -> Vec<TrialRecord> {
    let seed = derive_seed(config.master_seed, n, trial);
    let gamma = config.gamma;
    let c0 = config.c0_rule.resolve(n);
    let dist = config.distribution();
    let storage = if n <= config.materialize_n_cap {
        StorageMode::Materialized
    } else {
        StorageMode::Implicit
    };
    let blank = |m| TrialRecord::blank(n, c0, gamma, trial, seed, m);

    let instance = match Instance::generate_with_cap(n, seed, dist, dist, storage, usize::MAX) {
        Ok(inst) => inst,
        Err(e) => {
            log::error!("n={n} trial={trial}: {e}");
            return config.methods.iter().map(|&m| blank(m)).collect();
        }
    };

    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        if method == Method::Exact && n > config.exact_n_cap {
            continue;
        }
        let mut rec = blank(method);
        let started = Instant::now();
        match method {
            Method::Exact => match pareto::target_frontier(&instance, SolverOptions { max_labels: config.max_labels }) {
                Ok(frontier) => {
                    let sol = pareto::select_within_budget(&frontier, c0);
                    rec.labels = Some(frontier.stats().total_labels);
                    rec.min_product = Some(pareto::min_product_of(&frontier));
                    match sol.status {
                        CspStatus::Optimal(p) => {
                            rec.status = TrialStatus::Optimal;
                            rec.length = Some(p.length);
                            rec.cost = Some(p.cost);
                            rec.hops = Some(p.hops);
                        }
                        CspStatus::Infeasible => rec.status = TrialStatus::Infeasible,
                    }
                }
                Err(e) => log::error!("n={n} trial={trial} exact: {e}"),
            },
            Method::Dual => match dual::dual_maximize(&instance, c0, dual::DEFAULT_TOL) {
                Ok(d) => {
                    rec.status = TrialStatus::Ok;
                    rec.length = Some(d.path.length);
                    rec.cost = Some(d.path.cost);
                    rec.hops = Some(d.path.hops);
                    rec.lambda_hat = Some(d.lambda);
                    rec.dual_value = Some(d.dual_value);
                }
                Err(e) => log::error!("n={n} trial={trial} dual: {e}"),
            },
            Method::Shrink => match dual::budget_shrink_solve(&instance, c0) {
                Ok(s) => {
                    rec.lambda_hat = Some(s.lambda);
                    match s.path() {
                        Some(p) => {
                            rec.status = TrialStatus::Optimal;
                            rec.length = Some(p.length);
                            rec.cost = Some(p.cost);
                            rec.hops = Some(p.hops);
                        }
                        None => rec.status = TrialStatus::InfeasibleHeuristic,
                    }
                }
                Err(e) => log::error!("n={n} trial={trial} shrink: {e}"),
            },
        }
        rec.runtime_ms = started.elapsed().as_secs_f64() * 1e3;
        out.push(rec);
    }
    out
}

fn run_jobs<T: Send>(workers: usize, jobs: Vec<(usize, usize)>, f: impl Fn(usize, usize) -> T + Sync + Send) -> Result<Vec<T>, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    Ok(pool.install(|| jobs.into_par_iter().map(|(n, t)| f(n, t)).collect()))
}

/// All trial records for `config`, sorted by `(n, trial, method)`.
pub fn run_records(config: &ExperimentConfig) -> Result<Vec<TrialRecord>, ExperimentError> {
    config.validate()?;
    for &n in &config.n_grid {
        if config.methods.contains(&Method::Exact) && n > config.exact_n_cap {
            log::info!("n={n} exceeds exact_n_cap={}; exact method skipped", config.exact_n_cap);
        }
    }
    let jobs: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let mut records: Vec<TrialRecord> = run_jobs(config.workers, jobs, |n, t| run_trial(config, n, t))?
        .into_iter()
        .flatten()
        .collect();
    records.sort_by_key(TrialRecord::sort_key);
    Ok(records)
}

/// Order statistics of one quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q25: f64,
    pub q75: f64,
    pub q90: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    Summary::of(values.to_vec()).map(|s| s.median)
}

impl Summary {
    pub fn of(mut values: Vec<f64>) -> Option<Self> {
        values.retain(|x| x.is_finite());
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&values, p);
        Some(Self {
            count: values.len(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: q(0.5),
            q10: q(0.1),
            q25: q(0.25),
            q75: q(0.75),
            q90: q(0.9),
            min: values[0],
            max: values[values.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub n: usize,
    pub c0: f64,
    pub gamma: f64,
    pub method: Method,
    pub trials: usize,
    pub errors: usize,
    pub infeasible: usize,
    pub length: Option<Summary>,
    pub hops: Option<Summary>,
    /// `L` over the asymptotic prediction, one entry per exponent variant.
    pub length_ratio: BTreeMap<String, Summary>,
    /// `H / (gamma ln n / 2)`.
    pub hop_ratio: Option<Summary>,
    /// `(L_exact - dual_value) / L_exact`, dual rows with a matching exact trial.
    pub duality_gap: Option<Summary>,
    pub lambda_hat: Option<Summary>,
    pub dual_value: Option<Summary>,
    /// `min_product` over `ln^2 n / (4 n)`.
    pub min_product_ratio: Option<Summary>,
    pub labels: Option<Summary>,
}

/// Keyed by `n=<n>/c0=<c0>/method=<m>`.
pub type AggregateReport = BTreeMap<String, AggregateStats>;

pub fn report_key(n: usize, c0: f64, method: Method) -> String {
    format!("n={n}/c0={c0}/method={method}")
}

/// `ln^2 n / (4 n)`, the uniform-weight lower bound on `min w(P) c(P)`.
pub fn min_product_scale(n: usize) -> f64 {
    let l = (n as f64).ln();
    l * l / (4.0 * n as f64)
}

pub fn aggregate(records: &[TrialRecord]) -> AggregateReport {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sort_key());

    let exact_len: BTreeMap<(usize, usize), f64> = sorted
        .iter()
        .filter(|r| r.method == Method::Exact && r.status == TrialStatus::Optimal)
        .filter_map(|r| r.length.map(|l| ((r.n, r.trial), l)))
        .collect();

    let mut groups: BTreeMap<(usize, Method), Vec<&TrialRecord>> = BTreeMap::new();
    for r in &sorted {
        groups.entry((r.n, r.method)).or_default().push(r);
    }

    let mut report = AggregateReport::new();
    for ((n, method), rows) in groups {
        let c0 = rows[0].c0;
        let gamma = rows[0].gamma;
        let collect = |f: &dyn Fn(&TrialRecord) -> Option<f64>| Summary::of(rows.iter().filter_map(|r| f(r)).collect());
        let solved = |r: &TrialRecord| r.status == TrialStatus::Optimal || r.status == TrialStatus::Ok;

        let mut length_ratio = BTreeMap::new();
        for variant in Theorem2Variant::ALL {
            let pred = theory::theorem2_ln(n as u64, c0, gamma, variant);
            if let Some(s) = collect(&|r| r.length.filter(|_| solved(r)).map(|l| l / pred)) {
                length_ratio.insert(variant.name().to_string(), s);
            }
        }
        let h_pred = theory::theorem2_hn(n as u64, gamma);
        let mp_scale = min_product_scale(n);

        let stats = AggregateStats {
            n,
            c0,
            gamma,
            method,
            trials: rows.len(),
            errors: rows.iter().filter(|r| r.status == TrialStatus::Error).count(),
            infeasible: rows
                .iter()
                .filter(|r| matches!(r.status, TrialStatus::Infeasible | TrialStatus::InfeasibleHeuristic))
                .count(),
            length: collect(&|r| r.length.filter(|_| solved(r))),
            hops: collect(&|r| r.hops.filter(|_| solved(r)).map(|h| h as f64)),
            length_ratio,
            hop_ratio: collect(&|r| r.hops.filter(|_| solved(r)).map(|h| h as f64 / h_pred)),
            duality_gap: collect(&|r| {
                let exact = *exact_len.get(&(r.n, r.trial))?;
                r.dual_value.map(|d| (exact - d) / exact)
            }),
            lambda_hat: collect(&|r| r.lambda_hat),
            dual_value: collect(&|r| r.dual_value),
            min_product_ratio: collect(&|r| r.min_product.map(|m| m / mp_scale)),
            labels: collect(&|r| r.labels.map(|l| l as f64)),
        };
        report.insert(report_key(n, c0, method), stats);
    }
    report
}

pub fn report_json(report: &AggregateReport) -> Result<String, ExperimentError> {
    Ok(serde_json::to_string_pretty(report)?)
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub report: AggregateReport,
    pub trials_path: PathBuf,
    pub report_path: PathBuf,
}

/// Run, persist `trials.csv` and `report.json` under `config.output_dir`,
/// and fail if too many trials errored.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let records = run_records(config)?;
    let report = aggregate(&records);
    fs::create_dir_all(&config.output_dir)?;
    let trials_path = config.output_dir.join(TRIALS_FILE);
    let report_path = config.output_dir.join(REPORT_FILE);
    write_trials_csv(&records, std::io::BufWriter::new(fs::File::create(&trials_path)?))?;
    fs::write(&report_path, report_json(&report)?)?;

    let errored = records.iter().filter(|r| r.status == TrialStatus::Error).count();
    if errored as f64 > MAX_ERROR_FRACTION * records.len() as f64 {
        return Err(ExperimentError::TooManyErrors {
            errored,
            total: records.len(),
        });
    }
    Ok(ExperimentOutput {
        records,
        report,
        trials_path,
        report_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhTrial {
    pub trial: usize,
    pub seed: u64,
    pub length: f64,
    pub hops: usize,
    /// `n^s L - ln n / Gamma(1 + 1/s)^s`.
    pub centered: f64,
    /// `n^s L / (ln n / Gamma(1 + 1/s)^s)`.
    pub length_ratio: f64,
    /// `H / (s ln n)`.
    pub hop_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhReport {
    pub n: usize,
    pub s: f64,
    pub trials: Vec<BhTrial>,
    pub median_length_ratio: f64,
    pub median_hop_ratio: f64,
    pub median_centered: f64,
}

/// Shortest paths on `K_n` with `xi^s` edge lengths, `xi ~ Exp(1)`.
pub fn simulate_bh(n: usize, s: f64, trials: usize, master_seed: u64) -> Result<BhReport, ExperimentError> {
    simulate_bh_with(n, s, trials, master_seed, 1)
}

pub fn simulate_bh_with(n: usize, s: f64, trials: usize, master_seed: u64, workers: usize) -> Result<BhReport, ExperimentError> {
    if !(s > 0.0 && s < 1.0) || trials == 0 || n < 3 {
        return Err(ExperimentError::Invalid(format!("need 0 < s < 1, trials >= 1, n >= 3 (got s={s}, trials={trials}, n={n})")));
    }
    let ln_n = (n as f64).ln();
    let center = ln_n * theory::bh_constant(s);
    let scale = (n as f64).powf(s);
    let jobs = (0..trials).map(|t| (n, t)).collect();
    let rows = run_jobs(workers, jobs, |n, t| -> Result<BhTrial, ExperimentError> {
        let seed = derive_seed(master_seed, n, t);
        let inst = Instance::generate(n, seed, DistributionSpec::ExpPower(s), DistributionSpec::Uniform, StorageMode::Implicit)?;
        let (_, path) = dual::psi(&inst, 0.0)?;
        Ok(BhTrial {
            trial: t,
            seed,
            length: path.length,
            hops: path.hops,
            centered: scale * path.length - center,
            length_ratio: scale * path.length / center,
            hop_ratio: path.hops as f64 / (s * ln_n),
        })
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let med = |f: fn(&BhTrial) -> f64| median(&rows.iter().map(f).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    Ok(BhReport {
        n,
        s,
        median_length_ratio: med(|r| r.length_ratio),
        median_hop_ratio: med(|r| r.hop_ratio),
        median_centered: med(|r| r.centered),
        trials: rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub n: usize,
    pub threshold: f64,
    pub trials: usize,
    pub equal: usize,
    pub fraction: f64,
}

/// Compare `xi^(1/2)` shortest paths with and without edges whose `xi`
/// exceeds `ln^2 n / n`.
pub fn truncation_experiment(n: usize, trials: usize, master_seed: u64) -> Result<TruncationReport, ExperimentError> {
    let ln_n = (n as f64).ln();
    truncation_experiment_with_threshold(n, trials, master_seed, ln_n * ln_n / n as f64)
}

pub fn truncation_experiment_with_threshold(
    n: usize,
    trials: usize,
    master_seed: u64,
    threshold: f64,
) -> Result<TruncationReport, ExperimentError> {
    if trials == 0 || n < 2 {
        return Err(ExperimentError::Invalid("need trials >= 1 and n >= 2".into()));
    }
    let full = DistributionSpec::ExpPower(0.5);
    let cut = DistributionSpec::TruncatedExpPower { s: 0.5, threshold };
    cut.validate()?;
    let mut equal = 0;
    for t in 0..trials {
        let seed = derive_seed(master_seed, n, t);
        let a = Instance::generate(n, seed, full, DistributionSpec::Uniform, StorageMode::Implicit)?;
        let b = Instance::generate(n, seed, cut, DistributionSpec::Uniform, StorageMode::Implicit)?;
        let (la, _) = dual::psi(&a, 0.0)?;
        // A disconnected truncated graph counts as a mismatch.
        if let Ok((lb, _)) = dual::psi(&b, 0.0) {
            if la.to_bits() == lb.to_bits() {
                equal += 1;
            }
        }
    }
    Ok(TruncationReport {
        n,
        threshold,
        trials,
        equal,
        fraction: equal as f64 / trials as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierGrowthRow {
    pub n: usize,
    /// `N = n (n - 1) / 2`.
    pub edges: usize,
    pub total_labels: Vec<usize>,
    pub target_labels: Vec<usize>,
    pub median_total_labels: f64,
    pub median_target_labels: f64,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierGrowthReport {
    pub rows: Vec<FrontierGrowthRow>,
    /// Least-squares slope of ln(median total labels) against ln N.
    pub slope: Option<f64>,
}

/// Full per-node Pareto frontiers from vertex 0 on uniform instances.
pub fn frontier_growth_experiment(n_grid: &[usize], trials: usize, master_seed: u64) -> Result<FrontierGrowthReport, ExperimentError> {
    if trials == 0 || n_grid.iter().any(|&n| n < 2) {
        return Err(ExperimentError::Invalid("need trials >= 1 and every n >= 2".into()));
    }
    let mut rows = Vec::new();
    for &n in n_grid {
        let mut total = Vec::new();
        let mut target = Vec::new();
        let mut errors = 0;
        for t in 0..trials {
            let seed = derive_seed(master_seed, n, t);
            let inst = Instance::generate(n, seed, DistributionSpec::Uniform, DistributionSpec::Uniform, StorageMode::Materialized)?;
            match pareto::pareto_frontier(&inst, crate::instance::SOURCE) {
                Ok(f) => {
                    let st = f.stats();
                    total.push(st.total_labels);
                    target.push(st.labels_at_target);
                }
                Err(e @ ParetoError::FrontierCap { .. }) => {
                    log::error!("n={n} trial={t}: {e}");
                    errors += 1;
                }
                Err(e) => return Err(ExperimentError::Invalid(e.to_string())),
            }
        }
        let med = |v: &[usize]| median(&v.iter().map(|&x| x as f64).collect::<Vec<_>>()).unwrap_or(f64::NAN);
        rows.push(FrontierGrowthRow {
            n,
            edges: crate::instance::edge_count(n),
            median_total_labels: med(&total),
            median_target_labels: med(&target),
            total_labels: total,
            target_labels: target,
            errors,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.median_total_labels > 0.0 && r.median_total_labels.is_finite())
        .map(|r| ((r.edges as f64).ln(), r.median_total_labels.ln()))
        .collect();
    Ok(FrontierGrowthReport {
        slope: least_squares_slope(&pts),
        rows,
    })
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_errors() {
        let text = "name=t\nn_grid=6, 10\nc0_rule=absolute:0.9\ntrials=3\nmaster_seed=5\nmethods=shrink,exact\nworkers=1\n# note\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.n_grid, vec![6, 10]);
        assert_eq!(cfg.methods, vec![Method::Exact, Method::Shrink]);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);

        assert!(matches!(ExperimentConfig::parse("n_grid=5\nbogus=1"), Err(ExperimentError::Config { line: 2, .. })));
        assert!(ExperimentConfig::parse("n_grid=10,5").is_err());
        assert!(ExperimentConfig::parse("n_grid=10\ntrials=0").is_err());
        assert!(ExperimentConfig::parse("n_grid=10\nc0_rule=window:1.5").is_err());
        assert!(ExperimentConfig::parse("trials=2").is_err());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for n in [6, 7, 100] {
            for t in 0..100 {
                assert!(seen.insert(derive_seed(1, n, t)));
            }
        }
        assert_eq!(derive_seed(1, 6, 3), derive_seed(1, 6, 3));
        assert_ne!(derive_seed(1, 6, 3), derive_seed(2, 6, 3));
    }

    #[test]
    fn window_fraction_endpoints() {
        let (lo, hi) = theory::c0_window(1000);
        assert_eq!(C0Rule::WindowFraction(0.0).resolve(1000), lo);
        assert!((C0Rule::WindowFraction(1.0).resolve(1000) - hi).abs() < 1e-15);
        assert_eq!(C0Rule::Absolute(0.7).resolve(1000), 0.7);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.5);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = [10.0f64, 100.0, 1000.0].iter().map(|&x| (x.ln(), (3.0 * x.powf(1.5)).ln())).collect();
        assert!((least_squares_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn min_product_scale_value() {
        assert!((min_product_scale(1024) - 0.011_729_809_910_112_34).abs() < 1e-15);
    }
}
