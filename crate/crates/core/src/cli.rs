//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 unsupported network class or a
//! guard refusing to run. Errors are reported on stderr as one JSON object.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    estimate_mixing_time, generator_balance_residual, loglog_slope, pmf_csv, stationary_pmf,
    tv_curve_csv, verify_complex_balanced, MixingConfig, Pmf, StationaryMode, Window,
};
use crate::dsl::parse_network;
use crate::error::Error;
use crate::network::{ReactionNetwork, State};
use crate::simulate::{
    boundary_csv, boundary_stats, mean_first_passage, simulate, trajectory_csv, FptQuery,
    SimConfig, StopCondition, DEFAULT_MAX_EVENTS, DEFAULT_MAX_TIME,
};
use crate::structure::{
    build_eta0, check_cyclic_assumptions, dominating_excursions, fit_path_sets, parse_path_file,
    path_probability, recognize_cyclic, theta_bounds, union_complement, ComplementFit,
    TransitionSequence,
};

pub const MODEL_1_2: &str = "# boundary-trapped birth-death pair\n0 <-> A + B @ 1, 1\nB <-> 2 B @ 1, 1\n";

/// `0 -> alpha A + B -> (2 alpha - 1) A + 2 B -> 0`, all rates 1.
pub fn cyclic_example(alpha: u64) -> String {
    format!(
        "0 -> {alpha} A + B @ 1\n{alpha} A + B -> {} A + 2 B @ 1\n{} A + 2 B -> 0 @ 1\n",
        2 * alpha - 1,
        2 * alpha - 1
    )
}

#[derive(Debug, Parser)]
#[command(name = "slowmix", version, about = "Slow mixing of stochastic reaction networks")]
pub struct Cli {
    /// Worker threads for trajectory batches (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Class,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cyclic-class recognition, escape exponents and dominating paths (JSON).
    Analyze {
        #[arg(long)]
        network: PathBuf,
    },
    /// Exact probabilities of path events from (n, 0).
    PathProb(PathProbArgs),
    /// Mean first passage times from (n, 0).
    Fpt(FptArgs),
    /// Mixing times from (n, 0).
    Mixing(MixingArgs),
    /// Poisson product law on a window with its generator balance residual.
    Stationary(StationaryArgs),
    /// One trajectory plus boundary statistics.
    Simulate(SimulateArgs),
    /// Run the bundled example networks with the reference parameters.
    ReplicatePaper(ReplicateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SeedArgs {
    #[arg(long, env = "SLOWMIX_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_EVENTS)]
    pub max_events: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_TIME)]
    pub max_time: f64,
}

impl SeedArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            seed: self.seed,
            max_events: self.max_events,
            max_time: self.max_time,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PathProbArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub n_grid: String,
    /// One path as comma-separated 0-based reaction indices.
    #[arg(long, conflicts_with_all = ["paths", "auto"])]
    pub path: Option<String>,
    /// Path file with [cycles] and [excursions] sections.
    #[arg(long, conflicts_with = "auto")]
    pub paths: Option<PathBuf>,
    /// Use the dominating cycle and excursions of a cyclic network.
    #[arg(long)]
    pub auto: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FptArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub n_grid: String,
    /// `sup:C` or `coord:<species>:C`.
    #[arg(long, default_value = "sup:5")]
    pub query: String,
    #[arg(long = "M", default_value_t = 100)]
    pub m: usize,
    #[command(flatten)]
    pub sim: SeedArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MixingArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub n_grid: String,
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    #[arg(long, default_value_t = 100.0)]
    pub grid: f64,
    #[arg(long = "M", default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value = "0:100,0:100")]
    pub window: String,
    /// Reference pmf CSV; defaults to the Poisson product law at `--c`.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    pub mode: Mode,
    /// Defaults to `1e5 * grid`.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Symmetric windowed TV instead of the one-sided tail term.
    #[arg(long)]
    pub symmetric: bool,
    /// Directory for per-n TV curves.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SeedArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StationaryArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long, default_value = "0:100,0:100")]
    pub window: String,
    #[arg(long, value_enum, default_value_t = Mode::Full)]
    pub mode: Mode,
    /// State whose class is used in class mode.
    #[arg(long)]
    pub init: Option<String>,
    /// Defaults to the window shrunk by the largest reaction increment.
    #[arg(long)]
    pub interior: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub init: String,
    #[arg(long)]
    pub t_max: f64,
    #[command(flatten)]
    pub sim: SeedArgs,
    /// Trajectory CSV; boundary statistics go to `<stem>.boundary.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplicateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Small grids and batches for a quick look.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, env = "SLOWMIX_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
pub enum CliError {
    /// Exit code 1.
    Input(String, String),
    /// Exit code 2, with an optional report for stdout.
    Unsupported(String, Option<Value>),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(..) => 1,
            CliError::Unsupported(..) => 2,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            CliError::Input(kind, msg) => json!({"error": kind, "message": msg}),
            CliError::Unsupported(msg, _) => json!({"error": "unsupported", "message": msg}),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Syntax { .. }
            | Error::DuplicateSpecies { .. }
            | Error::NonPositiveRate { .. }
            | Error::ReactantEqualsProduct { .. }
            | Error::EmptyNetwork => "parse",
            Error::Io(_) => "io",
            Error::InvalidWindow(_) | Error::EmptyInterior(_) | Error::WindowMismatch => "window",
            _ => "invalid-input",
        };
        CliError::Input(kind.into(), e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input("invalid-input".into(), msg.into())
}

/// Replayable record of one invocation.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config: Value,
    pub wall_clock_seconds: f64,
    pub outputs: Value,
    pub cap_exceeded: usize,
}

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

/// Output of a subcommand: CSV body (for `--format csv`) plus structured data.
struct Output {
    csv: String,
    data: Value,
    capped: usize,
}

fn read_network(path: &Path) -> CliResult<ReactionNetwork> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input("io".into(), format!("{}: {e}", path.display())))?;
    Ok(parse_network(&text)?)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| input(format!("bad {what} `{t}` in `{s}`"))))
        .collect()
}

fn parse_state(s: &str, dim: usize) -> CliResult<State> {
    let v: Vec<u64> = parse_list(s, "state coordinate")?;
    if v.len() != dim {
        return Err(input(format!("state `{s}` needs {dim} coordinates")));
    }
    Ok(State::new(v))
}

fn parse_grid(s: &str) -> CliResult<Vec<u64>> {
    let v: Vec<u64> = parse_list(s, "grid value")?;
    if v.is_empty() {
        return Err(input("empty n grid"));
    }
    Ok(v)
}

fn parse_c(s: Option<&str>, dim: usize) -> CliResult<Vec<f64>> {
    match s {
        None => Ok(vec![1.0; dim]),
        Some(s) => {
            let c: Vec<f64> = parse_list(s, "c value")?;
            if c.len() != dim || c.iter().any(|&v| !(v > 0.0)) {
                return Err(input(format!("--c needs {dim} positive values")));
            }
            Ok(c)
        }
    }
}

fn parse_query(s: &str, net: &ReactionNetwork) -> CliResult<FptQuery> {
    let parts: Vec<&str> = s.split(':').collect();
    let threshold = |t: &str| t.parse::<u64>().map_err(|_| input(format!("bad threshold in `{s}`")));
    match parts.as_slice() {
        ["sup", c] => Ok(FptQuery::sup_norm(threshold(c)?)),
        ["coord", sp, c] => {
            let idx = net
                .species_index(sp)
                .or_else(|| sp.parse::<usize>().ok().filter(|&i| i < net.dim()))
                .ok_or_else(|| input(format!("unknown species `{sp}`")))?;
            Ok(FptQuery::coordinate(idx, threshold(c)?))
        }
        _ => Err(input(format!("query `{s}`: expected sup:C or coord:<species>:C"))),
    }
}

fn axis(n: u64, dim: usize) -> State {
    let mut v = vec![0; dim];
    v[0] = n;
    State::new(v)
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "NA".into()
    }
}

fn slope_footer(points: &[(f64, f64)]) -> (String, Value) {
    match loglog_slope(points) {
        Ok(f) => (
            format!(
                "# slope={},intercept={},r_squared={}\n",
                f.slope, f.intercept, f.r_squared
            ),
            json!({"slope": f.slope, "intercept": f.intercept, "r_squared": f.r_squared}),
        ),
        Err(_) => ("# slope=NA\n".into(), Value::Null),
    }
}

fn seq_json(seq: &TransitionSequence, dim: usize) -> Value {
    json!({
        "increments": seq.increments,
        "labels": seq.labels,
        "endpoint": seq.endpoint(dim),
        "is_cycle": seq.is_cycle(),
    })
}

fn unsupported_report(net: &ReactionNetwork, reason: &str) -> Value {
    json!({
        "status": "unsupported-class",
        "reason": reason,
        "species": net.species().iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        "reactions": net.reactions().len(),
        "suggestion": "supply dominating paths by hand: path-prob --paths <file> with [cycles] and [excursions] sections",
    })
}

fn cmd_analyze(network: &Path) -> CliResult<Output> {
    let net = read_network(network)?;
    let spec = match recognize_cyclic(&net) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return Err(CliError::Unsupported(msg.clone(), Some(unsupported_report(&net, &msg))));
        }
    };
    let report = check_cyclic_assumptions(&spec);
    let theta = match theta_bounds(&spec) {
        Ok(t) => t,
        Err(e) => {
            let msg = e.to_string();
            return Err(CliError::Unsupported(msg.clone(), Some(unsupported_report(&net, &msg))));
        }
    };
    let eta0 = build_eta0(&spec);
    let excursions = dominating_excursions(&spec)?;
    let data = json!({
        "status": "ok",
        "cyclic": spec,
        "assumptions": report,
        "theta": theta,
        "eta0": seq_json(&eta0, 2),
        "excursions": excursions
            .iter()
            .map(|(i, s)| {
                let mut v = seq_json(s, 2);
                v["i"] = json!(i);
                v
            })
            .collect::<Vec<_>>(),
        "degenerate_top_excursion": spec.len == 2,
    });
    let csv = serde_json::to_string_pretty(&data).unwrap() + "\n";
    Ok(Output { csv, data, capped: 0 })
}

fn rat_cells(r: &std::result::Result<BigRational, Error>) -> (String, String) {
    match r {
        Ok(p) => (p.to_string(), fmt_f64(p.to_f64().unwrap_or(f64::NAN))),
        Err(Error::InfeasiblePath { .. }) => ("infeasible".into(), String::new()),
        Err(e) => (format!("error: {e}"), String::new()),
    }
}

fn fit_json(f: &ComplementFit) -> Value {
    json!({
        "fitted_exponent": f.fitted_exponent,
        "fitted_constant": f.fitted_constant,
        "n0_suggested": f.n0_suggested,
    })
}

fn cmd_path_prob(a: &PathProbArgs) -> CliResult<Output> {
    let net = read_network(&a.network)?;
    let grid = parse_grid(&a.n_grid)?;
    let (cycles, excursions, names): (Vec<TransitionSequence>, Vec<TransitionSequence>, Vec<String>) =
        if let Some(p) = &a.path {
            let labels: Vec<usize> = parse_list(p, "reaction index")?;
            (vec![TransitionSequence::from_labels(&net, &labels)?], vec![], vec!["path".into()])
        } else if let Some(file) = &a.paths {
            let text = fs::read_to_string(file)
                .map_err(|e| CliError::Input("io".into(), format!("{}: {e}", file.display())))?;
            let sets = parse_path_file(&net, &text)?;
            let names = (1..=sets.cycles.len())
                .map(|i| format!("cycle{i}"))
                .chain((1..=sets.excursions.len()).map(|i| format!("excursion{i}")))
                .collect();
            (sets.cycles, sets.excursions, names)
        } else if a.auto {
            let spec = recognize_cyclic(&net).map_err(|e| {
                let msg = e.to_string();
                CliError::Unsupported(msg.clone(), Some(unsupported_report(&net, &msg)))
            })?;
            let ex = dominating_excursions(&spec)?;
            let names = std::iter::once("eta0".to_string())
                .chain(ex.iter().map(|(i, _)| format!("eta{i}")))
                .collect();
            (vec![build_eta0(&spec)], ex.into_iter().map(|(_, s)| s).collect(), names)
        } else {
            return Err(input("one of --path, --paths or --auto is required"));
        };

    let all: Vec<TransitionSequence> = cycles.iter().chain(&excursions).cloned().collect();
    let mut csv = String::from("n,quantity,exact,decimal\n");
    let mut rows = Vec::new();
    let mut feasible = Vec::new();
    for &n in &grid {
        let start = axis(n, net.dim());
        let mut cells: Vec<(String, std::result::Result<BigRational, Error>)> = names
            .iter()
            .zip(&all)
            .map(|(name, s)| (name.clone(), path_probability(&net, &start, s)))
            .collect();
        if !excursions.is_empty() || cycles.len() > 1 || a.path.is_some() {
            cells.push(("complement_cycles".into(), union_complement(&net, &start, &cycles)));
        }
        if !excursions.is_empty() {
            cells.push(("complement_all".into(), union_complement(&net, &start, &all)));
        }
        if cells.iter().all(|(_, r)| r.is_ok()) {
            feasible.push(n);
        }
        for (q, r) in &cells {
            let (exact, dec) = rat_cells(r);
            csv.push_str(&format!("{n},{q},{exact},{dec}\n"));
            rows.push(json!({"n": n, "quantity": q, "exact": exact, "decimal": dec}));
        }
    }
    let mut fit = Value::Null;
    if a.path.is_none() && feasible.len() >= 3 && !excursions.is_empty() {
        if let Ok(f) = fit_path_sets(&net, &cycles, &excursions, &feasible) {
            csv.push_str(&format!(
                "# fit cycles exponent={},constant={},n0={}\n",
                f.cycles.fitted_exponent, f.cycles.fitted_constant, f.cycles.n0_suggested
            ));
            csv.push_str(&format!(
                "# fit all exponent={},constant={},n0={}\n",
                f.with_excursions.fitted_exponent,
                f.with_excursions.fitted_constant,
                f.with_excursions.n0_suggested
            ));
            fit = json!({"cycles": fit_json(&f.cycles), "with_excursions": fit_json(&f.with_excursions)});
        }
    }
    Ok(Output {
        csv,
        data: json!({"rows": rows, "fit": fit}),
        capped: 0,
    })
}

fn cmd_fpt(a: &FptArgs) -> CliResult<Output> {
    let net = read_network(&a.network)?;
    let grid = parse_grid(&a.n_grid)?;
    let q = parse_query(&a.query, &net)?;
    if a.m < 2 {
        return Err(input("--M must be at least 2"));
    }
    let cfg = a.sim.config();
    let mut csv = String::from("n,mean,stderr,reached,capped,absorbed\n");
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut capped = 0;
    for &n in &grid {
        let s = mean_first_passage(&net, &axis(n, net.dim()), &q, a.m, &cfg)?;
        capped += s.capped;
        csv.push_str(&format!(
            "{n},{},{},{},{},{}\n",
            fmt_f64(s.mean),
            fmt_f64(s.stderr),
            s.reached,
            s.capped,
            s.absorbed
        ));
        if s.mean > 0.0 {
            points.push((n as f64, s.mean));
        }
        rows.push(json!({"n": n, "summary": s}));
    }
    let (footer, fit) = slope_footer(&points);
    csv.push_str(&footer);
    Ok(Output {
        csv,
        data: json!({"rows": rows, "fit": fit}),
        capped,
    })
}

/// Reads a pmf in the `x_...,mass` / `TAIL` format.
pub fn parse_pmf_csv(text: &str, window: &Window) -> crate::error::Result<Pmf> {
    let mut mass = std::collections::BTreeMap::new();
    let mut tail = None;
    for (i, line) in text.lines().enumerate().skip(1) {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let bad = || Error::Syntax {
            line: i + 1,
            column: 1,
            message: format!("bad pmf row `{line}`"),
        };
        let v: f64 = cells.last().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        if cells[0] == "TAIL" {
            tail = Some(v);
            continue;
        }
        if cells.len() != window.dim() + 1 {
            return Err(bad());
        }
        let x = cells[..window.dim()]
            .iter()
            .map(|c| c.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<crate::error::Result<Vec<_>>>()?;
        if !window.contains(&x) {
            return Err(Error::InvalidWindow(format!("reference state {x:?} outside the window")));
        }
        mass.insert(State::new(x), v);
    }
    let tail_mass = match tail {
        Some(t) => t,
        None => (1.0 - mass.values().sum::<f64>()).max(0.0),
    };
    Ok(Pmf {
        window: window.clone(),
        mass,
        tail_mass,
    })
}

fn cmd_mixing(a: &MixingArgs) -> CliResult<Output> {
    let net = read_network(&a.network)?;
    let grid = parse_grid(&a.n_grid)?;
    let window: Window = a.window.parse()?;
    if window.dim() != net.dim() {
        return Err(Error::WindowMismatch.into());
    }
    let reference_for = |init: &State| -> CliResult<Pmf> {
        if let Some(path) = &a.reference {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input("io".into(), format!("{}: {e}", path.display())))?;
            return Ok(parse_pmf_csv(&text, &window)?);
        }
        let c = parse_c(a.c.as_deref(), net.dim())?;
        if !verify_complex_balanced(&net, &c, 1e-9)?.balanced {
            return Err(CliError::Unsupported(
                "network is not complex balanced at c; pass --reference".into(),
                None,
            ));
        }
        let mode = match a.mode {
            Mode::Full => StationaryMode::Full,
            Mode::Class => StationaryMode::Class(init.clone()),
        };
        Ok(stationary_pmf(&net, &c, &window, &mode)?)
    };
    let mut cfg = MixingConfig::new(a.delta, a.m, window.clone());
    cfg.grid_step = a.grid;
    cfg.t_max = a.t_max.unwrap_or(1e5 * a.grid);
    cfg.symmetric = a.symmetric;
    let sim = a.sim.config();
    if let Some(dir) = &a.curves {
        fs::create_dir_all(dir)?;
    }
    // a full-mode reference is shared by all n
    let shared = if a.mode == Mode::Full || a.reference.is_some() {
        Some(reference_for(&axis(0, net.dim()))?)
    } else {
        None
    };

    let mut csv = String::from("n,t_mix,final_tv,grid_points,capped\n");
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut capped = 0;
    for &n in &grid {
        let init = axis(n, net.dim());
        let reference = match &shared {
            Some(r) => r.clone(),
            None => {
                if !window.contains(&init) {
                    return Err(input(format!("class mode needs (n,0) inside the window, n = {n}")));
                }
                reference_for(&init)?
            }
        };
        let est = estimate_mixing_time(&net, &init, &reference, &cfg, &sim)?;
        capped += est.capped;
        if let Some(dir) = &a.curves {
            fs::write(dir.join(format!("tv_n{n}.csv")), tv_curve_csv(&est.tv_curve))?;
        }
        let last = est.tv_curve.last().map_or(f64::NAN, |p| p.1);
        csv.push_str(&format!(
            "{n},{},{},{},{}\n",
            est.t_mix.map_or("NA".into(), |t| t.to_string()),
            fmt_f64(last),
            est.tv_curve.len(),
            est.capped
        ));
        if let Some(t) = est.t_mix {
            points.push((n as f64, t));
        }
        rows.push(json!({"n": n, "t_mix": est.t_mix, "tv_curve": est.tv_curve, "capped": est.capped}));
    }
    let (footer, fit) = slope_footer(&points);
    csv.push_str(&footer);
    Ok(Output {
        csv,
        data: json!({"rows": rows, "fit": fit, "config": cfg}),
        capped,
    })
}

fn default_interior(net: &ReactionNetwork, window: &Window) -> CliResult<Window> {
    let reach = net
        .reactions()
        .iter()
        .flat_map(|r| r.increment())
        .map(|v| v.unsigned_abs())
        .max()
        .unwrap_or(0);
    let lower: Vec<u64> = window
        .lower
        .iter()
        .map(|&l| if l == 0 { 0 } else { l + reach })
        .collect();
    let upper: Vec<u64> = window.upper.iter().map(|&u| u.saturating_sub(reach)).collect();
    if lower.iter().zip(&upper).any(|(l, u)| l > u) || window.upper.iter().any(|&u| u < reach) {
        return Err(Error::EmptyInterior(format!("window {window:?} too small for reaction reach {reach}")).into());
    }
    Ok(Window::new(lower, upper)?)
}

fn cmd_stationary(a: &StationaryArgs) -> CliResult<Output> {
    let net = read_network(&a.network)?;
    let c = parse_c(a.c.as_deref(), net.dim())?;
    let window: Window = a.window.parse()?;
    if window.dim() != net.dim() {
        return Err(Error::WindowMismatch.into());
    }
    if window.size() < 2 {
        return Err(Error::InvalidWindow("degenerate window with a single state".into()).into());
    }
    let mode = match a.mode {
        Mode::Full => StationaryMode::Full,
        Mode::Class => {
            let init = a
                .init
                .as_deref()
                .ok_or_else(|| input("--mode class needs --init"))?;
            StationaryMode::Class(parse_state(init, net.dim())?)
        }
    };
    let balance = verify_complex_balanced(&net, &c, 1e-9)?;
    let pmf = stationary_pmf(&net, &c, &window, &mode)?;
    let interior = match &a.interior {
        Some(s) => s.parse()?,
        None => default_interior(&net, &window)?,
    };
    let residual = generator_balance_residual(&net, &pmf, &interior)?;
    let mut csv = pmf_csv(&net, &pmf);
    csv.push_str(&format!(
        "# balance_residual={residual:e},complex_balanced={}\n",
        balance.balanced
    ));
    Ok(Output {
        csv,
        data: json!({
            "complex_balanced": balance.balanced,
            "complex_residuals": balance.residuals,
            "balance_residual": residual,
            "interior": interior,
            "window_mass": pmf.window_mass(),
            "tail_mass": pmf.tail_mass,
            "warning": (!balance.balanced).then_some("c is not a complex-balanced equilibrium; the product law is not stationary"),
        }),
        capped: 0,
    })
}

fn boundary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("trajectory".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.boundary.csv"))
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<Output> {
    let net = read_network(&a.network)?;
    let init = parse_state(&a.init, net.dim())?;
    if !(a.t_max >= 0.0) {
        return Err(input("--t-max must be non-negative"));
    }
    let tr = simulate(&net, &init, &StopCondition::Horizon(a.t_max), &a.sim.config())?;
    let stats = boundary_stats(&tr);
    let csv = trajectory_csv(&net, &tr);
    if let Some(out) = &a.out {
        fs::write(boundary_path(out), boundary_csv(&net, &stats))?;
    }
    Ok(Output {
        csv,
        data: json!({
            "events": tr.events.len(),
            "outcome": tr.outcome,
            "final_state": tr.final_state(),
            "boundary_visits": stats.n_of_t(tr.end_time),
            "holding_times": stats.holding_times().len(),
        }),
        capped: usize::from(tr.outcome.cap_exceeded()),
    })
}

fn cmd_replicate(a: &ReplicateArgs) -> CliResult<Output> {
    fs::create_dir_all(&a.out)?;
    let m12 = a.out.join("model_1_2.net");
    let ex = a.out.join("cyclic_alpha2.net");
    fs::write(&m12, MODEL_1_2)?;
    fs::write(&ex, cyclic_example(2))?;
    let paths = a.out.join("model_1_2.paths");
    fs::write(&paths, "[cycles]\n0,1\n0,0,1,1\n[excursions]\n0,2,1,1\n")?;

    let (fpt_grid, mix_grid, m) = if a.quick {
        ("25,50,100", "25,50", 20)
    } else {
        ("100,200,400,800", "100,200,400", 100)
    };
    let sim = || SeedArgs {
        seed: a.seed,
        max_events: DEFAULT_MAX_EVENTS,
        max_time: DEFAULT_MAX_TIME,
    };
    let mut summary = serde_json::Map::new();
    let mut capped = 0;
    let mut save = |name: &str, o: Output| -> CliResult<Value> {
        fs::write(a.out.join(name), &o.csv)?;
        capped += o.capped;
        Ok(o.data)
    };

    summary.insert("analyze".into(), save("analyze_cyclic_alpha2.json", cmd_analyze(&ex)?)?);
    let pp = PathProbArgs {
        network: m12.clone(),
        n_grid: "10,100,1000".into(),
        path: None,
        paths: Some(paths),
        auto: false,
        out: None,
    };
    summary.insert("path_prob_model_1_2".into(), save("path_prob_model_1_2.csv", cmd_path_prob(&pp)?)?);
    let pp = PathProbArgs {
        network: ex.clone(),
        n_grid: "50,100,200,400,800".into(),
        path: None,
        paths: None,
        auto: true,
        out: None,
    };
    summary.insert("path_prob_cyclic".into(), save("path_prob_cyclic_alpha2.csv", cmd_path_prob(&pp)?)?);
    for (label, net) in [("model_1_2", &m12), ("cyclic_alpha2", &ex)] {
        let f = FptArgs {
            network: net.clone(),
            n_grid: fpt_grid.into(),
            query: "sup:5".into(),
            m,
            sim: sim(),
            out: None,
        };
        summary.insert(format!("fpt_{label}"), save(&format!("fpt_{label}.csv"), cmd_fpt(&f)?)?);
        let mx = MixingArgs {
            network: net.clone(),
            n_grid: mix_grid.into(),
            delta: 0.2,
            grid: 100.0,
            m,
            window: "0:100,0:100".into(),
            reference: None,
            c: None,
            mode: Mode::Full,
            t_max: None,
            symmetric: false,
            curves: Some(a.out.join(format!("tv_{label}"))),
            sim: sim(),
            out: None,
        };
        summary.insert(format!("mixing_{label}"), save(&format!("mixing_{label}.csv"), cmd_mixing(&mx)?)?);
    }
    let data = Value::Object(summary);
    let csv = serde_json::to_string_pretty(&data).unwrap() + "\n";
    Ok(Output { csv, data, capped })
}

fn config_echo(cli: &Cli) -> (String, Value) {
    let (name, v) = match &cli.command {
        Command::Analyze { network } => ("analyze", json!({"network": network})),
        Command::PathProb(a) => ("path-prob", json!(a)),
        Command::Fpt(a) => ("fpt", json!(a)),
        Command::Mixing(a) => ("mixing", json!(a)),
        Command::Stationary(a) => ("stationary", json!(a)),
        Command::Simulate(a) => ("simulate", json!(a)),
        Command::ReplicatePaper(a) => ("replicate-paper", json!(a)),
    };
    (name.into(), json!({"workers": cli.workers, "format": cli.format, "args": v}))
}

fn out_path(cli: &Cli) -> Option<&Path> {
    match &cli.command {
        Command::PathProb(a) => a.out.as_deref(),
        Command::Fpt(a) => a.out.as_deref(),
        Command::Mixing(a) => a.out.as_deref(),
        Command::Stationary(a) => a.out.as_deref(),
        Command::Simulate(a) => a.out.as_deref(),
        Command::Analyze { .. } | Command::ReplicatePaper(_) => None,
    }
}

fn dispatch(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Analyze { network } => cmd_analyze(network),
        Command::PathProb(a) => cmd_path_prob(a),
        Command::Fpt(a) => cmd_fpt(a),
        Command::Mixing(a) => cmd_mixing(a),
        Command::Stationary(a) => cmd_stationary(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::ReplicatePaper(a) => cmd_replicate(a),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(|e| input(format!("worker pool: {e}")))?;
    let started = Instant::now();
    let out = pool.install(|| dispatch(cli))?;
    let (command, config) = config_echo(cli);
    let report = RunReport {
        version: version_string(),
        command,
        config,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs: out.data,
        cap_exceeded: out.capped,
    };
    let report_text = serde_json::to_string_pretty(&report).unwrap() + "\n";
    let body = match cli.format {
        Format::Csv => &out.csv,
        Format::Json => &report_text,
    };
    match out_path(cli) {
        Some(path) => {
            fs::write(path, body)?;
            if cli.format == Format::Csv {
                let mut name = path.as_os_str().to_owned();
                name.push(".report.json");
                fs::write(PathBuf::from(name), &report_text)?;
            }
        }
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input("io".into(), e.to_string())
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = json!({"error": "usage", "message": e.to_string()});
            let _ = writeln!(stderr, "{err}");
            return 1;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            if let CliError::Unsupported(_, Some(report)) = &e {
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(report).unwrap());
            }
            let _ = writeln!(stderr, "{}", e.to_json());
            e.code()
        }
    }
}
