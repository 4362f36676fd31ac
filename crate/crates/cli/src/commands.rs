use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use snetcalc::sim::{replicate, virtual_delay_samples, write_trace, SimConfig};
use snetcalc::{
    midpoint_delta, optimize, optimize_closed_form, optimize_independent, BoundResult, Error,
    NetworkSpec, Objective, StieltjesGrid, TrafficModel,
};

use crate::config::AnalysisConfig;
use crate::report::{write_rows, Method, Point, Provenance, ReportRow, Status, Sweep};

#[derive(Debug, Parser)]
#[command(
    name = "snetcalc",
    version,
    about = "End-to-end delay and backlog bounds for tandem networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimized bound for the configured network.
    Bound {
        #[arg(long)]
        config: PathBuf,
        /// CSV report; a provenance record is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        hops: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Bound for each path length.
    SweepHops {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated hop counts [default: 1..=20]
        #[arg(long, value_delimiter = ',')]
        hops: Option<Vec<usize>>,
    },
    /// Bound for each number of through flows, with as many cross flows.
    SweepFlows {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated hop counts [default: 1,2,5,10]
        #[arg(long, value_delimiter = ',')]
        hops: Option<Vec<usize>>,
        /// Comma-separated flow counts [default: 20 log-spaced points up to saturation]
        #[arg(long, value_delimiter = ',')]
        flows: Option<Vec<u32>>,
    },
    /// Compare the delay bound with simulated virtual delays.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        hops: Option<usize>,
        /// Target violation probability
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<u32>,
        /// Slots per replication
        #[arg(long)]
        slots: Option<u32>,
        /// Per-slot trace of the first replication
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        trace_stride: usize,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Infeasible(String),
    SimulationFailed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::SimulationFailed(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::SimulationFailed(m) => write!(f, "simulation check failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn library_error(e: Error, cfg: &AnalysisConfig) -> CliError {
    match e {
        Error::Infeasible {
            closest_theta,
            margin,
        } => {
            let g = cfg.theta_grid();
            CliError::Infeasible(format!(
                "no stable theta in [{:e}, {:e}] 1/bit; largest margin C - rho - rho_c = {margin:e} b/s at theta {closest_theta:e}",
                g.min, g.max
            ))
        }
        e => CliError::Validation(e.to_string()),
    }
}

fn load(path: &Path) -> Result<(String, AnalysisConfig), CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg = AnalysisConfig::parse(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((text, cfg))
}

fn primary(cfg: &AnalysisConfig) -> Method {
    if cfg.independent {
        Method::Independent
    } else {
        Method::UnionBound
    }
}

fn run_method(
    method: Method,
    through: &TrafficModel,
    spec: &NetworkSpec,
    cfg: &AnalysisConfig,
) -> snetcalc::Result<BoundResult> {
    let objective = cfg.objective.objective();
    match method {
        Method::Independent => optimize_independent(
            through,
            spec,
            objective,
            &cfg.settings(),
            StieltjesGrid::default(),
        ),
        _ => optimize(through, spec, objective, &cfg.settings()),
    }
}

fn closed_form_row(
    point: Point,
    through: &TrafficModel,
    spec: &NetworkSpec,
    cfg: &AnalysisConfig,
) -> snetcalc::Result<ReportRow> {
    let (theta, value) =
        optimize_closed_form(through, spec, cfg.objective.objective(), &cfg.theta_grid())?;
    let delta = midpoint_delta(through, spec, theta)?;
    Ok(ReportRow::from_closed_form(
        point,
        theta,
        delta,
        value,
        spec.epsilon,
    ))
}

/// Rows for one network: the configured method, then the closed form.
fn point_rows(
    point: Point,
    through: &TrafficModel,
    spec: &NetworkSpec,
    cfg: &AnalysisConfig,
) -> Result<Vec<ReportRow>, CliError> {
    let method = primary(cfg);
    let flag = |method, e: Error| {
        ReportRow::from_error(point, method, &e).ok_or_else(|| library_error(e, cfg))
    };
    let main = match run_method(method, through, spec, cfg) {
        Ok(r) => ReportRow::from_result(point, method, &r),
        Err(e) => flag(method, e)?,
    };
    let closed =
        closed_form_row(point, through, spec, cfg).or_else(|e| flag(Method::ClosedForm, e))?;
    Ok(vec![main, closed])
}

fn unit(objective: Objective) -> &'static str {
    match objective {
        Objective::Delay => "s",
        Objective::Backlog | Objective::Output => "bits",
    }
}

fn write_outputs(
    out: Option<&Path>,
    rows: &[ReportRow],
    provenance: &Provenance,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_rows(rows, BufWriter::new(fs::File::create(path)?))?;
            write_provenance(path, provenance)?;
        }
        None => write_rows(rows, &mut *stdout)?,
    }
    Ok(())
}

fn provenance_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn write_provenance(out: &Path, p: &Provenance) -> Result<(), CliError> {
    let file = fs::File::create(provenance_path(out))?;
    serde_json::to_writer_pretty(BufWriter::new(file), p).map_err(|e| CliError::Io(e.to_string()))
}

fn flows_of(spec: &NetworkSpec, through: &TrafficModel) -> (u32, u32) {
    (through.count, spec.cross.as_ref().map_or(0, |c| c.count))
}

pub fn run(
    cli: Cli,
    arguments: Vec<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match cli.command {
        Command::Bound {
            config,
            out,
            hops,
            epsilon,
        } => bound(&config, out.as_deref(), hops, epsilon, arguments, stdout),
        Command::SweepHops { config, out, hops } => {
            sweep_hops(&config, out.as_deref(), hops, arguments, stdout)
        }
        Command::SweepFlows {
            config,
            out,
            hops,
            flows,
        } => sweep_flows(
            &config,
            out.as_deref(),
            hops,
            flows,
            arguments,
            stdout,
            stderr,
        ),
        Command::Simulate {
            config,
            out,
            hops,
            epsilon,
            seed,
            replications,
            slots,
            trace,
            trace_stride,
        } => simulate(
            &config,
            SimArgs {
                out,
                hops,
                epsilon,
                seed,
                replications,
                slots,
                trace,
                trace_stride,
            },
            arguments,
            stdout,
            stderr,
        ),
    }
}

fn bound(
    path: &Path,
    out: Option<&Path>,
    hops: Option<usize>,
    epsilon: Option<f64>,
    arguments: Vec<String>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (text, cfg) = load(path)?;
    let (through, spec) = cfg
        .network(hops, None, epsilon)
        .map_err(CliError::Validation)?;
    let objective = cfg.objective.objective();
    let method = primary(&cfg);
    let result = run_method(method, &through, &spec, &cfg).map_err(|e| library_error(e, &cfg))?;
    let (n, m) = flows_of(&spec, &through);
    let point = Point {
        sweep: Sweep::None,
        value: spec.hops as f64,
        hops: spec.hops,
        through_flows: n,
        cross_flows: m,
    };
    let closed =
        closed_form_row(point, &through, &spec, &cfg).map_err(|e| library_error(e, &cfg))?;
    let u = unit(objective);
    let name = match objective {
        Objective::Delay => "delay",
        Objective::Backlog => "backlog",
        Objective::Output => "output burst",
    };
    writeln!(stdout, "{name} bound      {:.6e} {u}", result.value)?;
    writeln!(stdout, "method           {}", method_tag(method))?;
    writeln!(stdout, "hops             {}", spec.hops)?;
    writeln!(stdout, "flows            {n} through, {m} cross")?;
    writeln!(stdout, "theta            {:.6e} 1/bit", result.theta)?;
    writeln!(stdout, "delta            {:.6e} b/s", result.delta)?;
    writeln!(
        stdout,
        "epsilon          {:e} target, {:.6e} achieved",
        result.epsilon, result.achieved
    )?;
    writeln!(stdout, "sigma            {:.6e} bits", result.sigma)?;
    if let Some(rate) = result.output_rate {
        writeln!(stdout, "output rate      {rate:.6e} b/s")?;
    }
    for term in &result.breakdown {
        writeln!(
            stdout,
            "  {:<14} sigma {:.6e} bits, probability {:.6e}",
            term.name, term.sigma, term.probability
        )?;
    }
    writeln!(
        stdout,
        "closed form      {:.6e} {u} at theta {:.6e}",
        closed.bound, closed.theta
    )?;
    if let Some(out) = out {
        let rows = vec![ReportRow::from_result(point, method, &result), closed];
        let p = Provenance::new("bound", arguments, &text, &cfg, rows.len());
        write_outputs(Some(out), &rows, &p, stdout)?;
    }
    Ok(())
}

fn method_tag(m: Method) -> &'static str {
    match m {
        Method::UnionBound => "thm2",
        Method::Independent => "thm3",
        Method::ClosedForm => "closed-form",
    }
}

fn require_list<T>(list: &[T], flag: &str) -> Result<(), CliError> {
    if list.is_empty() {
        Err(CliError::Validation(format!(
            "--{flag} needs at least one value"
        )))
    } else {
        Ok(())
    }
}

fn sweep_hops(
    path: &Path,
    out: Option<&Path>,
    hops: Option<Vec<usize>>,
    arguments: Vec<String>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let (text, cfg) = load(path)?;
    let hops = hops.unwrap_or_else(|| (1..=20).collect());
    require_list(&hops, "hops")?;
    let rows: Vec<Vec<ReportRow>> = hops
        .par_iter()
        .map(|&h| {
            let (through, spec) = cfg
                .network(Some(h), None, None)
                .map_err(CliError::Validation)?;
            let (n, m) = flows_of(&spec, &through);
            let point = Point {
                sweep: Sweep::Hops,
                value: h as f64,
                hops: h,
                through_flows: n,
                cross_flows: m,
            };
            point_rows(point, &through, &spec, &cfg)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<ReportRow> = rows.into_iter().flatten().collect();
    let p = Provenance::new("sweep-hops", arguments, &text, &cfg, rows.len());
    write_outputs(out, &rows, &p, stdout)?;
    if rows.iter().all(|r| r.status == Status::Infeasible) {
        let g = cfg.theta_grid();
        return Err(CliError::Infeasible(format!(
            "no stable theta in [{:e}, {:e}] 1/bit at any hop count",
            g.min, g.max
        )));
    }
    Ok(())
}

/// `points` log-spaced flow counts from 10 up to the count at which the
/// mean load reaches capacity.
pub fn default_flows(cfg: &AnalysisConfig, points: usize) -> Vec<u32> {
    let per_pair = cfg.through.mean_rate().unwrap_or(0.0)
        + cfg
            .cross
            .as_ref()
            .and_then(|c| c.mean_rate())
            .unwrap_or(0.0);
    let upper = if per_pair > 0.0 {
        (cfg.capacity() / per_pair).ceil().max(20.0)
    } else {
        1000.0
    };
    let lower = 10f64.min(upper / 2.0);
    let mut out: Vec<u32> = (0..points)
        .map(|i| (lower * (upper / lower).powf(i as f64 / (points - 1) as f64)).round() as u32)
        .collect();
    out.dedup();
    out
}

fn sweep_flows(
    path: &Path,
    out: Option<&Path>,
    hops: Option<Vec<usize>>,
    flows: Option<Vec<u32>>,
    arguments: Vec<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let (text, cfg) = load(path)?;
    let hops = hops.unwrap_or_else(|| vec![1, 2, 5, 10]);
    require_list(&hops, "hops")?;
    let flows = flows.unwrap_or_else(|| default_flows(&cfg, 20));
    require_list(&flows, "flows")?;
    let points: Vec<(usize, u32)> = hops
        .iter()
        .flat_map(|&h| flows.iter().map(move |&n| (h, n)))
        .collect();
    let rows: Vec<Vec<ReportRow>> = points
        .par_iter()
        .map(|&(h, count)| {
            let (through, spec) = cfg
                .network(Some(h), Some(count), None)
                .map_err(CliError::Validation)?;
            let (n, m) = flows_of(&spec, &through);
            let point = Point {
                sweep: Sweep::Flows,
                value: f64::from(count),
                hops: h,
                through_flows: n,
                cross_flows: m,
            };
            point_rows(point, &through, &spec, &cfg)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<ReportRow> = rows.into_iter().flatten().collect();
    let flagged = rows.iter().filter(|r| r.status != Status::Ok).count();
    if flagged > 0 {
        writeln!(
            stderr,
            "warning: {flagged} of {} rows infeasible or above the divergence sentinel",
            rows.len()
        )?;
    }
    let p = Provenance::new("sweep-flows", arguments, &text, &cfg, rows.len());
    write_outputs(out, &rows, &p, stdout)
}

struct SimArgs {
    out: Option<PathBuf>,
    hops: Option<usize>,
    epsilon: f64,
    seed: Option<u64>,
    replications: Option<u32>,
    slots: Option<u32>,
    trace: Option<PathBuf>,
    trace_stride: usize,
}

/// Outcome of one simulated replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub replication: u64,
    pub samples: usize,
    /// seconds
    pub bound: f64,
    pub epsilon: f64,
    /// Fraction of samples above the bound.
    pub exceedance: f64,
    pub pass: bool,
}

fn simulate(
    path: &Path,
    args: SimArgs,
    arguments: Vec<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let (text, cfg) = load(path)?;
    let eps = args.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Validation(format!(
            "--epsilon must lie strictly between 0 and 1, got {eps}"
        )));
    }
    let (through, spec) = cfg
        .network(args.hops, None, Some(eps))
        .map_err(CliError::Validation)?;
    let method = primary(&cfg);
    let objective = Objective::Delay;
    let bound = match method {
        Method::Independent => optimize_independent(
            &through,
            &spec,
            objective,
            &cfg.settings(),
            StieltjesGrid::default(),
        ),
        _ => optimize(&through, &spec, objective, &cfg.settings()),
    }
    .map_err(|e| library_error(e, &cfg))?;

    let sim = &cfg.simulation;
    let mut sc = SimConfig::new(
        spec.hops,
        spec.capacity,
        cfg.through
            .source(through.count)
            .map_err(CliError::Validation)?,
        match &cfg.cross {
            Some(c) => Some(c.source(c.count()).map_err(CliError::Validation)?),
            None => None,
        },
    );
    sc.slot = spec.slot;
    sc.horizon = args.slots.map_or(sim.slots.0, |s| s) as usize;
    sc.seed = args.seed.unwrap_or(sim.seed);
    sc.replications = args.replications.unwrap_or(sim.replications.0) as usize;
    sc.warmup = sim.warmup;
    sc.validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let q = bound.value;
    let results = replicate(&sc, |r, trace| {
        let ccdf = virtual_delay_samples(trace)?;
        Ok::<_, Error>((r, ccdf.count(), ccdf.ccdf(q)))
    })
    .map_err(|e| CliError::SimulationFailed(e.to_string()))?;
    let rows: Vec<SimRow> = results
        .into_iter()
        .map(|r| {
            let (replication, samples, exceedance) =
                r.map_err(|e| CliError::SimulationFailed(e.to_string()))?;
            Ok(SimRow {
                replication,
                samples,
                bound: q,
                epsilon: eps,
                exceedance,
                pass: exceedance <= eps,
            })
        })
        .collect::<Result<_, CliError>>()?;

    let needed = (100.0 / eps).ceil();
    if let Some(min) = rows.iter().map(|r| r.samples).min() {
        if (min as f64) < needed {
            writeln!(
                stderr,
                "warning: {min} samples per replication is below 100/epsilon = {needed}; the check is not meaningful"
            )?;
        }
    }
    if let Some(trace_path) = &args.trace {
        let trace = snetcalc::sim::run_tandem(&sc, 0)
            .map_err(|e| CliError::SimulationFailed(e.to_string()))?;
        write_trace(
            &trace,
            args.trace_stride,
            BufWriter::new(fs::File::create(trace_path)?),
        )?;
    }

    writeln!(
        stdout,
        "delay bound      {q:.6e} s ({}, epsilon {eps:e})",
        method_tag(method)
    )?;
    writeln!(stdout, "replications     {}", rows.len())?;
    for r in &rows {
        writeln!(
            stdout,
            "  replication {:<4} samples {:<10} exceedance {:.6e} {}",
            r.replication,
            r.samples,
            r.exceedance,
            if r.pass { "PASS" } else { "FAIL" }
        )?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    writeln!(
        stdout,
        "result           {}",
        if failed == 0 { "PASS" } else { "FAIL" }
    )?;

    if let Some(out) = &args.out {
        let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(out)?));
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        write_provenance(
            out,
            &Provenance::new("simulate", arguments, &text, &cfg, rows.len()),
        )?;
    }
    if failed > 0 {
        return Err(CliError::SimulationFailed(format!(
            "{failed} of {} replications exceed the bound more often than epsilon",
            rows.len()
        )));
    }
    Ok(())
}
