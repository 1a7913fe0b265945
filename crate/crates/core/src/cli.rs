//! Command-line front end.
//!
//! Exit codes: 0 success (or a rigid verdict), 1 failed identity or violated
//! hypothesis, 2 usage or configuration error (including unknown scenarios),
//! 3 sampling outside a chart, 4 indeterminate verdict, 5 any other
//! numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::GeomError;
use crate::identities::{verify_scenario_on, SuiteConfig};
use crate::report::{render, Format, RunConfig, RunReport};
use crate::sampling::Grid;
use crate::scenarios::{lookup, matching, registry, Scenario};
use crate::theorem_gate::{evaluate, GateConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_OUT_OF_CHART: i32 = 3;
pub const EXIT_INDETERMINATE: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "graph-rigidity", version, about = "Geometry of graphs of maps and rigidity checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List built-in scenarios with their declared properties.
    List {
        /// Only scenarios whose name contains this text.
        #[arg(long = "match")]
        pattern: Option<String>,
    },
    /// Per-point geometry, identity suite, hypotheses and verdict.
    Report(RunArgs),
    /// Run the identity suite; exit 1 if any check fails.
    VerifyIdentities(RunArgs),
    /// Check the rigidity hypotheses and classify the map.
    CheckTheorem(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    /// JSON file with `RunConfig` fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Points per axis, `N` or `NxN` (one entry per axis).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Finite-difference step.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long = "kappa-margin")]
    pub kappa_margin: Option<f64>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    /// Worker threads for grid sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Record wall-clock time in the report (makes it non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn run(e: GeomError) -> Self {
        let code = match e {
            GeomError::OutOfChart { .. } => EXIT_OUT_OF_CHART,
            GeomError::UnknownScenario(_) => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn parse_grid(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::usage(format!("invalid --grid `{text}` (expected N or NxN)")))
}

/// Config file (if any) with command-line overrides applied.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(|e| CliError::usage(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = &args.scenario {
        cfg.scenario = Some(s.clone());
    }
    if let Some(g) = &args.grid {
        cfg.grid.resolution = Some(parse_grid(g)?);
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.h {
        cfg.h = v;
    }
    if args.c.is_some() {
        cfg.c = args.c;
    }
    if args.sigma.is_some() {
        cfg.sigma = args.sigma;
    }
    if args.kappa_margin.is_some() {
        cfg.kappa_margin = args.kappa_margin;
    }
    for t in &args.tol {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("invalid --tol `{t}` (expected name=value)")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::usage(format!("invalid tolerance value in `{t}`")))?;
        cfg.tolerances.insert(name.to_string(), value);
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.display().to_string());
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn scenario_and_grid(cfg: &RunConfig) -> Result<(Scenario, Grid), CliError> {
    let name = cfg
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::usage("--scenario is required"))?;
    let s = lookup(name).map_err(CliError::run)?;
    let m = s.dims().0;
    let res = cfg.grid.resolution.clone().unwrap_or_else(|| vec![s.resolution]);
    if res.len() != 1 && res.len() != m {
        return Err(CliError::usage(format!("--grid needs 1 or {m} entries for `{name}`")));
    }
    let grid = s
        .grid(cfg.grid.sample_box.as_ref(), &res)
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok((s, grid))
}

fn gate_config(cfg: &RunConfig, s: &Scenario) -> GateConfig {
    let mut g = GateConfig::new(cfg.sigma.unwrap_or(s.sigma));
    if let Some(k) = cfg.kappa_margin {
        g.kappa_margin = k;
    }
    g.seed = cfg.seed;
    g.tolerances = cfg.gate_tolerances();
    g
}

/// Runs one of the report-producing commands and returns the report with its exit code.
pub fn execute(command: &str, cfg: &RunConfig, timing: bool) -> Result<(RunReport, i32), CliError> {
    let start = Instant::now();
    let (s, grid) = scenario_and_grid(cfg)?;
    let gate = gate_config(cfg, &s);
    let suite = SuiteConfig {
        seed: cfg.seed,
        h: cfg.h,
        c: cfg.c,
        sigma: cfg.sigma,
        tolerances: cfg.identity_tolerances(),
        ..SuiteConfig::default()
    };
    let mut report = RunReport {
        command: command.to_string(),
        config: cfg.clone(),
        points: Vec::new(),
        identities: Vec::new(),
        hypotheses: None,
        classification: None,
        runtime_seconds: None,
    };
    let code = match command {
        "verify-identities" => {
            report.identities = verify_scenario_on(&s, &grid, &gate, &suite).map_err(CliError::run)?;
            if report.identities.iter().all(|r| r.pass) {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        "check-theorem" | "report" => {
            let ev = evaluate(&s.map, &grid, &gate).map_err(CliError::run)?;
            let verdict = ev.classification.verdict;
            report.points = ev.records;
            report.hypotheses = Some(ev.hypotheses);
            report.classification = Some(ev.classification);
            if command == "report" {
                report.identities = verify_scenario_on(&s, &grid, &gate, &suite).map_err(CliError::run)?;
                EXIT_OK
            } else {
                verdict.exit_code()
            }
        }
        other => return Err(CliError::usage(format!("unknown command `{other}`"))),
    };
    if timing {
        report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    Ok((report, code))
}

/// Scenario table: one header line, then one row per scenario.
pub fn catalog(scenarios: &[Scenario]) -> String {
    let mut out = format!(
        "{:<20} {:<6} {:<9} {:<17} {:<36} {}\n",
        "name", "dims", "minimal", "totally-geodesic", "verdict", "summary"
    );
    for s in scenarios {
        let (m, n) = s.dims();
        out.push_str(&format!(
            "{:<20} {:<6} {:<9} {:<17} {:<36} {}\n",
            s.name,
            format!("{m}->{n}"),
            s.expected.minimal.label(),
            s.expected.totally_geodesic.label(),
            s.expected.verdict.map_or("-", |v| v.label()),
            s.summary
        ));
    }
    out
}

fn summary_line(report: &RunReport) -> String {
    let failed: Vec<&str> = report
        .identities
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    let mut parts = Vec::new();
    if !report.identities.is_empty() {
        parts.push(format!(
            "identities: {} run, {} failed{}",
            report.identities.len(),
            failed.len(),
            if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
        ));
    }
    if let Some(c) = &report.classification {
        let mut line = format!("verdict: {} ({})", c.verdict.label(), c.scope);
        if !c.reasons.is_empty() {
            line.push_str(&format!("; {}", c.reasons.join("; ")));
        }
        parts.push(line);
    }
    parts.join("\n")
}

fn run_parsed(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (name, args) = match cli.command {
        Command::List { pattern } => {
            let list = match pattern {
                Some(p) => matching(&p),
                None => registry(),
            };
            write!(out, "{}", catalog(&list)).map_err(|e| CliError::usage(e.to_string()))?;
            return Ok(EXIT_OK);
        }
        Command::Report(a) => ("report", a),
        Command::VerifyIdentities(a) => ("verify-identities", a),
        Command::CheckTheorem(a) => ("check-theorem", a),
    };
    let cfg = resolve_config(&args)?;
    let (report, code) = match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| execute(name, &cfg, args.timing))?
        }
        None => execute(name, &cfg, args.timing)?,
    };
    let text = render(&report, cfg.format);
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError {
                code: EXIT_USAGE,
                message: format!("cannot write {path}: {e}"),
            })?;
            let _ = writeln!(err, "{}", summary_line(&report));
        }
        None => {
            let _ = write!(out, "{text}");
            let _ = writeln!(err, "{}", summary_line(&report));
        }
    }
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match run_parsed(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
