//! `lqglab` command-line driver.
//!
//! Subcommands:
//!   run          execute a suite of quantitative checks, write a manifest
//!                (JSON) plus per-check report/plot CSVs
//!   list-checks  print every registered check with tolerance and citation
//!   sample       write one raw draw (field, chain, curve, cone-path) as CSV
//!   version      print the tool name and version
//!
//! Exit codes: 0 when everything passed (or there was nothing to do),
//! 1 when a check ran to completion but failed its tolerance, 2 for invalid
//! parameters, unknown checks, unreadable configs, or unwritable outputs.

use clap::{Args, Parser, Subcommand};
use lqglab::rng::task_rng;
use lqglab::{beaded, cone, sle, surface};
use lqglab::{Error, GridSpec, Result, SurfaceKind};
use lqglab_cli::checks::{self, CheckCtx};
use lqglab_cli::config::{self, Overrides, WORKERS_ENV};
use lqglab_cli::report::{self, CheckSection, RunManifest, ToolInfo};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const TOOL_NAME: &str = "lqglab";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = TOOL_NAME, version = VERSION, about = "Monte Carlo laboratory for random-surface, SLE, and cone-motion laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run quantitative checks and write manifest + CSV outputs
    Run(RunArgs),
    /// List every available check with its tolerance and citation
    ListChecks,
    /// Write one raw draw as CSV, for eyeballing
    Sample(SampleArgs),
    /// Print the tool name and version
    Version,
}

#[derive(Args)]
struct RunArgs {
    /// Path to a key = value config file (flags override it)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coupling constant, in (0, 2)
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated surface weights, e.g. 2.0,0.5
    #[arg(long)]
    weights: Option<String>,
    /// Field grid as NXxNY:TCUT, e.g. 256x16:6.0
    #[arg(long)]
    grid: Option<String>,
    /// Base sample count per check
    #[arg(long)]
    n_samples: Option<u64>,
    /// Master seed (required here or in the config file; no default)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count (the LQGLAB_WORKERS env var overrides this)
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for manifest.json, reports.csv, and plot CSVs
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated check names; empty string runs nothing
    #[arg(long)]
    suite: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    /// What to draw: field | chain | curve | cone-path
    #[arg(long)]
    what: String,
    /// Seed for the draw
    #[arg(long)]
    seed: u64,
    /// Coupling constant, in (0, 2)
    #[arg(long)]
    gamma: Option<f64>,
    /// Surface weight (field default 2.0, chain default 0.5)
    #[arg(long)]
    w: Option<f64>,
    /// Field grid as NXxNY:TCUT
    #[arg(long)]
    grid: Option<String>,
    /// Cut mass for chain draws
    #[arg(long)]
    t: Option<f64>,
    /// Bead-mass cutoff for chain draws
    #[arg(long)]
    cutoff: Option<f64>,
    /// Curve diffusivity (default gamma^2)
    #[arg(long)]
    kappa: Option<f64>,
    /// Left force-point weight for curve draws
    #[arg(long)]
    rho_minus: Option<f64>,
    /// Right force-point weight for curve draws
    #[arg(long)]
    rho_plus: Option<f64>,
    /// Driving steps for curve draws
    #[arg(long)]
    n_steps: Option<usize>,
    /// Time step for curve and cone-path draws
    #[arg(long)]
    dt: Option<f64>,
    /// Number of cone paths
    #[arg(long)]
    n_paths: Option<u64>,
    /// Cone-path start point, x coordinate
    #[arg(long)]
    x0: Option<f64>,
    /// Cone-path start point, y coordinate
    #[arg(long)]
    y0: Option<f64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> Result<bool> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::ListChecks => {
            cmd_list_checks();
            Ok(true)
        }
        Command::Sample(args) => {
            cmd_sample(args)?;
            Ok(true)
        }
        Command::Version => {
            println!("{TOOL_NAME} {VERSION}");
            Ok(true)
        }
    }
}

fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::param(format!("{WORKERS_ENV} must be a nonnegative integer, got '{s}'"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::param(format!("{WORKERS_ENV}: {e}"))),
    }
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::param(format!("cannot read config file {}: {e}", path.display()))
            })?;
            Some(config::parse_config_file(&text)?)
        }
        None => None,
    };
    let flags = Overrides {
        gamma: args.gamma,
        weights: args
            .weights
            .as_deref()
            .map(config::parse_weights)
            .transpose()?,
        grid: args.grid.as_deref().map(config::parse_grid).transpose()?,
        n_samples: args.n_samples,
        seed: args.seed,
        workers: args.workers,
        output_dir: args.output_dir,
        suite: args.suite.as_deref().map(config::parse_suite),
    };
    let default_suite: Vec<&str> = checks::registry().iter().map(|c| c.name).collect();
    let cfg = config::resolve(file, flags, env_workers()?, &default_suite)?;
    for name in &cfg.suite {
        if checks::find(name).is_none() {
            return Err(Error::param(format!(
                "unknown check '{name}'; run `{TOOL_NAME} list-checks` for the available names"
            )));
        }
    }

    let ctx = CheckCtx {
        gamma: cfg.gamma,
        weights: cfg.weights.clone(),
        grid: cfg.grid,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        workers: cfg.workers,
    };
    let started_at = report::unix_timestamp();
    let mut sections = Vec::new();
    let mut plots = Vec::new();
    for name in &cfg.suite {
        let spec = checks::find(name).expect("suite validated above");
        eprintln!("running {name} ...");
        let out = (spec.run)(&ctx)?;
        for r in &out.reports {
            let word = if r.passed() { "pass" } else { "FAIL" };
            let against = match r.target {
                Some(t) => format!("target={t:.6e} tol={:.3e}", r.tolerance),
                None => format!("threshold={:.3e}", r.tolerance),
            };
            println!("  {word} {:<32} estimate={:.6e} {against}", r.name, r.estimate);
        }
        sections.push(CheckSection {
            check: name.clone(),
            reports: out.reports,
        });
        plots.extend(out.plots.into_iter().map(|p| (name.clone(), p)));
    }
    let all_passed = sections
        .iter()
        .all(|s| s.reports.iter().all(|r| r.passed()));
    let manifest = RunManifest {
        tool: ToolInfo {
            name: TOOL_NAME,
            version: VERSION,
        },
        started_at,
        finished_at: report::unix_timestamp(),
        config: cfg.clone(),
        checks: sections,
        all_passed,
    };
    let manifest_path = report::write_outputs(&cfg, &manifest, &plots)?;
    println!(
        "{}",
        if all_passed {
            "all checks passed"
        } else {
            "FAIL: at least one check missed its tolerance"
        }
    );
    println!("manifest: {}", manifest_path.display());
    Ok(all_passed)
}

fn cmd_list_checks() {
    for c in checks::registry() {
        println!("{}  (tolerance {})", c.name, c.default_tolerance);
        println!("    {}", c.citation);
    }
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let gamma = args.gamma.unwrap_or(std::f64::consts::SQRT_2);
    let text = match args.what.as_str() {
        "field" => sample_field(&args, gamma)?,
        "chain" => sample_chain(&args, gamma)?,
        "curve" => sample_curve(&args, gamma)?,
        "cone-path" => sample_cone_paths(&args, gamma)?,
        other => {
            return Err(Error::param(format!(
                "sample --what must be one of field, chain, curve, cone-path; got '{other}'"
            )))
        }
    };
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::param(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sample_field(args: &SampleArgs, gamma: f64) -> Result<String> {
    let w = args.w.unwrap_or(2.0);
    let grid = match &args.grid {
        Some(s) => config::parse_grid(s)?,
        None => GridSpec::new(3.0, 64, 8)?,
    };
    let field = surface::sample_surface(
        SurfaceKind::ThickDisk,
        gamma,
        w,
        &grid,
        Some((-1.0, 1.0)),
        args.seed,
    )?;
    let mut s = String::new();
    let _ = writeln!(s, "# kind: thick_disk");
    let _ = writeln!(s, "# gamma: {gamma}");
    let _ = writeln!(s, "# w: {w}");
    let _ = writeln!(s, "# c: {}", field.c_const);
    let _ = writeln!(s, "# window_mass: {}", field.importance_weight);
    let _ = writeln!(s, "ix,iy,x_left,value");
    for ix in 0..grid.nx {
        for iy in 0..grid.ny {
            let _ = writeln!(
                s,
                "{ix},{iy},{},{}",
                grid.x_left(ix),
                field.cell_value(ix, iy)
            );
        }
    }
    Ok(s)
}

fn sample_chain(args: &SampleArgs, gamma: f64) -> Result<String> {
    let w = args.w.unwrap_or(0.5);
    let t = args.t.unwrap_or(1.0);
    let cutoff = args.cutoff.unwrap_or(1e-3);
    let chain = beaded::sample_levy_marks(w, gamma, t, cutoff, &mut task_rng(args.seed, 0))?;
    let mut s = String::new();
    let _ = writeln!(s, "# gamma: {gamma}");
    let _ = writeln!(s, "# w: {w}");
    let _ = writeln!(s, "# t: {t}");
    let _ = writeln!(s, "# cutoff: {cutoff}");
    let _ = writeln!(s, "u,left_len,right_len");
    for b in &chain.beads {
        match b.right_len {
            Some(r) => {
                let _ = writeln!(s, "{},{},{r}", b.u, b.left_len);
            }
            None => {
                let _ = writeln!(s, "{},{},", b.u, b.left_len);
            }
        }
    }
    Ok(s)
}

fn sample_curve(args: &SampleArgs, gamma: f64) -> Result<String> {
    let kappa = args.kappa.unwrap_or(gamma * gamma);
    let rho_minus = args.rho_minus.unwrap_or(0.0);
    let rho_plus = args.rho_plus.unwrap_or(0.0);
    let n_steps = args.n_steps.unwrap_or(2000);
    let dt = args.dt.unwrap_or(1e-4);
    let driving = sle::sample_driving(kappa, rho_minus, rho_plus, n_steps, dt, args.seed)?;
    let curve = sle::trace_curve(&driving)?;
    let mut s = String::new();
    let _ = writeln!(s, "# kappa: {kappa}");
    let _ = writeln!(s, "# rho_minus: {rho_minus}");
    let _ = writeln!(s, "# rho_plus: {rho_plus}");
    let _ = writeln!(s, "# dt: {dt}");
    let _ = writeln!(s, "t,re,im");
    for (k, z) in curve.points.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", k as f64 * dt, z.re, z.im);
    }
    Ok(s)
}

fn sample_cone_paths(args: &SampleArgs, gamma: f64) -> Result<String> {
    let cov = cone::CovSpec::new(gamma)?;
    let dt = args.dt.unwrap_or(1e-4);
    let n_paths = args.n_paths.unwrap_or(100);
    let start = (args.x0.unwrap_or(1.0), args.y0.unwrap_or(1.0));
    let mut s = String::new();
    let _ = writeln!(s, "# gamma: {gamma}");
    let _ = writeln!(s, "# start: {} {}", start.0, start.1);
    let _ = writeln!(s, "# dt: {dt}");
    let _ = writeln!(s, "path,exit_x,exit_y,exit_time,steps");
    for i in 0..n_paths {
        let p = cone::sample_cone_path(start, &cov, dt, args.seed.wrapping_add(i))?;
        let _ = writeln!(
            s,
            "{i},{},{},{},{}",
            p.exit_point.0, p.exit_point.1, p.exit_time, p.steps
        );
    }
    Ok(s)
}
