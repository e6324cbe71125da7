//! `finsler`: curvature reports, component tables, classification and the
//! acceptance suite for (α,β)-Finsler metrics.

mod config;
mod report;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use finsler_core::catalog::NAMES;
use finsler_core::spray::SprayRoute;
use finsler_core::validation::{run_criterion, Bound, CRITERIA, DEFAULT_SEED};

use config::{parse_params, resolve, ConfigError, RunConfig};
use table::{Quantity, QUANTITIES};

#[derive(Parser)]
#[command(name = "finsler", version, about = "Curvature of (α,β)-Finsler metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-sample curvature records plus the classification, as JSON.
    Report(RunArgs),
    /// One quantity over the sample grid, as CSV.
    Table {
        #[command(flatten)]
        run: RunArgs,
        /// One of a, b_form, gamma, r, s, r_i, s_i, bnorm, Q, G, B, E, L, D, R, K, S, H, sigma.
        #[arg(long, short)]
        quantity: String,
    },
    /// Predicate verdicts and the metric class, as JSON.
    Classify(RunArgs),
    /// Runs the acceptance criteria; exits 1 on any failure.
    Check {
        /// Seed for the randomized invariant samples.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Run only these criteria (1-based, repeatable).
        #[arg(long)]
        criterion: Vec<u8>,
        /// Print every check, not only failures.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Lists catalog metrics and their parameters.
    Catalog,
}

#[derive(Args)]
struct RunArgs {
    /// Catalog metric name.
    #[arg(long, conflicts_with = "config")]
    metric: Option<String>,
    /// Catalog parameter as name=value (repeatable).
    #[arg(long = "param", requires = "metric")]
    params: Vec<String>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long)]
    per_axis: Option<usize>,
    /// Number of sampled directions.
    #[arg(long)]
    directions: Option<usize>,
    /// Spray route for curvature.
    #[arg(long, value_parser = parse_route)]
    route: Option<SprayRoute>,
}

fn parse_route(s: &str) -> Result<SprayRoute, String> {
    match s {
        "generic" => Ok(SprayRoute::Generic),
        "alpha_beta" => Ok(SprayRoute::AlphaBeta),
        other => Err(format!("unknown route `{other}` (generic, alpha_beta)")),
    }
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match (&self.metric, &self.config) {
            (Some(name), None) => RunConfig::for_catalog(name, parse_params(&self.params)?),
            (None, Some(path)) => RunConfig::load(path)?,
            _ => return Err(ConfigError::Usage("give either --metric or --config".into())),
        };
        if let Some(p) = self.per_axis {
            cfg.grid.per_axis = p;
        }
        if let Some(d) = self.directions {
            cfg.directions = d;
        }
        if let Some(r) = self.route {
            cfg.route = r;
        }
        if self.out.is_some() {
            cfg.output.clone_from(&self.out);
        }
        Ok(cfg)
    }
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run_check(seed: u64, only: &[u8], verbose: bool) -> Result<bool> {
    let ids: Vec<u8> = if only.is_empty() { (1..=CRITERIA).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|&&id| id == 0 || id > CRITERIA) {
        return Err(ConfigError::Usage(format!("criterion {bad} is not in 1..={CRITERIA}")).into());
    }
    let mut all_ok = true;
    for id in ids {
        let r = run_criterion(id, seed);
        all_ok &= r.passed();
        if verbose {
            println!("criterion {:>2} {} {}", r.id, if r.passed() { "PASS" } else { "FAIL" }, r.title);
            for c in &r.checks {
                let op = match c.bound {
                    Bound::Below => "<",
                    Bound::Above => ">",
                };
                let mark = if c.passed { "ok" } else { "FAIL" };
                println!("    [{mark}] {}: {:.3e} {op} {:.1e}", c.label, c.value, c.threshold);
            }
            if let Some(e) = &r.error {
                println!("    error: {e}");
            }
        } else {
            println!("{}", r.summary());
        }
    }
    let word = if all_ok { "all criteria passed" } else { "some criteria failed" };
    println!("{word}");
    Ok(all_ok)
}

fn list_catalog() -> Result<()> {
    for name in NAMES {
        let e = finsler_core::catalog::get_default(name)?;
        let specs = finsler_core::catalog::param_specs(name)?;
        let params: Vec<String> = specs
            .iter()
            .map(|p| format!("{}={} ({})", p.name, p.default, p.range))
            .collect();
        println!("{name:<20} n={} {}  {}", e.metric.n, e.description, params.join(", "));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Report(args) => {
            let cfg = args.config()?;
            let r = resolve(&cfg)?;
            let rep = report::build_report(&r)?;
            write_json(&rep, cfg.output.as_deref())?;
        }
        Command::Classify(args) => {
            let cfg = args.config()?;
            let r = resolve(&cfg)?;
            let out = report::build_classification(&r)?;
            write_json(&out, cfg.output.as_deref())?;
        }
        Command::Table { run, quantity } => {
            let q: Quantity = quantity.parse()?;
            let cfg = run.config()?;
            let r = resolve(&cfg)?;
            let w = writer(cfg.output.as_deref())?;
            table::write_table(q, &r, w)?;
        }
        Command::Check { seed, criterion, verbose } => return run_check(seed, &criterion, verbose),
        Command::Catalog => list_catalog()?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(ConfigError::UnknownQuantity(_)) = e.downcast_ref::<ConfigError>() {
                eprintln!("quantities: {}", QUANTITIES.join(", "));
            }
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
