//! `tei` — estimate absolute technical efficiency indices and decompose TFP
//! growth from firm-year panel data.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 the optimizer did
//! not converge (outputs are still written, flagged in fit.json).

mod chart;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use tei_core::Result;

#[derive(Parser)]
#[command(
    name = "tei",
    version,
    about = "Absolute technical efficiency and TFP growth from a censored translog input distance function"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the model; writes fit.json and prints the coefficient table
    Fit(CommonArgs),
    /// Run the nested specification tests; writes tests.json
    Test(CommonArgs),
    /// Per-observation efficiency indices and elasticities; writes efficiency.csv
    Efficiency(CommonArgs),
    /// TFP-growth decomposition; writes tfpg.csv
    Tfpg(CommonArgs),
    /// Generate a synthetic panel; with --reps N > 1 also run a recovery study
    Simulate(CommonArgs),
    /// Fit, test, efficiency, and tfpg in a single run
    Report(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Input CSV (header: firm,year,lf, then output and input columns)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Flat key = value configuration file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: out)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Disable multiplicative heteroskedasticity
    #[arg(long)]
    no_het: bool,
    /// Include the 0.5 t^2 trend term
    #[arg(long)]
    trend_squared: bool,
    /// Drop firm, Brexit, and Covid dummies
    #[arg(long)]
    no_dummies: bool,
    /// Report efficiency indices above one as exactly one (flagged)
    #[arg(long)]
    clamp_tei: bool,
    /// Emit SVG charts next to the CSV outputs
    #[arg(long)]
    charts: bool,
    /// RNG seed (simulate)
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications (simulate)
    #[arg(long)]
    reps: Option<usize>,
    /// Firm id column name
    #[arg(long)]
    firm_col: Option<String>,
    /// Year column name
    #[arg(long)]
    year_col: Option<String>,
    /// Load factor column name
    #[arg(long)]
    lf_col: Option<String>,
    /// Output column name
    #[arg(long)]
    output_col: Option<String>,
    /// Comma-separated input column names
    #[arg(long)]
    input_cols: Option<String>,
    /// Comma-separated firms subject to the Brexit dummy
    #[arg(long)]
    brexit_firms: Option<String>,
    /// Firm count (simulate)
    #[arg(long)]
    n_firms: Option<usize>,
    /// Year count (simulate)
    #[arg(long)]
    n_years: Option<usize>,
    /// Noise scale (simulate)
    #[arg(long)]
    sigma: Option<f64>,
    /// Target censored fraction (simulate)
    #[arg(long)]
    censor_target: Option<f64>,
}

fn resolve(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &args.out_dir {
        cfg.out_dir = p.clone();
    }
    if args.no_het {
        cfg.het = false;
    }
    if args.trend_squared {
        cfg.trend_squared = true;
    }
    if args.no_dummies {
        cfg.dummies = false;
    }
    if args.clamp_tei {
        cfg.clamp_tei = true;
    }
    if args.charts {
        cfg.charts = true;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(v) = &args.firm_col {
        cfg.schema.firm = v.clone();
    }
    if let Some(v) = &args.year_col {
        cfg.schema.year = v.clone();
    }
    if let Some(v) = &args.lf_col {
        cfg.schema.lf = v.clone();
    }
    if let Some(v) = &args.output_col {
        cfg.schema.output = v.clone();
    }
    if let Some(v) = &args.input_cols {
        cfg.schema.inputs = v.split(',').map(|s| s.trim().to_string()).collect();
    }
    if let Some(v) = &args.brexit_firms {
        cfg.rules.brexit_firms = v
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
    }
    if let Some(n) = args.n_firms {
        cfg.n_firms = n;
    }
    if let Some(n) = args.n_years {
        cfg.n_years = n;
    }
    if let Some(s) = args.sigma {
        cfg.sigma = s;
    }
    if let Some(c) = args.censor_target {
        cfg.censor_target = Some(c);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8> {
    match &cli.command {
        Cmd::Fit(a) => commands::cmd_fit(&resolve(a)?),
        Cmd::Test(a) => commands::cmd_test(&resolve(a)?),
        Cmd::Efficiency(a) => commands::cmd_efficiency(&resolve(a)?),
        Cmd::Tfpg(a) => commands::cmd_tfpg(&resolve(a)?),
        Cmd::Simulate(a) => commands::cmd_simulate(&resolve(a)?),
        Cmd::Report(a) => commands::cmd_report(&resolve(a)?),
    }
}

fn main() -> ExitCode {
    // usage errors are input errors (exit 1); --help/--version exit 0
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
