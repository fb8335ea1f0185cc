//! `modwave`: index sweeps, stability diagrams, Hill spectra, traveling
//! waves, resonance scans and the validation suite.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modwave::stokes::EquationKind;

use crate::commands::{CliError, Outcome};
use crate::config::{symbol_from_flags, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "modwave",
    version,
    about = "Modulational stability of periodic waves in nonlocal dispersive equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Sweep the instability indices over k (CSV).
    Index,
    /// Sign of ind over the (k, alpha) plane for m = 1 + |k|^alpha (CSV, SVG).
    Diagram,
    /// Floquet-Bloch spectra of a wave by Hill's method (CSV).
    Spectrum,
    /// Newton-Galerkin wave profile next to its Stokes expansion (CSV).
    Wave,
    /// Resonances in a k range and zero-amplitude eigenvalue collisions (CSV).
    Resonances,
    /// Run the acceptance checks; exit code 1 if any fails.
    Validate,
}

#[derive(Debug, Clone, Default, Args)]
struct Flags {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// kdv, bbm or boussinesq.
    #[arg(long, global = true, value_parser = parse_kind)]
    equation: Option<EquationKind>,
    /// Built-in symbol: bbm, boussinesq, whitham or fractional.
    #[arg(long, global = true)]
    symbol: Option<String>,
    /// Exponent of the fractional symbol (implies it when --symbol is absent).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Symbol as an expression in k, e.g. "1/(1+k^2)".
    #[arg(long, global = true)]
    expr: Option<String>,
    /// Expression parameter NAME=VALUE (repeatable).
    #[arg(long = "param", global = true, value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long, global = true)]
    k: Option<f64>,
    /// LO,HI
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    k_range: Option<(f64, f64)>,
    #[arg(long, global = true)]
    k_steps: Option<usize>,
    /// Wave amplitude.
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Floquet exponent.
    #[arg(long, global = true, allow_hyphen_values = true)]
    xi: Option<f64>,
    /// LO,HI
    #[arg(long, global = true, value_parser = parse_range, allow_hyphen_values = true)]
    xi_range: Option<(f64, f64)>,
    #[arg(long, global = true)]
    xi_steps: Option<usize>,
    /// Fourier truncation N (modes -N..N).
    #[arg(short = 'n', long = "n", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    newton_tol: Option<f64>,
    /// LO,HI
    #[arg(long, global = true, value_parser = parse_range)]
    alpha_range: Option<(f64, f64)>,
    #[arg(long, global = true)]
    alpha_steps: Option<usize>,
    /// Comma-separated equations for the diagram.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_kind)]
    diagram_equations: Option<Vec<EquationKind>>,
    /// Collision scan over modes -N_MAX..N_MAX.
    #[arg(long, global = true)]
    n_max: Option<i64>,
    /// Validation checks to run, by slug or number (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// CSV destination (stdout when absent, except for validate).
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    /// JSON summary destination.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
    /// SVG destination for the diagram.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<EquationKind, String> {
    s.parse().map_err(|e: modwave::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok((p(lo)?, p(hi)?))
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let v = value
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("'{value}': {e}"))?;
    Ok((name.trim().to_string(), v))
}

impl Flags {
    fn overrides(&self, base: &RunConfig) -> RunConfig {
        RunConfig {
            equation: self.equation,
            symbol: symbol_from_flags(
                base.symbol.as_ref(),
                self.symbol.as_deref(),
                self.alpha,
                self.expr.as_deref(),
                &self.params,
            ),
            k: self.k,
            k_range: self.k_range,
            k_steps: self.k_steps,
            a: self.a,
            xi: self.xi,
            xi_range: self.xi_range,
            xi_steps: self.xi_steps,
            n: self.n,
            newton_tol: self.newton_tol,
            alpha_range: self.alpha_range,
            alpha_steps: self.alpha_steps,
            diagram_equations: self.diagram_equations.clone(),
            n_max: self.n_max,
            only: self.only.clone(),
            output: self.output.clone(),
            summary: self.summary.clone(),
            svg: self.svg.clone(),
        }
    }
}

/// Caps the rayon pool at `MODWAVE_THREADS` when set.
fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MODWAVE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("MODWAVE_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let base = match &cli.flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = base.clone().merge(cli.flags.overrides(&base));
    if cli.flags.print_config {
        print!("{}", cfg.to_json());
        return Ok(true);
    }
    for w in cfg.validate()? {
        eprintln!("warning: {w}");
    }
    let outcome: Outcome = match cli.command {
        Command::Index => commands::index(&cfg)?,
        Command::Diagram => commands::diagram(&cfg)?,
        Command::Spectrum => commands::spectrum_cmd(&cfg)?,
        Command::Wave => commands::wave(&cfg)?,
        Command::Resonances => commands::resonances(&cfg)?,
        Command::Validate => commands::validate_cmd(&cfg)?,
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(report) = &outcome.report {
        print!("{report}");
        if let (Some(csv), Some(path)) = (&outcome.csv, &cfg.output) {
            output::write_to(Some(path), csv)?;
        }
    } else if let Some(csv) = &outcome.csv {
        output::write_to(cfg.output.as_deref(), csv)?;
    }
    if let Some(path) = &cfg.summary {
        output::write_to(Some(path), &output::json(&outcome.summary))?;
    }
    if let (Some(svg), Some(path)) = (&outcome.svg, &cfg.svg) {
        output::write_to(Some(path), svg)?;
    }
    Ok(outcome.success)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
