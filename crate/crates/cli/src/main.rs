//! Command-line front end: rate curves, thresholds, upper bounds,
//! finite-key runs, small-block simulations, and the self-test suites.
//! Output goes to stdout or a file as CSV or JSON; identical configuration
//! and seed reproduce identical bytes.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};

use commands::CmdError;
use config::{describe, Format, RawConfig};

#[derive(Parser)]
#[command(
    name = "qkdrate",
    about = "Secret-key rates and noise thresholds for one-way QKD protocols",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Protocol: six-state, bb84, or b92.
    #[arg(long)]
    protocol: Option<String>,

    /// Curve parameter: QBER for six-state/bb84, depolarizing delta for b92.
    #[arg(long = "Q")]
    q_point: Option<f64>,

    /// Curve parameter range start:stop:step (endpoints inclusive).
    #[arg(long = "Q-range")]
    q_range: Option<String>,

    /// Fixed bit-flip pre-processing probability.
    #[arg(long = "q")]
    flip: Option<f64>,

    /// Optimize the pre-processing flip probability per point.
    #[arg(long = "optimize-q")]
    optimize_q: bool,

    /// B92 signal amplitude.
    #[arg(long)]
    alpha: Option<f64>,

    /// Block length for finite-key commands.
    #[arg(long)]
    n: Option<usize>,

    /// Security parameter.
    #[arg(long)]
    eps: Option<f64>,

    /// Seed for every randomized step.
    #[arg(long)]
    seed: Option<u64>,

    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<std::path::PathBuf>,

    /// Output format: csv or json.
    #[arg(long)]
    format: Option<String>,

    /// Optional key=value configuration file; flags take precedence.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Lower-bound secret-key rates over a point or range.
    Rate(CommonOpts),
    /// Positive-rate noise thresholds with and without pre-processing.
    Threshold(CommonOpts),
    /// Classical upper-bound threshold (six-state and bb84).
    Upper(CommonOpts),
    /// Finite key length for (protocol, Q, n, eps).
    Finite(CommonOpts),
    /// Small-block end-to-end run with a full transcript.
    Simulate(CommonOpts),
    /// Invariant self-test suites.
    Selftest(CommonOpts),
}

fn resolve(opts: &CommonOpts) -> Result<config::RunConfig, CmdError> {
    let mut raw = RawConfig {
        protocol: opts.protocol.clone(),
        q_point: opts.q_point,
        q_range: opts.q_range.clone(),
        flip: opts.flip,
        optimize_q: opts.optimize_q,
        alpha: opts.alpha,
        n: opts.n,
        eps: opts.eps,
        seed: opts.seed,
        out: opts.out.clone(),
        format: opts.format.clone(),
    };
    if let Some(path) = &opts.config {
        raw.merge_file(path)
            .map_err(|e| CmdError::Config(e.to_string()))?;
    }
    raw.resolve().map_err(|e| CmdError::Config(e.to_string()))
}

fn run() -> Result<(), CmdError> {
    let cli = Cli::parse();
    let (name, opts) = match &cli.command {
        Command::Rate(o) => ("rate", o),
        Command::Threshold(o) => ("threshold", o),
        Command::Upper(o) => ("upper", o),
        Command::Finite(o) => ("finite", o),
        Command::Simulate(o) => ("simulate", o),
        Command::Selftest(o) => ("selftest", o),
    };
    let cfg = resolve(opts)?;
    eprintln!("{}", describe(name, &cfg));

    let (table, selftest_failures) = match &cli.command {
        Command::Rate(_) => (commands::cmd_rate(&cfg)?, 0),
        Command::Threshold(_) => (commands::cmd_threshold(&cfg)?, 0),
        Command::Upper(_) => (commands::cmd_upper(&cfg)?, 0),
        Command::Finite(_) => (commands::cmd_finite(&cfg)?, 0),
        Command::Simulate(_) => (commands::cmd_simulate(&cfg)?, 0),
        Command::Selftest(_) => commands::cmd_selftest(&cfg)?,
    };
    let content = match cfg.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    output::emit(&content, cfg.out.as_deref())
        .map_err(|e| CmdError::Config(format!("cannot write output: {e}")))?;
    if selftest_failures > 0 {
        return Err(CmdError::Selftest(format!(
            "{selftest_failures} case(s) failed"
        )));
    }
    Ok(())
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
