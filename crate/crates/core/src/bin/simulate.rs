//! Experiment runner: loads a configuration, applies flag overrides, runs
//! the sweep, and writes the CSV.
//!
//! Exit codes: 0 success, 2 configuration error, 3 when more than 5% of
//! trials failed outright.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hbf_ee::config::{
    format_config, load_config, ExperimentConfig, Method, Pursuit, SweepKind,
};
use hbf_ee::sim::{emit_csv, run_sweep};

#[derive(Parser, Debug)]
#[command(
    name = "simulate",
    about = "Monte-Carlo sweeps of energy-efficient RF-chain selection and hybrid beamforming"
)]
struct Cli {
    /// Configuration file of `key = value` lines; defaults apply if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep kind: snr, ntx, or iterations.
    #[arg(long)]
    sweep: Option<String>,
    /// Monte-Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Master RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of dm,bf,digital,analogue.
    #[arg(long)]
    methods: Option<String>,
    /// Pursuit flavour for the beamformer factorization: omp or gp.
    #[arg(long)]
    pursuit: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &cli.sweep {
        cfg.sweep = SweepKind::parse(s).ok_or_else(|| format!("unknown sweep `{s}`"))?;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(list) = &cli.methods {
        let mut methods = Vec::new();
        for tok in list.split(',') {
            let tok = tok.trim();
            methods.push(Method::parse(tok).ok_or_else(|| format!("unknown method `{tok}`"))?);
        }
        cfg.methods = methods;
    }
    if let Some(p) = &cli.pursuit {
        cfg.pursuit = Pursuit::parse(p).ok_or_else(|| format!("unknown pursuit `{p}`"))?;
    }
    if let Some(out) = &cli.out {
        cfg.output_path = out.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve_config(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("configuration error: {msg}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        print!("{}", format_config(&cfg));
        return ExitCode::SUCCESS;
    }
    let report = match run_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("sweep failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = emit_csv(&report.rows, &cfg.output_path) {
        eprintln!("cannot write results: {e}");
        return ExitCode::FAILURE;
    }
    eprintln!(
        "wrote {} rows to {} ({} trials: {} failed, {} infeasible)",
        report.rows.len(),
        cfg.output_path.display(),
        report.total_trials,
        report.failed_trials,
        report.infeasible_trials,
    );
    if report.excessive_failures() {
        eprintln!("more than 5% of trials failed; results are unreliable");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
