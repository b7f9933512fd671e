//! Monte-Carlo experiment harness.
//!
//! A sweep evaluates every requested strategy on the *same* channel
//! realizations (paired trials), aggregates per-trial energy and spectral
//! efficiency into means and standard errors, and emits one CSV row per
//! (sweep value, method). Each trial draws its randomness from a counter
//! substream of the master seed, so results are bit-identical for any
//! worker count and the trial set is extensible without reshuffling.

use std::io::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{
    analogue_baseline, brute_force_select, digital_baseline, dinkelbach_select, StrategyOutcome,
};
use crate::channel::generate_channel;
use crate::config::{ExperimentConfig, Method, SweepKind, SystemConfig};
use crate::dinkelbach::{run_dinkelbach, DEFAULT_I_MAX};
use crate::error::{Error, Result};
use crate::hbf::PursuitOptions;
use crate::power::PowerModel;

/// One aggregated output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// The swept quantity's value (SNR in dB, or antenna count).
    pub sweep_value: f64,
    pub method: Method,
    /// Mean energy efficiency, bits/Hz/J.
    pub ee_mean: f64,
    pub ee_stderr: f64,
    /// Mean spectral efficiency, bits/s/Hz.
    pub se_mean: f64,
    pub se_stderr: f64,
    /// Mean selected chain count.
    pub l_opt_mean: f64,
    /// Mean power consumption, W.
    pub power_mean: f64,
    /// Mean iteration count (ratio search) or design evaluations; in the
    /// iteration sweep this column is the iteration index itself.
    pub iterations_mean: f64,
    /// Trials contributing to this row after exclusions.
    pub trials_used: usize,
}

/// A finished sweep plus its failure accounting.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Trials that errored outright (channel, design, or evaluation).
    pub failed_trials: usize,
    /// Trials excluded because the selection missed the rate floor or the
    /// iteration cap.
    pub infeasible_trials: usize,
    /// Total trials attempted across all sweep points.
    pub total_trials: usize,
}

impl SweepReport {
    /// True when outright failures exceed the 5% abort threshold.
    pub fn excessive_failures(&self) -> bool {
        self.failed_trials * 20 > self.total_trials
    }
}

/// Per-trial, per-method sample.
#[derive(Debug, Clone, Copy)]
struct MethodSample {
    se: f64,
    ee: f64,
    l_opt: f64,
    power: f64,
    iterations: f64,
}

enum TrialResult<T> {
    Ok(T),
    Infeasible,
    Failed,
}

/// The RNG for trial `trial_idx` of sweep point `sweep_idx`: one fixed
/// counter stream of the master seed per (point, trial) pair.
fn trial_rng(seed: u64, sweep_idx: usize, trial_idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((sweep_idx as u64) << 32) ^ trial_idx as u64);
    rng
}

fn method_sample(outcome: &StrategyOutcome, iterations: f64) -> MethodSample {
    MethodSample {
        se: outcome.se,
        ee: outcome.ee,
        l_opt: outcome.l_opt as f64,
        power: outcome.total_power,
        iterations,
    }
}

fn run_standard_trial(
    sys: &SystemConfig,
    pm: &PowerModel,
    methods: &[Method],
    opts: &PursuitOptions,
    rng: &mut ChaCha8Rng,
) -> TrialResult<Vec<MethodSample>> {
    let chan = match generate_channel(sys, rng) {
        Ok(c) => c,
        Err(_) => return TrialResult::Failed,
    };
    let mut samples = Vec::with_capacity(methods.len());
    for &m in methods {
        let sample = match m {
            Method::Dm => match dinkelbach_select(&chan, pm, sys, DEFAULT_I_MAX, opts) {
                Ok((outcome, sel)) => {
                    if !sel.feasible {
                        return TrialResult::Infeasible;
                    }
                    if !sel.converged(sys.eps_outer) {
                        return TrialResult::Failed;
                    }
                    method_sample(&outcome, sel.trace.len() as f64)
                }
                Err(_) => return TrialResult::Failed,
            },
            Method::Bf => match brute_force_select(&chan, pm, sys, opts) {
                Ok(outcome) => method_sample(&outcome, outcome.design_evals as f64),
                Err(_) => return TrialResult::Failed,
            },
            Method::Digital => match digital_baseline(&chan, pm, sys) {
                Ok(outcome) => method_sample(&outcome, 1.0),
                Err(_) => return TrialResult::Failed,
            },
            Method::Analogue => match analogue_baseline(&chan, pm, sys) {
                Ok(outcome) => method_sample(&outcome, 1.0),
                Err(_) => return TrialResult::Failed,
            },
        };
        samples.push(sample);
    }
    TrialResult::Ok(samples)
}

/// Iteration-sweep trial: the ratio-search trace itself, one sample per
/// iteration (EE measured against transmit-side power, as the selection
/// optimizes it).
fn run_iteration_trial(
    sys: &SystemConfig,
    pm: &PowerModel,
    rng: &mut ChaCha8Rng,
) -> TrialResult<Vec<MethodSample>> {
    let chan = match generate_channel(sys, rng) {
        Ok(c) => c,
        Err(_) => return TrialResult::Failed,
    };
    let sel = match run_dinkelbach(&chan, pm, sys, DEFAULT_I_MAX) {
        Ok(s) => s,
        Err(_) => return TrialResult::Failed,
    };
    if !sel.feasible {
        return TrialResult::Infeasible;
    }
    if !sel.converged(sys.eps_outer) {
        return TrialResult::Failed;
    }
    let samples = sel
        .trace
        .iter()
        .map(|t| MethodSample {
            se: t.se,
            ee: if t.tx_pow > 0.0 { t.se / t.tx_pow } else { 0.0 },
            l_opt: t.active_count as f64,
            power: t.tx_pow,
            iterations: t.m as f64,
        })
        .collect();
    TrialResult::Ok(samples)
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

struct PointTally {
    rows: Vec<SweepRow>,
    failed: usize,
    infeasible: usize,
}

fn aggregate_standard(
    sweep_value: f64,
    methods: &[Method],
    trials: &[TrialResult<Vec<MethodSample>>],
) -> PointTally {
    let mut failed = 0;
    let mut infeasible = 0;
    let mut kept: Vec<&Vec<MethodSample>> = Vec::new();
    for t in trials {
        match t {
            TrialResult::Ok(s) => kept.push(s),
            TrialResult::Infeasible => infeasible += 1,
            TrialResult::Failed => failed += 1,
        }
    }
    let mut rows = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        let col = |f: fn(&MethodSample) -> f64| -> Vec<f64> {
            kept.iter().map(|s| f(&s[mi])).collect()
        };
        let (ee_mean, ee_stderr) = mean_stderr(&col(|s| s.ee));
        let (se_mean, se_stderr) = mean_stderr(&col(|s| s.se));
        let (l_opt_mean, _) = mean_stderr(&col(|s| s.l_opt));
        let (power_mean, _) = mean_stderr(&col(|s| s.power));
        let (iterations_mean, _) = mean_stderr(&col(|s| s.iterations));
        rows.push(SweepRow {
            sweep_value,
            method,
            ee_mean,
            ee_stderr,
            se_mean,
            se_stderr,
            l_opt_mean,
            power_mean,
            iterations_mean,
            trials_used: kept.len(),
        });
    }
    PointTally {
        rows,
        failed,
        infeasible,
    }
}

/// The iteration sweep reports one row per iteration index; trials that
/// converged early hold their final iterate for the remaining indices, so
/// every row averages the same trial set.
fn aggregate_iterations(
    sweep_value: f64,
    trials: &[TrialResult<Vec<MethodSample>>],
) -> PointTally {
    let mut failed = 0;
    let mut infeasible = 0;
    let mut kept: Vec<&Vec<MethodSample>> = Vec::new();
    for t in trials {
        match t {
            TrialResult::Ok(s) => kept.push(s),
            TrialResult::Infeasible => infeasible += 1,
            TrialResult::Failed => failed += 1,
        }
    }
    let max_len = kept.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(max_len);
    for m in 1..=max_len {
        let at = |trace: &Vec<MethodSample>| -> MethodSample { trace[(m - 1).min(trace.len() - 1)] };
        let col = |f: fn(&MethodSample) -> f64| -> Vec<f64> {
            kept.iter().map(|s| f(&at(s))).collect()
        };
        let (ee_mean, ee_stderr) = mean_stderr(&col(|s| s.ee));
        let (se_mean, se_stderr) = mean_stderr(&col(|s| s.se));
        let (l_opt_mean, _) = mean_stderr(&col(|s| s.l_opt));
        let (power_mean, _) = mean_stderr(&col(|s| s.power));
        rows.push(SweepRow {
            sweep_value,
            method: Method::Dm,
            ee_mean,
            ee_stderr,
            se_mean,
            se_stderr,
            l_opt_mean,
            power_mean,
            iterations_mean: m as f64,
            trials_used: kept.len(),
        });
    }
    PointTally {
        rows,
        failed,
        infeasible,
    }
}

/// Runs the configured sweep. Trials execute in parallel but aggregate in
/// trial-index order, so the report is identical for any worker count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let opts = PursuitOptions {
        pursuit: cfg.pursuit,
        gp_polish: cfg.gp_polish,
        dictionary: cfg.dictionary,
        grid_size: cfg.grid_size,
    };
    let points: Vec<(f64, SystemConfig)> = match cfg.sweep {
        SweepKind::Snr => cfg
            .snr_list_db
            .iter()
            .map(|&db| {
                let mut sys = cfg.base.clone();
                sys.set_snr_db(db);
                (db, sys)
            })
            .collect(),
        SweepKind::NTx => cfg
            .ntx_list
            .iter()
            .map(|&n| {
                let mut sys = cfg.base.clone();
                sys.n_tx = n;
                (n as f64, sys)
            })
            .collect(),
        SweepKind::Iterations => cfg
            .iter_snr_list_db
            .iter()
            .map(|&db| {
                let mut sys = cfg.base.clone();
                sys.set_snr_db(db);
                (db, sys)
            })
            .collect(),
    };

    let mut rows = Vec::new();
    let mut failed_trials = 0;
    let mut infeasible_trials = 0;
    let mut total_trials = 0;
    for (sweep_idx, (value, sys)) in points.iter().enumerate() {
        sys.validate()?;
        let trials: Vec<TrialResult<Vec<MethodSample>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial_idx| {
                let mut rng = trial_rng(cfg.seed, sweep_idx, trial_idx);
                match cfg.sweep {
                    SweepKind::Iterations => run_iteration_trial(sys, &cfg.power, &mut rng),
                    _ => run_standard_trial(sys, &cfg.power, &cfg.methods, &opts, &mut rng),
                }
            })
            .collect();
        total_trials += cfg.trials;
        let tally = match cfg.sweep {
            SweepKind::Iterations => aggregate_iterations(*value, &trials),
            _ => aggregate_standard(*value, &cfg.methods, &trials),
        };
        failed_trials += tally.failed;
        infeasible_trials += tally.infeasible;
        rows.extend(tally.rows);
    }
    Ok(SweepReport {
        rows,
        failed_trials,
        infeasible_trials,
        total_trials,
    })
}

/// Formats a float with exactly six significant digits, fixed-point where
/// the magnitude allows and scientific notation otherwise.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci
        .split_once('e')
        .expect("float scientific notation always contains an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..6).contains(&exp) {
        return format!("{mant}e{exp}");
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Renders rows as CSV text: pinned header, six significant digits, rows
/// stably ordered by ascending sweep value (preserving method order within
/// a value). Pure so emission is byte-reproducible.
pub fn format_csv(rows: &[SweepRow]) -> String {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value));
    let mut out = String::from(
        "sweep,method,ee_mean,ee_stderr,se_mean,se_stderr,lopt_mean,power_mean,iters_mean,trials\n",
    );
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_sig6(r.sweep_value),
            r.method.as_str(),
            fmt_sig6(r.ee_mean),
            fmt_sig6(r.ee_stderr),
            fmt_sig6(r.se_mean),
            fmt_sig6(r.se_stderr),
            fmt_sig6(r.l_opt_mean),
            fmt_sig6(r.power_mean),
            fmt_sig6(r.iterations_mean),
            r.trials_used,
        ));
    }
    out
}

/// Writes rows to `path` in the [`format_csv`] layout.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("no rows to emit"));
    }
    let text = format_csv(rows);
    let mut file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
