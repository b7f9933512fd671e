//! Energy-efficiency-optimal power allocation and RF-chain count selection.
//!
//! The EE maximization is a ratio of a concave rate to an affine power
//! consumption. It is solved as a sequence of parametric subproblems: for a
//! current ratio estimate `nu`, maximize `R(p) - nu * cost(p)` — a
//! water-filling problem with a `nu`-dependent water level — then update
//! `nu` to the achieved rate/power ratio. The sequence of subproblem optima
//! `g(nu)` decreases through zero; the iteration stops once `|g| <= eps`.
//!
//! The cost inside the ratio search is the affine proxy
//! `P_static + beta' * Σp`, which folds one chain's switching overhead into
//! the amplifier slope. Using the same proxy in the subproblem, in `g`, and
//! in the `nu` update is what makes the classic guarantees (`nu`
//! non-decreasing, `g >= 0` before convergence) hold exactly; mixing in the
//! exact per-chain consumption breaks them whenever the active count moves.
//! The exact consumption of each iterate is still recorded in the trace,
//! and the reported efficiency is always rate over *exact* consumption.
//!
//! Streams whose optimal power falls below a threshold are switched off
//! entirely, which is what couples the allocation to the RF-chain count:
//! the number of strictly positive entries *is* the selected count.

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::power::PowerModel;

/// Hard cap on outer ratio-search iterations.
pub const DEFAULT_I_MAX: usize = 20;

/// One outer iteration's bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachTrace {
    /// Iteration index, starting at 1.
    pub m: usize,
    /// Ratio estimate the subproblem was solved at.
    pub nu: f64,
    /// Subproblem optimum `R - nu * (P_static + beta' * Σp)` at the
    /// thresholded allocation.
    pub g_value: f64,
    /// Spectral efficiency of this iteration's allocation.
    pub se: f64,
    /// Exact transmit-side power consumption of this iteration's allocation.
    pub tx_pow: f64,
    /// Number of strictly positive power entries.
    pub active_count: usize,
}

/// Outcome of the EE-optimal selection on one channel realization.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// Per-mode transmit powers (length `l_avail`, zeros for off modes).
    pub diag_p: Vec<f64>,
    /// Selected RF-chain count = number of positive powers.
    pub l_opt: usize,
    /// Streams carried (equals `l_opt`).
    pub n_s: usize,
    /// Spectral efficiency at the final allocation.
    pub se: f64,
    /// Energy efficiency (rate over transmit-side consumption).
    pub ee: f64,
    /// Per-iteration history.
    pub trace: Vec<DinkelbachTrace>,
    /// Whether the final point meets the rate floor within the power cap.
    pub feasible: bool,
}

impl SelectionResult {
    /// True when the last iteration closed the ratio gap to `eps`.
    pub fn converged(&self, eps: f64) -> bool {
        self.trace
            .last()
            .map(|t| t.g_value.abs() <= eps)
            .unwrap_or(false)
    }
}

/// Solves `max Σ log2(1 + g_k p_k) - nu * beta_prime * Σ p_k` subject to
/// `Σ p_k <= p_max`, `p_k >= 0`.
///
/// The stationarity condition gives the closed form
/// `p_k = max(0, 1/((nu*beta_prime + mu) ln 2) - 1/g_k)` where `mu >= 0` is
/// the budget multiplier. If the unconstrained solution (`mu = 0`) fits the
/// budget it is returned directly; otherwise `mu` is found by bisection on
/// the monotone total-power curve until the budget binds to within
/// `1e-10 * p_max`.
///
/// Returns the allocation and the multiplier `mu`.
pub fn subproblem_waterfill(
    gains: &[f64],
    nu: f64,
    beta_prime: f64,
    p_max: f64,
) -> Result<(Vec<f64>, f64)> {
    if gains.is_empty() {
        return Err(Error::invalid("need at least one subchannel gain"));
    }
    if !(p_max > 0.0) {
        return Err(Error::invalid("power budget must be positive"));
    }
    if !(beta_prime > 0.0) {
        return Err(Error::invalid("effective amplifier slope must be positive"));
    }
    if !(nu >= 0.0) {
        return Err(Error::invalid("ratio parameter must be >= 0"));
    }
    for &g in gains {
        if !(g >= 0.0) {
            return Err(Error::invalid("subchannel gains must be >= 0"));
        }
    }
    let ln2 = std::f64::consts::LN_2;
    let alloc = |mu: f64| -> Vec<f64> {
        let level = nu * beta_prime + mu;
        gains
            .iter()
            .map(|&g| {
                if g <= 0.0 || level <= 0.0 {
                    // level == 0 means an unbounded subproblem; callers
                    // guard against it below.
                    0.0
                } else {
                    (1.0 / (level * ln2) - 1.0 / g).max(0.0)
                }
            })
            .collect()
    };

    // nu = 0 with no multiplier would water-fill to infinity; the budget
    // always binds there, so start bisection from a level that surely
    // overshoots the budget downwards.
    let total = |p: &[f64]| p.iter().sum::<f64>();
    if nu > 0.0 {
        let p0 = alloc(0.0);
        if total(&p0) <= p_max {
            return Ok((p0, 0.0));
        }
    }

    // Bisection on mu: total power is continuous and strictly decreasing in
    // mu wherever it is positive.
    let mut lo = 0.0_f64;
    // Upper bound: a level high enough to zero every stream.
    let g_max = gains.iter().cloned().fold(0.0_f64, f64::max);
    if g_max <= 0.0 {
        return Ok((vec![0.0; gains.len()], 0.0));
    }
    let mut hi = (g_max / ln2 - nu * beta_prime).max(1.0);
    debug_assert!(total(&alloc(hi)) <= p_max);
    let tol = 1e-10 * p_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let spent = total(&alloc(mid));
        if spent > p_max {
            lo = mid;
        } else {
            hi = mid;
        }
        if (spent - p_max).abs() <= tol {
            return Ok((alloc(mid), mid));
        }
    }
    Ok((alloc(hi), hi))
}

/// Zeroes every allocation entry below `eps_th`.
pub fn threshold_allocation(powers: &[f64], eps_th: f64) -> Vec<f64> {
    powers
        .iter()
        .map(|&p| if p < eps_th { 0.0 } else { p })
        .collect()
}

fn se_of(gains: &[f64], powers: &[f64]) -> f64 {
    gains
        .iter()
        .zip(powers)
        .map(|(&g, &p)| (1.0 + g * p).log2())
        .sum()
}

/// Runs the ratio search on the eigenmode gains of one realization.
///
/// Only the channel's `l_avail` leading modes participate; the gain of mode
/// `k` is `sigma_k² / noise_var`. Starts from `nu = 0` and a uniform
/// allocation. Convergence and feasibility are reported separately: a
/// non-converged run still returns its last allocation (check
/// [`SelectionResult::converged`]), and feasibility — the rate floor and
/// the whole-link consumption ceiling — is judged on the final point.
pub fn run_dinkelbach(
    chan: &ChannelRealization,
    pm: &PowerModel,
    cfg: &SystemConfig,
    i_max: usize,
) -> Result<SelectionResult> {
    let l_avail = chan.l_avail;
    if l_avail == 0 || l_avail > chan.sigma.len() {
        return Err(Error::invalid(format!(
            "l_avail = {l_avail} out of range for {} singular values",
            chan.sigma.len()
        )));
    }
    if i_max == 0 {
        return Err(Error::invalid("iteration cap must be >= 1"));
    }
    if !(cfg.noise_var > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let gains: Vec<f64> = chan.sigma.as_slice()[..l_avail]
        .iter()
        .map(|&s| s * s / cfg.noise_var)
        .collect();
    let beta_prime = pm.beta_prime(cfg.n_tx);

    let static_tx = pm.p_cp + cfg.n_tx as f64 * pm.p_t;

    let mut nu = 0.0_f64;
    let mut p = vec![pm.p_max / l_avail as f64; l_avail];
    let mut trace = Vec::new();
    for m in 1..=i_max {
        let (p_star, _mu) = subproblem_waterfill(&gains, nu, beta_prime, pm.p_max)?;
        p = threshold_allocation(&p_star, cfg.eps_th);
        let active_count = p.iter().filter(|&&x| x > 0.0).count();
        let se = se_of(&gains, &p);
        let tx_pow = pm.tx_power(cfg.n_tx, &p)?;
        let proxy_cost = static_tx + beta_prime * p.iter().sum::<f64>();
        let g_value = se - nu * proxy_cost;
        trace.push(DinkelbachTrace {
            m,
            nu,
            g_value,
            se,
            tx_pow,
            active_count,
        });
        nu = se / proxy_cost;
        if g_value.abs() <= cfg.eps_outer {
            break;
        }
    }

    let last = trace.last().expect("at least one iteration always runs");
    let se = last.se;
    let tx_pow = last.tx_pow;
    let l_opt = last.active_count;
    let tr_p: f64 = p.iter().sum();
    let consumed = pm.total_power(cfg.n_tx, cfg.n_rx, l_opt, l_opt, tr_p)?;
    let l_max = cfg.n_tx.min(cfg.n_rx);
    let p_prime_max = pm.power_budget_cap(cfg.n_tx, cfg.n_rx, l_max, l_max);
    let feasible = se >= cfg.r_min && consumed <= p_prime_max;
    let ee = if tx_pow > 0.0 { se / tx_pow } else { 0.0 };
    Ok(SelectionResult {
        diag_p: p,
        l_opt,
        n_s: l_opt,
        se,
        ee,
        trace,
        feasible,
    })
}
