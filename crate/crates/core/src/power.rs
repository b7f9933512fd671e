//! Transceiver power consumption model.
//!
//! Total consumption decomposes into amplifier draw (transmit power scaled
//! by the amplifier inefficiency `beta`), fixed baseband/common-processing
//! blocks at both ends, per-antenna front-end circuitry, and per-RF-chain
//! circuitry. Each active chain additionally drives one phase shifter per
//! antenna on its side, which is what makes the marginal cost of a chain
//! depend on the array size.

use crate::error::{Error, Result};

/// Static power draws (W) and amplifier inefficiency of the transceiver.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerModel {
    /// Power amplifier inefficiency factor (multiplies radiated power).
    pub beta: f64,
    /// Common processing block, one per link end.
    pub p_cp: f64,
    /// One RF chain.
    pub p_rf: f64,
    /// One phase shifter.
    pub p_ps: f64,
    /// Transmit-side per-antenna front end.
    pub p_t: f64,
    /// Receive-side per-antenna front end.
    pub p_r: f64,
    /// Transmit power budget.
    pub p_max: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            beta: 2.5,
            p_cp: 10.0,
            p_rf: 0.1,
            p_ps: 0.01,
            p_t: 0.1,
            p_r: 0.1,
            p_max: 1.0,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta", self.beta),
            ("p_cp", self.p_cp),
            ("p_rf", self.p_rf),
            ("p_ps", self.p_ps),
            ("p_t", self.p_t),
            ("p_r", self.p_r),
            ("p_max", self.p_max),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(Error::invalid(format!(
                    "power field {name} must be strictly positive"
                )));
            }
        }
        Ok(())
    }

    fn check_tr_p(&self, tr_p: f64) -> Result<()> {
        if !(tr_p >= 0.0) {
            return Err(Error::invalid("radiated power must be >= 0"));
        }
        if tr_p > self.p_max * (1.0 + 1e-9) {
            return Err(Error::invalid(format!(
                "radiated power {tr_p} exceeds budget {}",
                self.p_max
            )));
        }
        Ok(())
    }

    /// Whole-link consumption with `l_t`/`l_r` active chains and `tr_p` W
    /// radiated.
    pub fn total_power(
        &self,
        n_tx: usize,
        n_rx: usize,
        l_t: usize,
        l_r: usize,
        tr_p: f64,
    ) -> Result<f64> {
        self.check_tr_p(tr_p)?;
        Ok(self.beta * tr_p
            + 2.0 * self.p_cp
            + n_tx as f64 * self.p_t
            + n_rx as f64 * self.p_r
            + l_t as f64 * (self.p_rf + n_tx as f64 * self.p_ps)
            + l_r as f64 * (self.p_rf + n_rx as f64 * self.p_ps))
    }

    /// Consumption ceiling: every chain active and the full budget radiated.
    pub fn power_budget_cap(&self, n_tx: usize, n_rx: usize, l_t: usize, l_r: usize) -> f64 {
        self.total_power(n_tx, n_rx, l_t, l_r, self.p_max)
            .expect("budget radiation is always admissible")
    }

    /// Transmit-side consumption for a given per-stream power allocation.
    ///
    /// Only streams with strictly positive power count as active chains;
    /// each contributes its amplifier draw plus the chain and phase-shifter
    /// overhead. The common block and antenna front ends are always on.
    pub fn tx_power(&self, n_tx: usize, powers: &[f64]) -> Result<f64> {
        let mut tr_p = 0.0;
        for &p in powers {
            if !(p >= 0.0) {
                return Err(Error::invalid("per-stream power must be >= 0"));
            }
            tr_p += p;
        }
        self.check_tr_p(tr_p)?;
        let per_chain = self.p_rf + n_tx as f64 * self.p_ps;
        let active = powers.iter().filter(|&&p| p > 0.0).count();
        Ok(self.p_cp
            + n_tx as f64 * self.p_t
            + self.beta * tr_p
            + active as f64 * per_chain)
    }

    /// Effective amplifier slope folding per-chain overhead into the
    /// radiated-power coefficient: `beta + (p_rf + n_tx·p_ps) / p_max`.
    ///
    /// Used by the allocation subproblem so that switching a chain on is
    /// charged against the power it radiates.
    pub fn beta_prime(&self, n_tx: usize) -> f64 {
        self.beta + (self.p_rf + n_tx as f64 * self.p_ps) / self.p_max
    }
}
