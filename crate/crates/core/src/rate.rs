//! Spectral-efficiency and energy-efficiency evaluation.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gaussian-signalling spectral efficiency of the beamformed link, in
/// bits/s/Hz, with the combiner's noise coloring whitened away.
///
/// With `F = f_rf·f_bb`, `W = w_rf·w_bb`, `A = WᴴHF` and `WᴴW = LLᴴ`
/// (Cholesky), this evaluates `log2 det(I + (1/noise_var)·L⁻¹A(L⁻¹A)ᴴ)`.
/// The transmit power is whatever `F` carries, so `f_bb` must already be
/// scaled. Fails if the combiner is rank-deficient (no whitening factor
/// exists).
pub fn se_exact(
    h: &DMatrix<Complex64>,
    f_rf: &DMatrix<Complex64>,
    f_bb: &DMatrix<Complex64>,
    w_rf: &DMatrix<Complex64>,
    w_bb: &DMatrix<Complex64>,
    noise_var: f64,
) -> Result<f64> {
    let dims_ok = h.ncols() == f_rf.nrows()
        && f_rf.ncols() == f_bb.nrows()
        && h.nrows() == w_rf.nrows()
        && w_rf.ncols() == w_bb.nrows()
        && f_bb.ncols() == w_bb.ncols();
    if !dims_ok {
        return Err(Error::invalid(format!(
            "beamformer dimensions do not conform: H {}x{}, F_RF {}x{}, F_BB {}x{}, W_RF {}x{}, W_BB {}x{}",
            h.nrows(), h.ncols(),
            f_rf.nrows(), f_rf.ncols(),
            f_bb.nrows(), f_bb.ncols(),
            w_rf.nrows(), w_rf.ncols(),
            w_bb.nrows(), w_bb.ncols(),
        )));
    }
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let f = f_rf * f_bb;
    let w = w_rf * w_bb;
    let b = w.adjoint() * &w;
    let chol =
        Cholesky::new(b).ok_or_else(|| Error::numerics("combiner is singular; cannot whiten"))?;
    let a = w.adjoint() * h * f;
    let c = chol
        .l()
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::numerics("combiner whitening solve failed"))?;
    let n_s = c.nrows();
    let gram = DMatrix::identity(n_s, n_s) + (&c * c.adjoint()) / Complex64::from(noise_var);
    let det_chol = Cholesky::new(gram)
        .ok_or_else(|| Error::numerics("rate Gram matrix not positive definite"))?;
    // log2 det via the product of squared Cholesky diagonal entries.
    let mut log2_det = 0.0;
    for i in 0..n_s {
        log2_det += 2.0 * det_chol.l()[(i, i)].re.log2();
    }
    Ok(log2_det)
}

/// Spectral efficiency of parallel eigenmode subchannels:
/// `Σ log2(1 + σ_k² p_k / noise_var)` over the allocated streams.
pub fn se_diag(sigma: &DVector<f64>, powers: &[f64], noise_var: f64) -> Result<f64> {
    if powers.len() > sigma.len() {
        return Err(Error::invalid(format!(
            "{} powers allocated but only {} singular values",
            powers.len(),
            sigma.len()
        )));
    }
    if !(noise_var > 0.0) {
        return Err(Error::invalid("noise variance must be positive"));
    }
    let mut se = 0.0;
    for (k, &p) in powers.iter().enumerate() {
        if !(p >= 0.0) {
            return Err(Error::invalid("per-stream power must be >= 0"));
        }
        se += (1.0 + sigma[k] * sigma[k] * p / noise_var).log2();
    }
    Ok(se)
}

/// Bits per joule: spectral efficiency over total consumed power.
pub fn energy_efficiency(se: f64, total_power: f64) -> Result<f64> {
    if !(total_power > 0.0) {
        return Err(Error::invalid("total power must be positive"));
    }
    if !(se >= 0.0) {
        return Err(Error::invalid("spectral efficiency must be >= 0"));
    }
    Ok(se / total_power)
}
