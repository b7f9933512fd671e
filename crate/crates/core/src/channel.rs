//! Clustered mmWave MIMO channel generation.
//!
//! Realizations follow the standard narrowband clustered model: a small
//! number of scattering clusters, each contributing a bundle of rays whose
//! azimuth angles are Laplacian-distributed around the cluster mean. Each
//! ray couples a transmit steering vector to a receive steering vector with
//! an i.i.d. complex Gaussian gain, and the sum is scaled so that the
//! expected squared Frobenius norm equals `n_tx * n_rx`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Geometry and gain of a single propagation path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    /// Complex path gain, drawn CN(0, 1).
    pub gain: Complex64,
    /// Azimuth angle of departure, degrees.
    pub aod_deg: f64,
    /// Azimuth angle of arrival, degrees.
    pub aoa_deg: f64,
    /// Which cluster this ray belongs to.
    pub cluster_index: usize,
    /// Ray index within its cluster.
    pub ray_index: usize,
}

/// One channel draw together with its truncated SVD.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// The `n_rx x n_tx` channel matrix.
    pub h: DMatrix<Complex64>,
    /// The paths that built `h`, cluster-major order.
    pub paths: Vec<PathParams>,
    /// Left singular vectors, `n_rx x min(n_tx, n_rx)`.
    pub u: DMatrix<Complex64>,
    /// Singular values in descending order.
    pub sigma: DVector<f64>,
    /// Right singular vectors, `n_tx x min(n_tx, n_rx)`.
    pub v: DMatrix<Complex64>,
    /// Number of usable eigenmodes: singular values above
    /// `rank_tol * sigma[0]`.
    pub l_avail: usize,
}

/// Unit-norm uniform-linear-array steering vector for azimuth `angle_deg`.
///
/// Element `k` carries phase `2π · spacing · k · sin(angle)`, and the whole
/// vector is scaled by `1/sqrt(n)`.
pub fn ula_response(n: usize, angle_deg: f64, spacing_wavelengths: f64) -> DVector<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    let phase_step =
        2.0 * std::f64::consts::PI * spacing_wavelengths * angle_deg.to_radians().sin();
    DVector::from_fn(n, |k, _| {
        Complex64::from_polar(scale, phase_step * k as f64)
    })
}

/// Samples a zero-mean Laplacian with the given standard deviation.
///
/// Inverse-CDF transform: with `u` uniform on (-1/2, 1/2], the value
/// `-b · sgn(u) · ln(1 - 2|u|)` is Laplace(0, b), and a Laplace scale of
/// `std / sqrt(2)` yields the requested standard deviation. `u = -1/2`
/// (where the transform would take `ln 0`) is re-drawn.
fn sample_laplacian<R: Rng>(rng: &mut R, std_dev: f64) -> f64 {
    if std_dev == 0.0 {
        return 0.0;
    }
    let b = std_dev / std::f64::consts::SQRT_2;
    loop {
        let u: f64 = rng.gen::<f64>() - 0.5;
        let r = 1.0 - 2.0 * u.abs();
        if r > 0.0 {
            let sign = if u < 0.0 { -1.0 } else { 1.0 };
            return -b * sign * r.ln();
        }
    }
}

fn sample_cn01<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws path geometry and gains for every ray.
///
/// Per cluster, the mean departure and arrival angles are drawn uniformly
/// from `mean_angle_range_deg`; each ray then offsets both angles by
/// independent Laplacian deviations with standard deviation
/// `angular_spread_deg`. Draw order is fixed (per cluster: mean AoD, mean
/// AoA; then per ray: AoD offset, AoA offset, gain), so a seeded RNG yields
/// reproducible paths.
pub fn draw_path_params<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> Vec<PathParams> {
    let (lo, hi) = cfg.mean_angle_range_deg;
    let mut paths = Vec::with_capacity(cfg.n_cl * cfg.n_ray);
    for cluster_index in 0..cfg.n_cl {
        let mean_aod = rng.gen_range(lo..=hi);
        let mean_aoa = rng.gen_range(lo..=hi);
        for ray_index in 0..cfg.n_ray {
            let aod_deg = mean_aod + sample_laplacian(rng, cfg.angular_spread_deg);
            let aoa_deg = mean_aoa + sample_laplacian(rng, cfg.angular_spread_deg);
            let gain = sample_cn01(rng);
            paths.push(PathParams {
                gain,
                aod_deg,
                aoa_deg,
                cluster_index,
                ray_index,
            });
        }
    }
    paths
}

/// Assembles the channel matrix from a path list.
pub fn channel_from_paths(cfg: &SystemConfig, paths: &[PathParams]) -> DMatrix<Complex64> {
    let gamma =
        ((cfg.n_tx * cfg.n_rx) as f64 / (cfg.n_cl * cfg.n_ray) as f64).sqrt();
    let mut h = DMatrix::zeros(cfg.n_rx, cfg.n_tx);
    for p in paths {
        let a_rx = ula_response(cfg.n_rx, p.aoa_deg, cfg.element_spacing_wavelengths);
        let a_tx = ula_response(cfg.n_tx, p.aod_deg, cfg.element_spacing_wavelengths);
        h += (a_rx * a_tx.adjoint()) * (p.gain * gamma);
    }
    h
}

/// Thin SVD with singular values sorted descending.
///
/// Returns `(u, sigma, v)` with `h = u * diag(sigma) * v^H`.
pub fn svd_sorted(
    h: &DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, DVector<f64>, DMatrix<Complex64>)> {
    let svd = nalgebra::SVD::try_new(h.clone(), true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::numerics("SVD failed to converge"))?;
    let u_raw = svd.u.ok_or_else(|| Error::numerics("SVD produced no U"))?;
    let vt_raw = svd
        .v_t
        .ok_or_else(|| Error::numerics("SVD produced no V"))?;
    let v_raw = vt_raw.adjoint();
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let mut u = DMatrix::zeros(u_raw.nrows(), k);
    let mut v = DMatrix::zeros(v_raw.nrows(), k);
    let mut sigma = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_raw.column(src));
        v.set_column(dst, &v_raw.column(src));
        sigma[dst] = svd.singular_values[src];
    }
    Ok((u, sigma, v))
}

/// Draws one channel realization: paths, matrix, and its sorted SVD.
pub fn generate_channel<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    cfg.validate()?;
    let paths = draw_path_params(cfg, rng);
    let h = channel_from_paths(cfg, &paths);
    let (u, sigma, v) = svd_sorted(&h)?;
    let cutoff = cfg.rank_tol * sigma[0];
    let l_avail = sigma.iter().filter(|&&s| s >= cutoff).count().max(1);
    Ok(ChannelRealization {
        h,
        paths,
        u,
        sigma,
        v,
        l_avail,
    })
}
