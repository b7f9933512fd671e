//! System dimensioning and experiment configuration.
//!
//! Experiments are described by a flat plain-text file of `key = value`
//! pairs with dotted section prefixes (`system.n_tx = 32`,
//! `power.p_rf = 0.1`, ...). The format is deliberately dependency-free and
//! diff-friendly; [`parse_config_str`] and [`format_config`] round-trip it.

use std::fmt;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::power::PowerModel;

/// Dimensions, channel statistics and numerical tolerances of one link setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antenna count (ULA elements).
    pub n_tx: usize,
    /// Receive antenna count.
    pub n_rx: usize,
    /// Scattering cluster count.
    pub n_cl: usize,
    /// Rays per cluster.
    pub n_ray: usize,
    /// Intra-cluster angle standard deviation, degrees.
    pub angular_spread_deg: f64,
    /// Interval the per-cluster mean azimuth angles are drawn from, degrees.
    pub mean_angle_range_deg: (f64, f64),
    /// Linear signal-to-noise ratio, `1 / noise_var`.
    pub snr: f64,
    /// Noise variance, `1 / snr`.
    pub noise_var: f64,
    /// Antenna element spacing in wavelengths.
    pub element_spacing_wavelengths: f64,
    /// Minimum acceptable spectral efficiency, bits/s/Hz.
    pub r_min: f64,
    /// Outer-loop (ratio search) stopping tolerance.
    pub eps_outer: f64,
    /// Power-entry thresholding tolerance, W.
    pub eps_th: f64,
    /// Relative singular-value cutoff defining the usable channel rank.
    pub rank_tol: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let snr_db = 10.0;
        let snr = 10f64.powf(snr_db / 10.0);
        SystemConfig {
            n_tx: 32,
            n_rx: 8,
            n_cl: 2,
            n_ray: 10,
            angular_spread_deg: 7.5,
            mean_angle_range_deg: (60.0, 120.0),
            snr,
            noise_var: 1.0 / snr,
            element_spacing_wavelengths: 0.5,
            r_min: 1.0,
            eps_outer: 1e-4,
            eps_th: 1e-6,
            rank_tol: 1e-4,
        }
    }
}

impl SystemConfig {
    /// Sets the SNR from a dB value, keeping `snr · noise_var = 1` exact.
    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.snr = 10f64.powf(snr_db / 10.0);
        self.noise_var = 1.0 / self.snr;
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rx < 1 || self.n_tx < self.n_rx {
            return Err(Error::invalid(format!(
                "antenna counts must satisfy n_tx >= n_rx >= 1 (got {} x {})",
                self.n_tx, self.n_rx
            )));
        }
        if self.n_cl < 1 || self.n_ray < 1 {
            return Err(Error::invalid("need at least one cluster and one ray"));
        }
        if !(self.snr > 0.0) || (self.noise_var * self.snr - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "snr must be positive with noise_var = 1/snr",
            ));
        }
        if self.angular_spread_deg < 0.0 {
            return Err(Error::invalid("angular spread must be nonnegative"));
        }
        if self.mean_angle_range_deg.1 < self.mean_angle_range_deg.0 {
            return Err(Error::invalid("mean angle range must be nonempty"));
        }
        if !(self.eps_outer > 0.0) || !(self.eps_th > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::invalid("rank_tol must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Which quantity a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// EE/SE versus SNR at fixed antenna counts.
    Snr,
    /// EE/SE versus transmit antenna count at fixed SNR.
    NTx,
    /// EE versus ratio-search iteration index, one curve per SNR.
    Iterations,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Snr => "snr",
            SweepKind::NTx => "ntx",
            SweepKind::Iterations => "iterations",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "snr" => Some(SweepKind::Snr),
            "ntx" => Some(SweepKind::NTx),
            "iterations" => Some(SweepKind::Iterations),
            _ => None,
        }
    }
}

/// Link strategies the harness can evaluate on each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Ratio-search selection of the active chain count, then one design.
    Dm,
    /// Exhaustive search over every candidate chain count.
    Bf,
    /// Fully digital beamforming, one chain per antenna.
    Digital,
    /// Single-chain phase-only beamforming.
    Analogue,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dm => "dm",
            Method::Bf => "bf",
            Method::Digital => "digital",
            Method::Analogue => "analogue",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dm" => Some(Method::Dm),
            "bf" => Some(Method::Bf),
            "digital" => Some(Method::Digital),
            "analogue" => Some(Method::Analogue),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Greedy pursuit flavour used to factor the digital beamformers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pursuit {
    Omp,
    Gp,
}

impl Pursuit {
    pub fn as_str(self) -> &'static str {
        match self {
            Pursuit::Omp => "omp",
            Pursuit::Gp => "gp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "omp" => Some(Pursuit::Omp),
            "gp" => Some(Pursuit::Gp),
            _ => None,
        }
    }
}

/// Beam dictionary the pursuit selects atoms from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryKind {
    /// Steering vectors at the realization's true path angles.
    Paths,
    /// Uniform azimuth grid, size given by `grid_size`.
    Grid,
}

impl DictionaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DictionaryKind::Paths => "paths",
            DictionaryKind::Grid => "grid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paths" => Some(DictionaryKind::Paths),
            "grid" => Some(DictionaryKind::Grid),
            _ => None,
        }
    }
}

/// Full description of one Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub base: SystemConfig,
    pub power: PowerModel,
    /// Monte-Carlo realizations per sweep point.
    pub trials: usize,
    /// Master RNG seed; trials derive independent substreams from it.
    pub seed: u64,
    pub sweep: SweepKind,
    /// SNR grid (dB) for the `snr` sweep.
    pub snr_list_db: Vec<f64>,
    /// Antenna-count grid for the `ntx` sweep.
    pub ntx_list: Vec<usize>,
    /// SNR points (dB) whose convergence curves the `iterations` sweep records.
    pub iter_snr_list_db: Vec<f64>,
    /// Strategies to evaluate, in output order.
    pub methods: Vec<Method>,
    pub pursuit: Pursuit,
    /// Whether gradient pursuit finishes with one least-squares polish.
    pub gp_polish: bool,
    pub dictionary: DictionaryKind,
    /// Atom count when `dictionary = grid`.
    pub grid_size: usize,
    pub output_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base: SystemConfig::default(),
            power: PowerModel::default(),
            trials: 1000,
            seed: 1,
            sweep: SweepKind::Snr,
            snr_list_db: vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            ntx_list: vec![32, 48, 64, 80],
            iter_snr_list_db: vec![-10.0, 0.0, 10.0],
            methods: vec![Method::Dm, Method::Bf, Method::Digital, Method::Analogue],
            pursuit: Pursuit::Omp,
            gp_polish: true,
            dictionary: DictionaryKind::Paths,
            grid_size: 64,
            output_path: PathBuf::from("results.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.power.validate()?;
        if self.trials < 1 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods list must be nonempty"));
        }
        let list_empty = match self.sweep {
            SweepKind::Snr => self.snr_list_db.is_empty(),
            SweepKind::NTx => self.ntx_list.is_empty(),
            SweepKind::Iterations => self.iter_snr_list_db.is_empty(),
        };
        if list_empty {
            return Err(Error::invalid("active sweep list must be nonempty"));
        }
        if self.dictionary == DictionaryKind::Grid && self.grid_size == 0 {
            return Err(Error::invalid("grid_size must be >= 1"));
        }
        Ok(())
    }
}

fn config_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(path: &str, key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| config_err(path, format!("cannot parse value `{raw}` for key `{key}`")))
}

fn parse_list_f64(path: &str, key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| parse_num::<f64>(path, key, tok))
        .collect()
}

fn parse_list_usize(path: &str, key: &str, raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|tok| parse_num::<usize>(path, key, tok))
        .collect()
}

fn parse_bool(path: &str, key: &str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(config_err(
            path,
            format!("expected true/false for `{key}`, got `{other}`"),
        )),
    }
}

/// Parses a config file's text. Unknown keys are rejected so typos fail
/// loudly instead of silently running defaults.
pub fn parse_config_str(text: &str, path: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line.split_once('=').ok_or_else(|| {
            config_err(path, format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let raw = raw.trim();
        match key {
            "system.n_tx" => cfg.base.n_tx = parse_num(path, key, raw)?,
            "system.n_rx" => cfg.base.n_rx = parse_num(path, key, raw)?,
            "system.n_cl" => cfg.base.n_cl = parse_num(path, key, raw)?,
            "system.n_ray" => cfg.base.n_ray = parse_num(path, key, raw)?,
            "system.angular_spread_deg" => {
                cfg.base.angular_spread_deg = parse_num(path, key, raw)?
            }
            "system.mean_angle_min_deg" => {
                cfg.base.mean_angle_range_deg.0 = parse_num(path, key, raw)?
            }
            "system.mean_angle_max_deg" => {
                cfg.base.mean_angle_range_deg.1 = parse_num(path, key, raw)?
            }
            "system.snr_db" => {
                let db: f64 = parse_num(path, key, raw)?;
                cfg.base.set_snr_db(db);
            }
            "system.element_spacing" => {
                cfg.base.element_spacing_wavelengths = parse_num(path, key, raw)?
            }
            "system.r_min" => cfg.base.r_min = parse_num(path, key, raw)?,
            "system.eps_outer" => cfg.base.eps_outer = parse_num(path, key, raw)?,
            "system.eps_th" => cfg.base.eps_th = parse_num(path, key, raw)?,
            "system.rank_tol" => cfg.base.rank_tol = parse_num(path, key, raw)?,
            "power.beta" => cfg.power.beta = parse_num(path, key, raw)?,
            "power.p_cp" => cfg.power.p_cp = parse_num(path, key, raw)?,
            "power.p_rf" => cfg.power.p_rf = parse_num(path, key, raw)?,
            "power.p_ps" => cfg.power.p_ps = parse_num(path, key, raw)?,
            "power.p_t" => cfg.power.p_t = parse_num(path, key, raw)?,
            "power.p_r" => cfg.power.p_r = parse_num(path, key, raw)?,
            "power.p_max" => cfg.power.p_max = parse_num(path, key, raw)?,
            "hbf.dictionary" => {
                cfg.dictionary = DictionaryKind::parse(raw)
                    .ok_or_else(|| config_err(path, format!("unknown dictionary `{raw}`")))?
            }
            "hbf.grid_size" => cfg.grid_size = parse_num(path, key, raw)?,
            "hbf.gp_polish" => cfg.gp_polish = parse_bool(path, key, raw)?,
            "sim.trials" => cfg.trials = parse_num(path, key, raw)?,
            "sim.seed" => cfg.seed = parse_num(path, key, raw)?,
            "sim.sweep" => {
                cfg.sweep = SweepKind::parse(raw)
                    .ok_or_else(|| config_err(path, format!("unknown sweep `{raw}`")))?
            }
            "sim.snr_list_db" => cfg.snr_list_db = parse_list_f64(path, key, raw)?,
            "sim.ntx_list" => cfg.ntx_list = parse_list_usize(path, key, raw)?,
            "sim.iter_snr_list_db" => cfg.iter_snr_list_db = parse_list_f64(path, key, raw)?,
            "sim.methods" => {
                let mut methods = Vec::new();
                for tok in raw.split(',') {
                    let tok = tok.trim();
                    let m = Method::parse(tok)
                        .ok_or_else(|| config_err(path, format!("unknown method `{tok}`")))?;
                    methods.push(m);
                }
                cfg.methods = methods;
            }
            "sim.pursuit" => {
                cfg.pursuit = Pursuit::parse(raw)
                    .ok_or_else(|| config_err(path, format!("unknown pursuit `{raw}`")))?
            }
            "sim.out" => cfg.output_path = PathBuf::from(raw),
            other => {
                return Err(config_err(path, format!("unknown key `{other}`")));
            }
        }
    }
    cfg.validate()
        .map_err(|e| config_err(path, e.to_string()))?;
    Ok(cfg)
}

/// Loads and parses a config file.
pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text, &path.display().to_string())
}

fn fmt_float(x: f64) -> String {
    // Shortest representation that round-trips through f64.
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("nan") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Renders a configuration in the same `key = value` layout the parser
/// accepts, so `--print-config` output can be fed straight back in.
pub fn format_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let kv = |out: &mut String, k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv(&mut out, "system.n_tx", cfg.base.n_tx.to_string());
    kv(&mut out, "system.n_rx", cfg.base.n_rx.to_string());
    kv(&mut out, "system.n_cl", cfg.base.n_cl.to_string());
    kv(&mut out, "system.n_ray", cfg.base.n_ray.to_string());
    kv(
        &mut out,
        "system.angular_spread_deg",
        fmt_float(cfg.base.angular_spread_deg),
    );
    kv(
        &mut out,
        "system.mean_angle_min_deg",
        fmt_float(cfg.base.mean_angle_range_deg.0),
    );
    kv(
        &mut out,
        "system.mean_angle_max_deg",
        fmt_float(cfg.base.mean_angle_range_deg.1),
    );
    kv(&mut out, "system.snr_db", fmt_float(cfg.base.snr_db()));
    kv(
        &mut out,
        "system.element_spacing",
        fmt_float(cfg.base.element_spacing_wavelengths),
    );
    kv(&mut out, "system.r_min", fmt_float(cfg.base.r_min));
    kv(&mut out, "system.eps_outer", fmt_float(cfg.base.eps_outer));
    kv(&mut out, "system.eps_th", fmt_float(cfg.base.eps_th));
    kv(&mut out, "system.rank_tol", fmt_float(cfg.base.rank_tol));
    kv(&mut out, "power.beta", fmt_float(cfg.power.beta));
    kv(&mut out, "power.p_cp", fmt_float(cfg.power.p_cp));
    kv(&mut out, "power.p_rf", fmt_float(cfg.power.p_rf));
    kv(&mut out, "power.p_ps", fmt_float(cfg.power.p_ps));
    kv(&mut out, "power.p_t", fmt_float(cfg.power.p_t));
    kv(&mut out, "power.p_r", fmt_float(cfg.power.p_r));
    kv(&mut out, "power.p_max", fmt_float(cfg.power.p_max));
    kv(&mut out, "hbf.dictionary", cfg.dictionary.as_str().into());
    kv(&mut out, "hbf.grid_size", cfg.grid_size.to_string());
    kv(&mut out, "hbf.gp_polish", cfg.gp_polish.to_string());
    kv(&mut out, "sim.trials", cfg.trials.to_string());
    kv(&mut out, "sim.seed", cfg.seed.to_string());
    kv(&mut out, "sim.sweep", cfg.sweep.as_str().into());
    kv(
        &mut out,
        "sim.snr_list_db",
        cfg.snr_list_db
            .iter()
            .map(|v| fmt_float(*v))
            .collect::<Vec<_>>()
            .join(","),
    );
    kv(
        &mut out,
        "sim.ntx_list",
        cfg.ntx_list
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    kv(
        &mut out,
        "sim.iter_snr_list_db",
        cfg.iter_snr_list_db
            .iter()
            .map(|v| fmt_float(*v))
            .collect::<Vec<_>>()
            .join(","),
    );
    kv(
        &mut out,
        "sim.methods",
        cfg.methods
            .iter()
            .map(|m| m.as_str())
            .collect::<Vec<_>>()
            .join(","),
    );
    kv(&mut out, "sim.pursuit", cfg.pursuit.as_str().into());
    kv(
        &mut out,
        "sim.out",
        cfg.output_path.display().to_string(),
    );
    out
}
