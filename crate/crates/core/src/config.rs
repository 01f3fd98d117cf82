//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional and falls back to the default listed in [`KEYS`]; unknown or
//! repeated keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{InertiaTensor, NoiseModel, SimParams};
use crate::ensemble::NoiseSharing;
use crate::so3::BodyVector;

/// Every accepted key, in canonical order.
pub const KEYS: &[&str] = &[
    "inertia",
    "sigma",
    "theta",
    "dt",
    "t_end",
    "seed",
    "c",
    "pi0",
    "stride",
    "n_particles",
    "n_bands",
    "snapshot_times",
    "noise",
    "output_dir",
    "l1_gate",
    "reference_theta",
    "sigmas",
    "thetas",
    "lyapunov_seeds",
    "burn_in",
    "n_blocks",
    "workers",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{0}` given more than once")]
    Duplicate(String),
    #[error("config key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Effective configuration of one CLI run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inertia: [f64; 3],
    pub sigma: f64,
    pub theta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Radius of the momentum sphere for ensembles.
    pub c: f64,
    /// Initial momentum for `simulate`.
    pub pi0: [f64; 3],
    /// Steps between trajectory rows.
    pub stride: u64,
    pub n_particles: usize,
    pub n_bands: usize,
    pub snapshot_times: Vec<f64>,
    pub noise: NoiseSharing,
    pub output_dir: PathBuf,
    pub l1_gate: f64,
    /// Dissipation rate of the reference measure in `gibbs-check`.
    pub reference_theta: Option<f64>,
    pub sigmas: Option<Vec<f64>>,
    pub thetas: Option<Vec<f64>>,
    pub lyapunov_seeds: usize,
    pub burn_in: f64,
    pub n_blocks: usize,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inertia: [1.0, 2.0, 3.0],
            sigma: 0.5,
            theta: 0.5,
            dt: 1e-3,
            t_end: 10.0,
            seed: 0,
            c: 1.0,
            pi0: [0.6, 0.0, 0.8],
            stride: 100,
            n_particles: 10_000,
            n_bands: 13,
            snapshot_times: Vec::new(),
            noise: NoiseSharing::Independent,
            output_dir: PathBuf::from("out"),
            l1_gate: 0.05,
            reference_theta: None,
            sigmas: None,
            thetas: None,
            lyapunov_seeds: 4,
            burn_in: 10.0,
            n_blocks: 20,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| invalid(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_f64(key, s)).collect()
}

fn parse_triple(key: &str, v: &str) -> Result<[f64; 3], ConfigError> {
    let l = parse_list(key, v)?;
    <[f64; 3]>::try_from(l).map_err(|_| invalid(key, "expected three comma-separated numbers"))
}

fn parse_count<U: std::str::FromStr>(key: &str, v: &str) -> Result<U, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| invalid(key, format!("`{v}` is not a non-negative integer")))
}

fn positive(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(key, "must be > 0"))
    }
}

fn non_negative(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(invalid(key, "must be >= 0"))
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let k = k.trim();
            if seen.iter().any(|s| s == k) {
                return Err(ConfigError::Duplicate(k.to_string()));
            }
            cfg.set(k, v.trim())?;
            seen.push(k.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides on top of the current values.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for (i, o) in overrides.iter().enumerate() {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    /// Sets one key with per-key validation.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "inertia" => {
                let i = parse_triple(key, v)?;
                for x in i {
                    positive(key, x)?;
                }
                self.inertia = i;
            }
            "sigma" => self.sigma = non_negative(key, parse_f64(key, v)?)?,
            "theta" => self.theta = non_negative(key, parse_f64(key, v)?)?,
            "dt" => self.dt = positive(key, parse_f64(key, v)?)?,
            "t_end" => self.t_end = positive(key, parse_f64(key, v)?)?,
            "seed" => self.seed = parse_count(key, v)?,
            "c" => self.c = positive(key, parse_f64(key, v)?)?,
            "pi0" => self.pi0 = parse_triple(key, v)?,
            "stride" => {
                self.stride = parse_count(key, v)?;
                if self.stride == 0 {
                    return Err(invalid(key, "must be >= 1"));
                }
            }
            "n_particles" => {
                self.n_particles = parse_count(key, v)?;
                if self.n_particles == 0 {
                    return Err(invalid(key, "must be >= 1"));
                }
            }
            "n_bands" => {
                self.n_bands = parse_count(key, v)?;
                if self.n_bands < 4 {
                    return Err(invalid(key, "must be >= 4"));
                }
            }
            "snapshot_times" => {
                let t = parse_list(key, v)?;
                for &x in &t {
                    non_negative(key, x)?;
                }
                self.snapshot_times = t;
            }
            "noise" => {
                self.noise = match v {
                    "independent" => NoiseSharing::Independent,
                    "shared" => NoiseSharing::Shared { realization: 0 },
                    _ => return Err(invalid(key, "expected `independent` or `shared`")),
                }
            }
            "output_dir" => {
                if v.is_empty() {
                    return Err(invalid(key, "must not be empty"));
                }
                self.output_dir = PathBuf::from(v);
            }
            "l1_gate" => self.l1_gate = positive(key, parse_f64(key, v)?)?,
            "reference_theta" => {
                self.reference_theta = Some(non_negative(key, parse_f64(key, v)?)?)
            }
            "sigmas" | "thetas" => {
                let l = parse_list(key, v)?;
                if l.is_empty() {
                    return Err(invalid(key, "must not be empty"));
                }
                for &x in &l {
                    non_negative(key, x)?;
                }
                if key == "sigmas" {
                    self.sigmas = Some(l);
                } else {
                    self.thetas = Some(l);
                }
            }
            "lyapunov_seeds" => {
                self.lyapunov_seeds = parse_count(key, v)?;
                if self.lyapunov_seeds == 0 {
                    return Err(invalid(key, "must be >= 1"));
                }
            }
            "burn_in" => self.burn_in = non_negative(key, parse_f64(key, v)?)?,
            "n_blocks" => {
                self.n_blocks = parse_count(key, v)?;
                if self.n_blocks < 2 {
                    return Err(invalid(key, "must be >= 2"));
                }
            }
            "workers" => {
                self.workers = parse_count(key, v)?;
                if self.workers == 0 {
                    return Err(invalid(key, "must be >= 1"));
                }
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Cross-key checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dt > self.t_end {
            return Err(invalid("dt", "must not exceed t_end"));
        }
        if self.snapshot_times.iter().any(|&t| t > self.t_end) {
            return Err(invalid("snapshot_times", "must lie within [0, t_end]"));
        }
        if self.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("snapshot_times", "must be sorted"));
        }
        Ok(())
    }

    /// Simulation parameters in `f64`.
    pub fn sim_params(&self) -> Result<SimParams<f64>, ConfigError> {
        let [i1, i2, i3] = self.inertia;
        let inertia =
            InertiaTensor::new(i1, i2, i3).map_err(|e| invalid("inertia", e.to_string()))?;
        let noise =
            NoiseModel::isotropic(self.sigma).map_err(|e| invalid("sigma", e.to_string()))?;
        SimParams::new(inertia, noise, self.theta, self.dt, self.t_end, self.seed)
            .and_then(|p| p.with_snapshot_times(self.snapshot_times.clone()))
            .map_err(|e| match e {
                crate::Error::InvalidParameter { name, reason } => invalid(name, reason),
                other => invalid("config", other.to_string()),
            })
    }

    pub fn pi0_vector(&self) -> BodyVector<f64> {
        BodyVector::from_array(self.pi0)
    }

    /// Every key with its effective value, one `key = value` per line in
    /// [`KEYS`] order. Parsing this text reproduces the configuration.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let opt_list = |v: &Option<Vec<f64>>, fallback: f64| match v {
            Some(l) => join(l),
            None => format!("{fallback}"),
        };
        for key in KEYS {
            let value = match *key {
                "inertia" => join(&self.inertia),
                "sigma" => format!("{}", self.sigma),
                "theta" => format!("{}", self.theta),
                "dt" => format!("{}", self.dt),
                "t_end" => format!("{}", self.t_end),
                "seed" => format!("{}", self.seed),
                "c" => format!("{}", self.c),
                "pi0" => join(&self.pi0),
                "stride" => format!("{}", self.stride),
                "n_particles" => format!("{}", self.n_particles),
                "n_bands" => format!("{}", self.n_bands),
                "snapshot_times" => join(&self.snapshot_times),
                "noise" => match self.noise {
                    NoiseSharing::Independent => "independent".to_string(),
                    NoiseSharing::Shared { .. } => "shared".to_string(),
                },
                "output_dir" => self.output_dir.display().to_string(),
                "l1_gate" => format!("{}", self.l1_gate),
                "reference_theta" => format!("{}", self.reference_theta.unwrap_or(self.theta)),
                "sigmas" => opt_list(&self.sigmas, self.sigma),
                "thetas" => opt_list(&self.thetas, self.theta),
                "lyapunov_seeds" => format!("{}", self.lyapunov_seeds),
                "burn_in" => format!("{}", self.burn_in),
                "n_blocks" => format!("{}", self.n_blocks),
                "workers" => format!("{}", self.workers),
                _ => unreachable!("key list and canonical writer out of sync"),
            };
            writeln!(s, "{key} = {value}").unwrap();
        }
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical) without `workers` and
    /// `output_dir`, which never change results.
    pub fn hash(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !l.starts_with("workers ") && !l.starts_with("output_dir "))
            .map(|l| format!("{l}\n"))
            .collect();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
