//! Experiment configuration: one TOML file per run, schema-versioned,
//! unknown keys rejected, every numeric range validated before any
//! computation starts.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Assemble,
    Spectrum,
    WaveObs,
    HeatObs,
    Transmute,
    Hum,
    Lr,
    FullReport,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Assemble => "assemble",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::WaveObs => "wave-obs",
            ExperimentKind::HeatObs => "heat-obs",
            ExperimentKind::Transmute => "transmute",
            ExperimentKind::Hum => "hum",
            ExperimentKind::Lr => "lr",
            ExperimentKind::FullReport => "full-report",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn materialize(&self) -> Vec<f64> {
        fraclab::linalg::geomspace(self.lo, self.hi, self.count)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub s: Option<f64>,
    /// `[left, right]`; defaults to the unit interval.
    pub domain: Option<[f64; 2]>,
    pub n: Option<usize>,
    /// Number of basis modes to compute.
    pub modes: Option<usize>,
    /// Observed / controlled mode count `J`.
    pub j: Option<usize>,
    pub j_list: Option<Vec<usize>>,
    /// Single time horizon `T`.
    pub horizon: Option<f64>,
    pub horizon_grid: Option<GridSpec>,
    /// Detector threshold for the empirical minimal time.
    pub t0_threshold: Option<f64>,
    /// Kernel weight as a multiple of `L²`.
    pub beta_factor: Option<f64>,
    pub series_order: Option<usize>,
    pub stages: Option<usize>,
    /// Tracked modal window `M`.
    pub tracked: Option<usize>,
    pub rcond: Option<f64>,
    /// Initial data coefficients; padded with zeros.
    pub u0: Option<Vec<f64>>,
    pub fit_nodes: Option<usize>,
    /// Random draw count (transfer demo, identity spot checks).
    pub draws: Option<usize>,
    /// Uniform sampling step for exported control time series.
    pub sample_dt: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            s: None,
            domain: None,
            n: None,
            modes: None,
            j: None,
            j_list: None,
            horizon: None,
            horizon_grid: None,
            t0_threshold: None,
            beta_factor: None,
            series_order: None,
            stages: None,
            tracked: None,
            rcond: None,
            u0: None,
            fit_nodes: None,
            draws: None,
            sample_dt: None,
        }
    }
}

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub kind: ExperimentKind,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    /// Upstream run directories (full-report only).
    #[serde(default)]
    pub input_dirs: Vec<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ExperimentConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(invalid("schema", format!("expected {CONFIG_SCHEMA}, got {}", self.schema)));
        }
        let p = &self.params;
        if let Some(s) = p.s {
            if !(s > 0.0 && s < 1.0) {
                return Err(invalid("params.s", format!("{s} outside (0,1)")));
            }
        }
        if let Some([a, b]) = p.domain {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(invalid("params.domain", format!("({a}, {b}) is not an interval")));
            }
        }
        if let Some(n) = p.n {
            if !(8..=4096).contains(&n) {
                return Err(invalid("params.n", format!("{n} outside [8, 4096]")));
            }
        }
        if let Some(m) = p.modes {
            if m == 0 || m > p.n.unwrap_or(4096) {
                return Err(invalid("params.modes", "must be in [1, n]"));
            }
        }
        if let Some(j) = p.j {
            if j == 0 {
                return Err(invalid("params.j", "must be positive"));
            }
        }
        if let Some(t) = p.horizon {
            if !(t > 0.0) || !t.is_finite() {
                return Err(invalid("params.horizon", format!("{t} must be positive")));
            }
        }
        if let Some(g) = &p.horizon_grid {
            if !(g.lo > 0.0 && g.hi > g.lo && g.count >= 2) {
                return Err(invalid("params.horizon_grid", "need 0 < lo < hi and count >= 2"));
            }
        }
        if let Some(e) = p.t0_threshold {
            if !(e > 0.0 && e < 1.0) {
                return Err(invalid("params.t0_threshold", format!("{e} outside (0,1)")));
            }
        }
        if let Some(b) = p.beta_factor {
            if b <= 2.0 {
                return Err(invalid("params.beta_factor", "kernel weight needs beta > 2L²"));
            }
        }
        if let Some(m) = p.series_order {
            if m < 4 || m > 64 {
                return Err(invalid("params.series_order", format!("{m} outside [4, 64]")));
            }
        }
        if let Some(r) = p.rcond {
            if !(r > 0.0 && r < 1.0) {
                return Err(invalid("params.rcond", format!("{r} outside (0,1)")));
            }
        }
        if let Some(k) = p.fit_nodes {
            if k < 3 {
                return Err(invalid("params.fit_nodes", "need at least 3 nodes"));
            }
        }
        if let Some(u0) = &p.u0 {
            if u0.iter().any(|v| !v.is_finite()) {
                return Err(invalid("params.u0", "non-finite coefficient"));
            }
        }
        if self.kind == ExperimentKind::FullReport && self.input_dirs.is_empty() {
            return Err(invalid("input_dirs", "full-report requires at least one input directory"));
        }
        Ok(())
    }

    // typed accessors with per-kind defaults ------------------------------

    pub fn s(&self) -> f64 {
        self.params.s.unwrap_or(0.75)
    }

    pub fn domain(&self) -> [f64; 2] {
        self.params.domain.unwrap_or([0.0, 1.0])
    }

    pub fn n(&self) -> usize {
        self.params.n.unwrap_or(512)
    }

    pub fn modes(&self) -> usize {
        self.params.modes.unwrap_or(40).min(self.n())
    }

    pub fn j(&self) -> usize {
        self.params.j.unwrap_or(8)
    }

    pub fn j_list(&self) -> Vec<usize> {
        self.params.j_list.clone().unwrap_or_else(|| vec![2, 4, 8, 16])
    }

    pub fn horizon(&self) -> f64 {
        self.params.horizon.unwrap_or(1.0)
    }

    pub fn t0_threshold(&self) -> f64 {
        self.params.t0_threshold.unwrap_or(fraclab::wave::DEFAULT_T0_THRESHOLD)
    }

    pub fn beta_factor(&self) -> f64 {
        self.params.beta_factor.unwrap_or(3.0)
    }

    pub fn series_order(&self) -> usize {
        self.params.series_order.unwrap_or(24)
    }

    pub fn stages(&self) -> usize {
        self.params.stages.unwrap_or(5)
    }

    pub fn rcond(&self) -> f64 {
        self.params.rcond.unwrap_or(fraclab::control::DEFAULT_RCOND)
    }

    pub fn fit_nodes(&self) -> usize {
        self.params.fit_nodes.unwrap_or(fraclab::spectral::DEFAULT_FIT_NODES)
    }

    pub fn draws(&self) -> usize {
        self.params.draws.unwrap_or(10)
    }

    /// Tracked modal window: explicit, or eight per controlled mode.
    pub fn tracked(&self, fallback_modes: usize) -> usize {
        self.params.tracked.unwrap_or(8 * fallback_modes)
    }

    /// Initial data: explicit coefficients, or unit mass spread over the
    /// first eight modes.
    pub fn u0(&self, len: usize) -> Vec<f64> {
        let mut c = self.params.u0.clone().unwrap_or_else(|| {
            let k = 8.min(len);
            vec![1.0 / (k as f64).sqrt(); k]
        });
        c.resize(len, 0.0);
        c
    }
}
