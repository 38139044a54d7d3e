//! Run configuration: a single JSON file, with command-line overrides.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use condenser_core::Condenser64;
use serde::{Deserialize, Serialize};

use crate::RunError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Equilibrium,
    Sweep,
    Chi,
    Nwidth,
    BalayageDemo,
    Validate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Equilibrium => "equilibrium",
            Task::Sweep => "sweep",
            Task::Chi => "chi",
            Task::Nwidth => "nwidth",
            Task::BalayageDemo => "balayage-demo",
            Task::Validate => "validate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiMethodChoice {
    /// Bruteforce up to the bruteforce degree limit, asymptotic pair above.
    Auto,
    Bruteforce,
    AsymptoticPair,
}

/// `count` equispaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl ThetaGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

/// Contents of the `--config` file. Every knob is optional except the
/// schema version and the condenser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub condenser: Condenser64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Explicit sweep grid; takes precedence over `theta_grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thetas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<ThetaGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// `k = round(theta_ratio · n)` when `k` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_ratio: Option<f64>,
    /// Discrete points `m` on `Γ` and on `∂E`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_degrees: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<ChiMethodChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Point charges `[x, y, mass]` for the balayage demo.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_POINTS: usize = 256;
pub const DEFAULT_GRID_N: usize = 4096;
pub const DEFAULT_CHI_GRID_N: usize = 1024;
pub const DEFAULT_RESTARTS: usize = 4;
pub const DEFAULT_SWEEP: ThetaGrid = ThetaGrid {
    start: 0.0,
    stop: 1.0,
    count: 21,
};

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Io(anyhow::anyhow!("reading {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| RunError::Validation(format!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Range checks on the knobs and geometry validation of the condenser.
    pub fn validate(&mut self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Validation(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let unit = |name: &str, v: Option<f64>| match v {
            Some(t) if !(0.0..=1.0).contains(&t) => Err(RunError::Validation(format!(
                "{name} = {t} is outside [0, 1]"
            ))),
            _ => Ok(()),
        };
        unit("theta", self.theta)?;
        unit("theta_ratio", self.theta_ratio)?;
        if let Some(ts) = &self.thetas {
            for t in ts {
                unit("thetas entry", Some(*t))?;
            }
        }
        if let Some(g) = &self.theta_grid {
            unit("theta_grid.start", Some(g.start))?;
            unit("theta_grid.stop", Some(g.stop))?;
            if g.count == 0 || (g.count > 1 && !(g.stop > g.start)) {
                return bad("theta_grid needs count >= 1 and stop > start".into());
            }
        }
        for (name, v) in [
            ("n", self.n),
            ("points", self.points),
            ("field_n", self.field_n),
            ("cells", self.cells),
        ] {
            if v == Some(0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if let (Some(n), Some(k)) = (self.n, self.k) {
            if k > n {
                return bad(format!("k = {k} exceeds n = {n}"));
            }
        }
        if let Some(src) = &self.sources {
            if src
                .iter()
                .any(|s| !s.iter().all(|v| v.is_finite()) || s[2] <= 0.0)
            {
                return bad("sources need finite coordinates and positive masses".into());
            }
        }
        self.condenser.validate().map_err(RunError::from)
    }

    pub fn wants_csv(&self) -> bool {
        self.formats
            .as_ref()
            .map_or(true, |f| f.contains(&Format::Csv))
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or(DEFAULT_THETA)
    }

    pub fn points(&self) -> usize {
        self.points.unwrap_or(DEFAULT_POINTS)
    }

    pub fn grid_n(&self, default: usize) -> usize {
        self.grid_n.unwrap_or(default)
    }

    pub fn sweep_thetas(&self) -> Vec<f64> {
        match (&self.thetas, &self.theta_grid) {
            (Some(t), _) => t.clone(),
            (None, Some(g)) => g.values(),
            (None, None) => DEFAULT_SWEEP.values(),
        }
    }

    /// `(n, k)` for the chi task.
    pub fn degrees(&self) -> Result<(usize, usize), RunError> {
        let n = self
            .n
            .ok_or_else(|| RunError::Validation("n is required for the chi task".into()))?;
        let k = match (self.k, self.theta_ratio) {
            (Some(k), _) => k,
            (None, Some(r)) => (r * n as f64).round() as usize,
            (None, None) => {
                return Err(RunError::Validation(
                    "chi task needs k or theta_ratio".into(),
                ))
            }
        };
        Ok((n, k))
    }
}
