//! Run configuration: TOML file, command-line overrides, defaults and
//! validation.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use semitunnel::{CoherentState, PhysicalSetup};

pub const DEFAULT_V0: f64 = 0.5;
pub const DEFAULT_A: f64 = 50.0;
pub const DEFAULT_Q: f64 = -60.0;
pub const DEFAULT_P: f64 = 1.0;
pub const DEFAULT_HBAR: f64 = 1.0;
pub const DEFAULT_T: f64 = 50.0;
pub const DEFAULT_NX: usize = 401;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SnapshotBefore,
    SnapshotInside,
    SnapshotInsideGhost,
    SnapshotAfter,
    /// Mean tunneling time against momentum.
    TimeSweep,
    /// Whole-line snapshot with the barrier removed.
    FreeComparison,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SnapshotBefore => "snapshot-before",
            Scenario::SnapshotInside => "snapshot-inside",
            Scenario::SnapshotInsideGhost => "snapshot-inside-ghost",
            Scenario::SnapshotAfter => "snapshot-after",
            Scenario::TimeSweep => "time-sweep",
            Scenario::FreeComparison => "free-comparison",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl XGrid {
    pub fn points(&self) -> Vec<f64> {
        let h = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.max } else { self.min + i as f64 * h }).collect()
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub setup: PhysicalSetup,
    pub state: CoherentState,
    pub scenario: Scenario,
    pub x_grid: XGrid,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub with_ghost: bool,
    pub with_exact: bool,
    pub hbar: Option<f64>,
    /// Observer position for the time sweep.
    pub observer: f64,
    pub out: PathBuf,
}

/// Contents of a TOML configuration file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<Scenario>,
    pub v0: Option<f64>,
    pub a: Option<f64>,
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub hbar: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    #[serde(alias = "T")]
    pub t: Option<f64>,
    pub t_values: Option<Vec<f64>>,
    pub p_values: Option<Vec<f64>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub nx: Option<usize>,
    pub ghost: Option<bool>,
    pub exact: Option<bool>,
    pub observer: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Command-line flags; each overrides the corresponding file key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scenario: Option<Scenario>,
    /// Sets b = c = sqrt(hbar).
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Initial mean momentum.
    #[arg(long)]
    pub p: Option<f64>,
    /// Propagation time (a single snapshot time).
    #[arg(long = "T", value_name = "T")]
    pub t: Option<f64>,
    /// Barrier half-width.
    #[arg(long)]
    pub a: Option<f64>,
    /// Barrier height.
    #[arg(long)]
    pub v0: Option<f64>,
    /// Initial packet centre, left of the barrier.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    /// Left end of the output grid.
    #[arg(long, allow_hyphen_values = true)]
    pub xmin: Option<f64>,
    /// Right end of the output grid.
    #[arg(long, allow_hyphen_values = true)]
    pub xmax: Option<f64>,
    /// Number of output grid points.
    #[arg(long)]
    pub nx: Option<usize>,
    /// Include the ghost trajectory inside the barrier.
    #[arg(long, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub ghost: Option<bool>,
    /// Also run the split-step solver and emit its density.
    #[arg(long, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub exact: Option<bool>,
    /// Output CSV path; the JSON sidecar goes next to it.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn read_file(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    parse_file(&text, path)
}

pub fn parse_file(text: &str, path: &Path) -> Result<FileConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.into(), source: Box::new(e) })
}

/// Reads the file named by `--config`, if any, and resolves it with the flags.
pub fn load_config(flags: &Flags) -> Result<RunConfig, ConfigError> {
    let file = match &flags.config {
        Some(path) => read_file(path)?,
        None => FileConfig::default(),
    };
    resolve(file, flags)
}

fn finite(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn positive(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

pub fn resolve(file: FileConfig, flags: &Flags) -> Result<RunConfig, ConfigError> {
    let scenario = flags.scenario.or(file.scenario).unwrap_or(Scenario::SnapshotBefore);
    let v0 = positive("v0", flags.v0.or(file.v0).unwrap_or(DEFAULT_V0))?;
    let a = positive("a", flags.a.or(file.a).unwrap_or(DEFAULT_A))?;
    let q = finite("q", flags.q.or(file.q).unwrap_or(DEFAULT_Q))?;
    let p = finite("p", flags.p.or(file.p).unwrap_or(DEFAULT_P))?;
    if q >= -a {
        return Err(invalid("q", format!("the packet must start left of the barrier (q < -a = {})", -a)));
    }

    let hbar = flags.hbar.or(file.hbar);
    let setup = match (hbar, file.b, file.c) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(invalid("hbar", "cannot be combined with explicit `b` or `c`"));
        }
        (Some(h), None, None) => PhysicalSetup::symmetric(v0, a, positive("hbar", h)?),
        (None, Some(b), Some(c)) => PhysicalSetup::new(v0, a, positive("b", b)?, positive("c", c)?),
        (None, None, None) => PhysicalSetup::symmetric(v0, a, DEFAULT_HBAR),
        (None, _, _) => return Err(invalid("b", "`b` and `c` must be given together")),
    }
    .map_err(|e| invalid("setup", e.to_string()))?;
    let state = CoherentState::new(q, p, setup).map_err(|e| invalid("p", e.to_string()))?;

    let t_values = match (flags.t, file.t, file.t_values) {
        (Some(t), _, _) => vec![t],
        (None, Some(_), Some(_)) => return Err(invalid("t", "give either `t` or `t_values`, not both")),
        (None, Some(t), None) => vec![t],
        (None, None, Some(ts)) => ts,
        (None, None, None) => vec![DEFAULT_T],
    };
    if t_values.is_empty() {
        return Err(invalid("t_values", "must not be empty"));
    }
    for &t in &t_values {
        positive("t", t)?;
    }

    let p_values = match (flags.p, file.p_values) {
        (Some(p), _) if scenario == Scenario::TimeSweep => vec![p],
        (_, Some(ps)) => ps,
        _ if scenario == Scenario::TimeSweep => (1..=16).map(|i| 0.25 * i as f64).collect(),
        _ => vec![p],
    };
    if p_values.is_empty() {
        return Err(invalid("p_values", "must not be empty"));
    }
    for &pv in &p_values {
        finite("p_values", pv)?;
    }

    let (dmin, dmax) = match scenario {
        Scenario::SnapshotBefore => (-a - 90.0, -a),
        Scenario::SnapshotInside | Scenario::SnapshotInsideGhost => (-a, a),
        Scenario::SnapshotAfter => (a, a + 150.0),
        Scenario::TimeSweep | Scenario::FreeComparison => (-a - 90.0, a + 150.0),
    };
    let x_grid = XGrid {
        min: finite("x_min", flags.xmin.or(file.x_min).unwrap_or(dmin))?,
        max: finite("x_max", flags.xmax.or(file.x_max).unwrap_or(dmax))?,
        count: flags.nx.or(file.nx).unwrap_or(DEFAULT_NX),
    };
    if x_grid.count < 2 {
        return Err(invalid("nx", format!("needs at least 2 points, got {}", x_grid.count)));
    }
    if x_grid.min.partial_cmp(&x_grid.max) != Some(std::cmp::Ordering::Less) {
        return Err(invalid("x_min", format!("must be below x_max ({} >= {})", x_grid.min, x_grid.max)));
    }

    let with_ghost = flags.ghost.or(file.ghost).unwrap_or(scenario != Scenario::SnapshotInside);
    let with_exact = flags.exact.or(file.exact).unwrap_or(false);
    let observer = file.observer.unwrap_or(a + 10.0);
    if scenario == Scenario::TimeSweep && !(observer > a && observer.is_finite()) {
        return Err(invalid("observer", format!("must lie beyond the barrier (> {a})")));
    }
    let out =
        flags.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(format!("semitunnel_{}.csv", scenario.name())));

    Ok(RunConfig { setup, state, scenario, x_grid, t_values, p_values, with_ghost, with_exact, hbar, observer, out })
}
