//! Scenario execution and CSV / sidecar emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use semitunnel::exact::{propagate_split_step, GridParams, GridState};
use semitunnel::semiclassical::{SemiclassicalOptions, SemiclassicalPropagator};
use semitunnel::tunneling::{self, QuadratureParams};
use semitunnel::{CoherentState, Error};

use crate::config::{RunConfig, Scenario};

pub const SNAPSHOT_HEADER: &str = "x,rho_sc,rho_exact,re_psi_sc,im_psi_sc,status";
pub const SWEEP_HEADER: &str = "p,tau_barrier,tau_free,tau_class,t_max,status";

/// Barrier height standing in for "no barrier" in the free comparison.
pub const FREE_V0: f64 = 1e-12;

/// Fraction of failed rows above which a run counts as a numerical failure.
pub const FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub sidecar: PathBuf,
    pub rows: usize,
    pub failed_rows: usize,
}

impl RunReport {
    pub fn numerical_failure(&self) -> bool {
        self.rows > 0 && self.failed_rows as f64 > FAILURE_FRACTION * self.rows as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRow {
    pub x: f64,
    pub psi: Option<Complex64>,
    pub rho_exact: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub p: f64,
    pub tau_barrier: Option<f64>,
    pub tau_free: Option<f64>,
    pub tau_class: Option<f64>,
    pub t_max: Option<f64>,
    pub status: String,
}

fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.11e}")).unwrap_or_default()
}

impl SnapshotRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            num(Some(self.x)),
            num(self.psi.map(|p| p.norm_sqr())),
            num(self.rho_exact),
            num(self.psi.map(|p| p.re)),
            num(self.psi.map(|p| p.im)),
            self.status
        )
    }
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            num(Some(self.p)),
            num(self.tau_barrier),
            num(self.tau_free),
            num(self.tau_class),
            num(self.t_max),
            self.status
        )
    }
}

fn status(sc: Option<&Error>, exact: Option<&Error>) -> String {
    let mut parts = Vec::new();
    if let Some(e) = sc {
        parts.push(e.code().to_string());
    }
    if let Some(e) = exact {
        parts.push(format!("exact_{}", e.code()));
    }
    if parts.is_empty() {
        "ok".into()
    } else {
        parts.join(";")
    }
}

fn snapshot_state(config: &RunConfig) -> Result<CoherentState, Error> {
    let setup = match config.scenario {
        Scenario::FreeComparison => config.setup.with_v0(FREE_V0)?,
        _ => config.setup,
    };
    CoherentState::new(config.state.q, config.state.p, setup)
}

/// Rows of one snapshot at time `t`, in grid order.
pub fn snapshot_rows(config: &RunConfig, t: f64) -> Vec<SnapshotRow> {
    let xs = config.x_grid.points();
    let state = match snapshot_state(config) {
        Ok(s) => s,
        Err(e) => {
            return xs
                .iter()
                .map(|&x| SnapshotRow { x, psi: None, rho_exact: None, status: status(Some(&e), None) })
                .collect()
        }
    };
    let options = SemiclassicalOptions { with_ghost: config.with_ghost, ..SemiclassicalOptions::default() };
    let prop = SemiclassicalPropagator::new(state, t, options);
    let grid: Option<Result<GridState, Error>> =
        config.with_exact.then(|| propagate_split_step(&state, t, GridParams::default()));
    xs.par_iter()
        .map(|&x| {
            let sc = prop.as_ref().map_err(Clone::clone).and_then(|p| p.field(x)).map(|f| f.amplitude);
            let ex = grid.as_ref().map(|g| g.as_ref().map_err(Clone::clone).and_then(|g| g.density_at(x)));
            let st = status(sc.as_ref().err(), ex.as_ref().and_then(|r| r.as_ref().err()));
            SnapshotRow { x, psi: sc.ok(), rho_exact: ex.and_then(|r| r.ok()), status: st }
        })
        .collect()
}

pub fn sweep_rows(config: &RunConfig) -> Vec<SweepRow> {
    let params = QuadratureParams::default();
    let results = tunneling::sweep(config.state.q, &config.p_values, config.observer, &config.setup, &params);
    config
        .p_values
        .iter()
        .zip(results)
        .map(|(&p, r)| match r {
            Ok(r) => SweepRow {
                p,
                tau_barrier: Some(r.tau_barrier),
                tau_free: Some(r.tau_free),
                tau_class: r.tau_class,
                t_max: Some(r.t_max),
                status: "ok".into(),
            },
            Err(e) => SweepRow {
                p,
                tau_barrier: None,
                tau_free: None,
                tau_class: tunneling::tau_classical(p, &config.setup),
                t_max: None,
                status: e.code().into(),
            },
        })
        .collect()
}

fn write_csv(path: &Path, header: &str, lines: impl Iterator<Item = String>) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Output path for time `t` when several snapshot times are requested.
pub fn snapshot_path(out: &Path, t: f64, several: bool) -> PathBuf {
    if !several {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("semitunnel");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_T{t}.{ext}"))
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    config: &'a RunConfig,
    report: &'a RunReport,
}

/// Runs the configured scenario, writing the CSV file(s) and the JSON sidecar.
pub fn run_scenario(config: &RunConfig) -> std::io::Result<RunReport> {
    let mut files = Vec::new();
    let (mut rows, mut failed) = (0, 0);
    match config.scenario {
        Scenario::TimeSweep => {
            let data = sweep_rows(config);
            rows += data.len();
            failed += data.iter().filter(|r| !r.ok()).count();
            write_csv(&config.out, SWEEP_HEADER, data.iter().map(SweepRow::csv))?;
            files.push(config.out.clone());
        }
        _ => {
            let several = config.t_values.len() > 1;
            for &t in &config.t_values {
                let data = snapshot_rows(config, t);
                rows += data.len();
                failed += data.iter().filter(|r| !r.ok()).count();
                let path = snapshot_path(&config.out, t, several);
                write_csv(&path, SNAPSHOT_HEADER, data.iter().map(SnapshotRow::csv))?;
                files.push(path);
            }
        }
    }
    let report = RunReport { files, sidecar: sidecar_path(&config.out), rows, failed_rows: failed };
    let sidecar = Sidecar {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        core_version: semitunnel::VERSION,
        config,
        report: &report,
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(std::io::Error::other)?;
    std::fs::write(&report.sidecar, json + "\n")?;
    Ok(report)
}
