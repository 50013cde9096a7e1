//! The `run` command: integrates the flow and streams a CSV time series,
//! snapshot files and a run manifest into an output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use calabi_core::flow::{self, FlowEvent};
use calabi_core::{DiagnosticsRecord, FlowConfig, Termination};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{write_file, Error, Result};
use crate::snapshot::SnapshotFile;

pub const CSV_COLUMNS: [&str; 12] = [
    "t",
    "dt",
    "Ca",
    "Ma",
    "L2",
    "psi_mean",
    "max_Rm",
    "eig_min",
    "eig_max",
    "M_estimate",
    "inj_proxy",
    "total_energy_n",
];

/// One CSV row; `{:?}` prints the shortest decimal that round-trips.
pub fn csv_row(r: &DiagnosticsRecord) -> String {
    let vals = [
        r.t,
        r.dt,
        r.ca,
        r.ma,
        r.l2,
        r.psi_mean,
        r.max_rm,
        r.eig_min,
        r.eig_max,
        r.m_estimate,
        r.inj_proxy,
        r.total_energy_n,
    ];
    vals.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Serialize)]
struct FlowEcho {
    t_end: f64,
    sigma: f64,
    dt_min: f64,
    ca_stop: Option<f64>,
    record_every: usize,
    diagnostics_every: usize,
    m_segments: usize,
    seed: u64,
}

impl From<&FlowConfig> for FlowEcho {
    fn from(c: &FlowConfig) -> Self {
        Self {
            t_end: c.t_end,
            sigma: c.sigma,
            dt_min: c.dt_min,
            ca_stop: c.ca_stop,
            record_every: c.record_every,
            diagnostics_every: c.diagnostics_every,
            m_segments: c.m_segments,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Serialize)]
struct Grid {
    n: usize,
    #[serde(rename = "N")]
    points: usize,
    scale: f64,
    spacing: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    tool: &'static str,
    version: &'static str,
    config: RunConfig,
    flow: FlowEcho,
    grid: Grid,
    initial_condition: String,
    started_unix: f64,
    finished_unix: Option<f64>,
    /// `None` while the run is in progress.
    termination: Option<&'static str>,
    final_t: Option<f64>,
    accepted_steps: usize,
    rejected_steps: usize,
    snapshots: Vec<String>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub termination: Termination,
    pub final_t: f64,
    pub final_ca: f64,
    pub accepted_steps: usize,
    pub records: usize,
}

struct Writers {
    csv: BufWriter<File>,
    csv_path: PathBuf,
    snap_dir: PathBuf,
    snapshots: Vec<String>,
}

impl Writers {
    fn record(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        let err = |source| Error::Write {
            path: self.csv_path.clone(),
            source,
        };
        writeln!(self.csv, "{}", csv_row(r)).map_err(err)?;
        // flushed per record so an interrupted run leaves a readable file
        self.csv.flush().map_err(|source| Error::Write {
            path: self.csv_path.clone(),
            source,
        })
    }

    fn snapshot(&mut self, snap: &flow::Snapshot) -> Result<()> {
        let name = format!("snap_{:05}.json", self.snapshots.len());
        SnapshotFile::from_potential(snap.t, &snap.u).write(&self.snap_dir.join(&name))?;
        self.snapshots.push(format!("snapshots/{name}"));
        Ok(())
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the flow described by `cfg`, writing `run.csv`, `manifest.json` and
/// `snapshots/snap_NNNNN.json` under `out`.
///
/// Stiffness failure and suspected blow-up are returned as errors after all
/// files (including the manifest) have been written.
pub fn run_to_dir(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let u0 = cfg.initial_potential()?;
    let flow_cfg = cfg.flow_config();
    flow_cfg.validate()?;
    let spec = *u0.spec();

    create_dir(out)?;
    let snap_dir = out.join("snapshots");
    create_dir(&snap_dir)?;
    let csv_path = out.join("run.csv");
    let file = File::create(&csv_path).map_err(|source| Error::Write {
        path: csv_path.clone(),
        source,
    })?;
    let mut writers = Writers {
        csv: BufWriter::new(file),
        csv_path,
        snap_dir,
        snapshots: Vec::new(),
    };
    writeln!(writers.csv, "{}", CSV_COLUMNS.join(",")).map_err(|source| Error::Write {
        path: writers.csv_path.clone(),
        source,
    })?;

    let manifest_path = out.join("manifest.json");
    let mut manifest = RunManifest {
        tool: "calabi",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        flow: FlowEcho::from(&flow_cfg),
        grid: Grid {
            n: spec.dim(),
            points: spec.points(),
            scale: spec.scale(),
            spacing: spec.spacing(),
        },
        initial_condition: cfg.ic.describe(),
        started_unix: unix_now(),
        finished_unix: None,
        termination: None,
        final_t: None,
        accepted_steps: 0,
        rejected_steps: 0,
        snapshots: Vec::new(),
    };
    let write_manifest = |m: &RunManifest| {
        write_file(&manifest_path, &serde_json::to_string_pretty(m).expect("manifest serializes"))
    };
    write_manifest(&manifest)?;

    let mut io_error: Option<Error> = None;
    let trace = flow::run_with(&u0, &flow_cfg, |ev| {
        if io_error.is_some() {
            return;
        }
        let res = match ev {
            FlowEvent::Record(r) => writers.record(r),
            FlowEvent::Snapshot(s) => writers.snapshot(s),
            FlowEvent::Accepted(_) => Ok(()),
        };
        if let Err(e) = res {
            io_error = Some(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }

    manifest.finished_unix = Some(unix_now());
    manifest.termination = Some(trace.termination.as_str());
    manifest.final_t = Some(trace.final_state.t);
    manifest.accepted_steps = trace.accepted_steps;
    manifest.rejected_steps = trace.rejected_steps;
    manifest.snapshots = writers.snapshots;
    write_manifest(&manifest)?;

    if let Some(err) = trace.termination.error(flow_cfg.dt_min) {
        return Err(err.into());
    }
    Ok(RunOutcome {
        termination: trace.termination,
        final_t: trace.final_state.t,
        final_ca: trace.records.last().map_or(0.0, |r| r.ca),
        accepted_steps: trace.accepted_steps,
        records: trace.records.len(),
    })
}
