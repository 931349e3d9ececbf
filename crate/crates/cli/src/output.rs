//! Files written by a run.
//!
//! * `snap_NNNNNN.csv`: header `x,theta1,...,thetaN`, one row per node,
//!   named by the zero-padded step index.
//! * `snapshots.csv`: `step,t,file` for every snapshot written.
//! * `diagnostics.ndjson`: one JSON object per sample with its step index.
//! * `error_series.csv`: per-mode %Error against the closed form.
//! * `stability.json`, `manifest.json`, and SVG plots.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ckdv_core::diagnostics::DiagnosticSample;
use ckdv_core::{Grid, WaveState};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const SNAPSHOT_INDEX: &str = "snapshots.csv";
pub const DIAGNOSTICS_LOG: &str = "diagnostics.ndjson";
pub const ERROR_SERIES: &str = "error_series.csv";
pub const STABILITY_REPORT: &str = "stability.json";
pub const MANIFEST: &str = "manifest.json";

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:06}.csv")
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    write_string(path, &(text + "\n"))
}

/// Writes `state` on the nodes of `grid` as CSV.
pub fn write_snapshot(path: &Path, state: &WaveState, grid: &Grid) -> Result<()> {
    let mut w = create(path)?;
    let io = CliError::io(path);
    let result = (|| -> std::io::Result<()> {
        write!(w, "x")?;
        for n in 1..=state.n_modes() {
            write!(w, ",theta{n}")?;
        }
        writeln!(w)?;
        for i in 0..state.n_points() {
            write!(w, "{:.16e}", grid.x(i))?;
            for mode in state.modes() {
                write!(w, ",{:.16e}", mode[i])?;
            }
            writeln!(w)?;
        }
        w.flush()
    })();
    result.map_err(io)
}

/// Snapshot contents: node positions and one column per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .map_err(CliError::io(path))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"x") || cols.len() < 2 {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    for (n, c) in cols[1..].iter().enumerate() {
        if *c != format!("theta{}", n + 1) {
            return Err(bad(format!("unexpected column {c:?}")));
        }
    }
    let n_modes = cols.len() - 1;
    let mut snap = Snapshot {
        x: Vec::new(),
        modes: vec![Vec::new(); n_modes],
    };
    for (row, line) in lines.enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", row + 2)))?;
        if values.len() != n_modes + 1 {
            return Err(bad(format!("row {} has {} fields", row + 2, values.len())));
        }
        snap.x.push(values[0]);
        for (n, v) in values[1..].iter().enumerate() {
            snap.modes[n].push(*v);
        }
    }
    Ok(snap)
}

#[derive(Debug, Serialize)]
pub struct DiagnosticRecord<'a> {
    pub step: u64,
    #[serde(flatten)]
    pub sample: &'a DiagnosticSample,
}

/// Appends newline-delimited diagnostic records.
pub struct DiagnosticLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl DiagnosticLog {
    pub fn create(path: PathBuf) -> Result<Self> {
        let out = create(&path)?;
        Ok(DiagnosticLog { path, out })
    }

    pub fn append(&mut self, step: u64, sample: &DiagnosticSample) -> Result<()> {
        let line = serde_json::to_string(&DiagnosticRecord { step, sample }).expect("sample serializes");
        writeln!(self.out, "{line}").map_err(CliError::io(&self.path))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(CliError::io(&self.path))
    }
}
