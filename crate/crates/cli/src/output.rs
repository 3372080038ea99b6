//! Run artifacts: coefficient matrix (binary and CSV), trace CSV and the
//! run summary.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use ndarray::Array2;
use owlscreen::SolverTrace;
use serde::{Deserialize, Serialize};

pub const TRACE_HEADER: &str = "iteration,wall_time_s,primal,dual,gap,active_count,screened_cumulative,screening_rate";
pub const SOLUTION_MAGIC: &[u8; 8] = b"OWLSB001";
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub n: usize,
    pub d: usize,
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub schema_version: u32,
    /// Every option of the run after defaults and config files.
    pub config: serde_json::Value,
    pub dataset: Shape,
    /// Labels behind the one-hot target columns, ascending.
    pub class_labels: Option<Vec<f64>>,
    pub model: String,
    pub solver: String,
    pub screening: bool,
    pub wall_time_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_gap: f64,
    pub objective: f64,
    pub final_active_count: usize,
    /// 0-based ids of the nonzero coefficient rows.
    pub nonzero_rows: Vec<usize>,
    pub screened_count: usize,
    pub final_screening_rate: f64,
    /// File holding the per-iteration screening rate.
    pub screening_rate_curve: String,
    pub lambda_max: f64,
    pub lambda_min: f64,
}

impl RunSummary {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SUMMARY_SCHEMA_VERSION {
            bail!("unknown schema version {}", self.schema_version);
        }
        if !(0.0..=1.0).contains(&self.final_screening_rate) {
            bail!("screening rate {} outside [0, 1]", self.final_screening_rate);
        }
        if self.nonzero_rows.iter().any(|&i| i >= self.dataset.d) || self.final_active_count > self.dataset.d {
            bail!("feature ids out of range");
        }
        if self.nonzero_rows.windows(2).any(|p| p[0] >= p[1]) {
            bail!("nonzero rows not strictly increasing");
        }
        Ok(())
    }
}

pub fn write_trace(path: &Path, trace: &SolverTrace) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "{TRACE_HEADER}")?;
    for r in &trace.rows {
        let rate = r.screening_rate.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.iteration, r.wall_time_s, r.primal, r.dual, r.gap, r.active_count, r.screened_cumulative, rate
        )?;
    }
    w.flush()?;
    Ok(())
}

/// `OWLSB001`, then rows and columns as little-endian `u64`, then the
/// entries row-major as little-endian `f64`.
pub fn write_solution_bin(path: &Path, b: &Array2<f64>) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    w.write_all(SOLUTION_MAGIC)?;
    w.write_all(&(b.nrows() as u64).to_le_bytes())?;
    w.write_all(&(b.ncols() as u64).to_le_bytes())?;
    for v in b.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_solution_bin(path: &Path) -> anyhow::Result<Array2<f64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[..8] != SOLUTION_MAGIC {
        bail!("{} is not a solution file", path.display());
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap()) as usize;
    let (rows, cols) = (word(8), word(16));
    if bytes.len() != 24 + 8 * rows * cols {
        bail!("{}: truncated solution file", path.display());
    }
    let values = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values)?)
}

pub fn write_solution_csv(path: &Path, b: &Array2<f64>) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    let header: Vec<String> = (0..b.ncols()).map(|k| format!("task_{k}")).collect();
    writeln!(w, "feature,{}", header.join(","))?;
    for (i, row) in b.outer_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{i},{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
