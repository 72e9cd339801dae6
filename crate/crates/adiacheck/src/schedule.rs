//! Sampled Hamiltonian schedules stored as JSON:
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "hbar": 1.0,
//!   "times": [0.0, 0.5, 1.0],
//!   "matrices": [
//!     [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]],
//!     ...
//!   ]
//! }
//! ```
//!
//! Each matrix is a list of rows, each entry a `[re, im]` pair. Times must be
//! uniformly spaced.

use std::path::Path;

use adiacheck_core::models::DEFAULT_HERMITICITY_TOL;
use adiacheck_core::{CMatrix, SampledModel, C64};
use anyhow::{bail, Context};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    dimension: usize,
    #[serde(default = "one")]
    hbar: f64,
    times: Vec<f64>,
    matrices: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    hermiticity_tol: Option<f64>,
}

fn one() -> f64 {
    1.0
}

pub fn parse_schedule(text: &str) -> anyhow::Result<SampledModel> {
    let file: ScheduleFile = serde_json::from_str(text).context("malformed schedule JSON")?;
    let n = file.dimension;
    if n == 0 {
        bail!("schedule dimension must be positive");
    }
    if file.times.len() != file.matrices.len() {
        bail!(
            "schedule has {} times but {} matrices",
            file.times.len(),
            file.matrices.len()
        );
    }
    let mut samples = Vec::with_capacity(file.matrices.len());
    for (k, rows) in file.matrices.iter().enumerate() {
        if rows.len() != n {
            bail!("matrix {k} has {} rows, expected {n}", rows.len());
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                bail!("matrix {k} row {i} has {} entries, expected {n}", row.len());
            }
            data.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
        }
        samples.push(CMatrix::from_row_major(n, n, data)?);
    }
    let tol = file.hermiticity_tol.unwrap_or(DEFAULT_HERMITICITY_TOL);
    Ok(SampledModel::from_times(&file.times, samples, file.hbar, tol)?)
}

pub fn load_schedule(path: &Path) -> anyhow::Result<SampledModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read schedule file {}", path.display()))?;
    parse_schedule(&text).with_context(|| format!("in schedule file {}", path.display()))
}
