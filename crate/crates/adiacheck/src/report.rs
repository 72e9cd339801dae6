//! JSON and CSV report files.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use adiacheck_core::analysis::Analysis;
use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes CSV rows to `path`, preceded by a `# generated_at=...` line when
/// `timestamp` is set.
pub fn write_csv(
    path: &Path,
    header: &[String],
    rows: &[Vec<String>],
    timestamp: bool,
) -> anyhow::Result<()> {
    let mut out = Vec::new();
    if timestamp {
        out.extend_from_slice(format!("# generated_at={}\n", unix_seconds()).as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    std::fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

#[derive(Serialize)]
struct Verdicts {
    necessary: bool,
    sufficient: bool,
}

#[derive(Serialize)]
struct Summary {
    peak_necessary: f64,
    peak_d0: f64,
    peak_dn: f64,
    min_u_floor: f64,
}

#[derive(Serialize)]
struct GridEcho {
    t_start: f64,
    t_end: f64,
    steps: usize,
}

#[derive(Serialize)]
struct LevelSeries<'a> {
    level: usize,
    multiplicity: usize,
    necessary: &'a [f64],
    /// `D^n_g` for each `g`.
    sufficient: &'a [Vec<f64>],
}

#[derive(Serialize)]
struct Series<'a> {
    t: &'a [f64],
    d0: &'a [f64],
    u_floor: &'a [f64],
    levels: Vec<LevelSeries<'a>>,
}

#[derive(Serialize)]
struct ConditionJson<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at: Option<u64>,
    config: &'a RunConfig,
    dimension: usize,
    multiplicities: &'a [usize],
    energies_t0: Vec<f64>,
    grid: GridEcho,
    verdicts: Verdicts,
    summary: Summary,
    warnings: &'a [String],
    series: Series<'a>,
}

pub fn condition_csv(analysis: &Analysis) -> (Vec<String>, Vec<Vec<String>>) {
    let r = &analysis.report;
    let mut header = vec!["t".to_string()];
    for l in &r.levels {
        header.push(format!("necessary_{}", l.level));
    }
    header.push("d0".into());
    for l in &r.levels {
        for g in 0..l.multiplicity {
            header.push(format!("d{}_{}", l.level, g));
        }
    }
    header.push("u_floor".into());

    let rows = (0..r.times.len())
        .map(|k| {
            let mut row = vec![fmt_f64(r.times[k])];
            row.extend(r.levels.iter().map(|l| fmt_f64(l.necessary[k])));
            row.push(fmt_f64(r.d0[k]));
            for l in &r.levels {
                row.extend(l.sufficient.iter().map(|s| fmt_f64(s[k])));
            }
            row.push(fmt_f64(r.u_floor[k]));
            row
        })
        .collect();
    (header, rows)
}

/// Writes `report.json` and `report.csv` into the output directory and
/// returns their paths.
pub fn write_condition_report(
    config: &RunConfig,
    analysis: &Analysis,
) -> anyhow::Result<(PathBuf, PathBuf)> {
    let dir = &config.output.dir;
    ensure_dir(dir)?;
    let r = &analysis.report;
    let spectrum = &analysis.spectrum;
    let grid = spectrum.grid();
    let structure = spectrum.structure();
    let doc = ConditionJson {
        generated_at: config.output.timestamp.then(unix_seconds),
        config,
        dimension: structure.dimension(),
        multiplicities: structure.multiplicities(),
        energies_t0: (0..structure.level_count())
            .map(|n| structure.energy(n, 0))
            .collect(),
        grid: GridEcho {
            t_start: grid.t_start(),
            t_end: grid.t_end(),
            steps: grid.steps(),
        },
        verdicts: Verdicts {
            necessary: r.necessary_pass,
            sufficient: r.sufficient_pass,
        },
        summary: Summary {
            peak_necessary: r.peak_necessary(),
            peak_d0: r.peak_d0(),
            peak_dn: r.peak_dn(),
            min_u_floor: r.min_u_floor(),
        },
        warnings: &analysis.warnings,
        series: Series {
            t: &r.times,
            d0: &r.d0,
            u_floor: &r.u_floor,
            levels: r
                .levels
                .iter()
                .map(|l| LevelSeries {
                    level: l.level,
                    multiplicity: l.multiplicity,
                    necessary: &l.necessary,
                    sufficient: &l.sufficient,
                })
                .collect(),
        },
    };
    let json_path = dir.join("report.json");
    write_json(&json_path, &doc)?;
    let (header, rows) = condition_csv(analysis);
    let csv_path = dir.join("report.csv");
    write_csv(&csv_path, &header, &rows, config.output.timestamp)?;
    Ok((json_path, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -7.25e12] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_timestamp_line_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let header = vec!["t".to_string(), "x".to_string()];
        let rows = vec![vec!["0".to_string(), "1".to_string()]];
        write_csv(&path, &header, &rows, false).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,x\n0,1\n");
        write_csv(&path, &header, &rows, true).unwrap();
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("# generated_at="));
    }
}
