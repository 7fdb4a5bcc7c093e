//! Plot-ready CSV files.
//!
//! Floats are written in scientific notation with 9 significant digits.
//! Agent indices are 1-based. Rows come out in sweep, scheme, agent order.

use std::path::Path;

use csv::Writer;

use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::mu_game::EquilibriumReport;

use super::experiment::ExperimentResult;

/// 9 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// One long-format row of the trend file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub sweep_var: String,
    pub sweep_value: Option<f64>,
    pub scheme: String,
    pub metric: String,
    pub value: f64,
}

pub const TREND_HEADER: [&str; 5] = ["sweep_var", "sweep_value", "scheme", "metric", "value"];
pub const ALLOCATION_HEADER: [&str; 6] = ["asp", "mu", "f_tflops", "b_mhz", "reward", "qoe_ms"];

/// Which family of files [`emit_csv`] writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    /// `trend.csv`: every metric at every sweep point.
    Trend,
    /// `allocation_<scheme>.csv` per unswept run: per-pair resources, reward and QoE.
    Allocation,
    /// `trajectory_<point>_<scheme>.csv` per game run.
    Trajectory,
}

fn open(path: &Path) -> Result<Writer<std::fs::File>> {
    Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.into(),
        source,
    })
}

fn write_rows<I>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let wrap = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = open(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trend(path: &Path, rows: &[TrendRow]) -> Result<()> {
    let header: Vec<String> = TREND_HEADER.iter().map(|s| s.to_string()).collect();
    write_rows(
        path,
        &header,
        rows.iter().map(|r| {
            vec![
                r.sweep_var.clone(),
                r.sweep_value.map(fmt_float).unwrap_or_default(),
                r.scheme.clone(),
                r.metric.clone(),
                fmt_float(r.value),
            ]
        }),
    )
}

/// Per-pair allocation table in TFLOPS, MHz and milliseconds.
pub fn write_allocation(
    path: &Path,
    scenario: &Scenario,
    rewards: &crate::model::RewardMatrix,
    alloc: &crate::model::Allocation,
    qoe: &crate::model::Grid<f64>,
) -> Result<()> {
    let header: Vec<String> = ALLOCATION_HEADER.iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for n in 0..scenario.n_asps() {
        for m in 0..scenario.n_mus() {
            rows.push(vec![
                (n + 1).to_string(),
                (m + 1).to_string(),
                fmt_float(alloc.f[(n, m)] / 1e12),
                fmt_float(alloc.b[(n, m)] / 1e6),
                fmt_float(rewards[(n, m)]),
                fmt_float(qoe[(n, m)] * 1e3),
            ]);
        }
    }
    write_rows(path, &header, rows)
}

/// Round 0 is the starting point; its utility change column is empty.
pub fn write_trajectory(path: &Path, report: &EquilibriumReport) -> Result<()> {
    let mm = report.mu_utilities.len();
    let mut header = vec!["round".to_string(), "sum_abs_utility_change".to_string()];
    header.extend((1..=mm).map(|m| format!("mu_utility_{m}")));
    let rows = report
        .mu_utility_trajectory
        .iter()
        .enumerate()
        .map(|(t, us)| {
            let mut row = vec![t.to_string()];
            row.push(match t {
                0 => String::new(),
                _ => report.utility_change.get(t - 1).map(|&v| fmt_float(v)).unwrap_or_default(),
            });
            row.extend(us.iter().map(|&u| fmt_float(u)));
            row
        });
    write_rows(path, &header, rows)
}

/// File-name form of a scheme label.
pub fn file_tag(scheme: &str) -> String {
    scheme
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Writes every file of `kind` for `result` into `dir` and returns their paths.
pub fn emit_csv(result: &ExperimentResult, kind: CsvKind, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    match kind {
        CsvKind::Trend => {
            let path = dir.join("trend.csv");
            write_trend(&path, &result.trend_rows())?;
            files.push(path);
        }
        CsvKind::Allocation => {
            if result.record.sweep_var.is_some() {
                return Ok(files);
            }
            for p in &result.points {
                if let (Ok(out), Some(scenario)) = (&p.outcome, &p.scenario) {
                    let path = dir.join(format!("allocation_{}.csv", file_tag(&p.scheme)));
                    write_allocation(&path, scenario, &out.rewards, &out.alloc, &out.qoe)?;
                    files.push(path);
                }
            }
        }
        CsvKind::Trajectory => {
            for p in &result.points {
                if let Ok(out) = &p.outcome {
                    if let Some(report) = &out.report {
                        let path = dir.join(format!(
                            "trajectory_{}_{}.csv",
                            p.index,
                            file_tag(&p.scheme)
                        ));
                        write_trajectory(&path, report)?;
                        files.push(path);
                    }
                }
            }
        }
    }
    Ok(files)
}
