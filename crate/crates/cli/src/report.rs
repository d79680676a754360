//! Plot-ready data and a text summary for completed runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;
use crate::experiment::{Check, INDEX_FILE, SERIES_FILE, SUMMARY_FILE};

pub const PLOT_FILES: [&str; 4] = [
    "local_energy.dat",
    "scaled_energy.dat",
    "morawetz_residual.dat",
    "weighted_exterior.dat",
];
pub const REPORT_FILE: &str = "report.txt";

fn incomplete(dir: &Path, why: &str) -> CliError {
    CliError::Incomplete(format!("{}: {why}", dir.display()))
}

fn num(v: &Value, path: &[&str]) -> Option<f64> {
    path.iter().try_fold(v, |v, k| v.get(k))?.as_f64()
}

struct Series {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Series {
    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

fn read_series(dir: &Path) -> Result<Series, CliError> {
    let path = dir.join(SERIES_FILE);
    let text = fs::read_to_string(&path).map_err(|_| incomplete(dir, "missing time series"))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| incomplete(dir, "empty time series"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| incomplete(dir, "unparsable time series row"))?;
        if row.len() != header.len() {
            return Err(incomplete(dir, "ragged time series"));
        }
        rows.push(row);
    }
    Ok(Series { header, rows })
}

fn two_column(t: &[f64], y: &[f64]) -> String {
    let mut out = String::new();
    for (a, b) in t.iter().zip(y) {
        let _ = writeln!(out, "{a:e} {b:e}");
    }
    out
}

/// Writes plot files and `report.txt` for one scenario directory.
pub fn report_run(dir: &Path) -> Result<String, CliError> {
    let summary_path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&summary_path).map_err(|_| incomplete(dir, "missing summary"))?;
    let summary: Value =
        serde_json::from_str(&text).map_err(|_| incomplete(dir, "unreadable summary"))?;
    if summary.get("complete") != Some(&Value::Bool(true)) {
        return Err(incomplete(dir, "run did not finish"));
    }
    let series = read_series(dir)?;
    // plots follow the first observation radius
    let radius = summary["scenario"]["radii"]
        .get(0)
        .and_then(Value::as_f64)
        .ok_or_else(|| incomplete(dir, "summary lists no radius"))?;
    let eta = num(&summary, &["eta"]).unwrap_or(f64::NAN);
    let c_min = num(&summary, &["c_min"]).unwrap_or(1.0);
    let support = num(&summary, &["scenario", "support"]).unwrap_or(f64::NAN);
    let i0_sq = num(&summary, &["data_norms", "i0_sq"]).unwrap_or(f64::NAN);
    let a = radius / c_min;

    let t = series
        .column("t")
        .ok_or_else(|| incomplete(dir, "no t column"))?;
    let missing = |c: &str| incomplete(dir, &format!("no {c} column"));
    let er_name = format!("E_R@{radius}");
    let wx_name = format!("wext@{radius}");
    let e_r = series.column(&er_name).ok_or_else(|| missing(&er_name))?;
    let wext = series.column(&wx_name).ok_or_else(|| missing(&wx_name))?;
    let res = series
        .column("morawetz_residual")
        .ok_or_else(|| missing("morawetz_residual"))?;

    let scaled: Vec<f64> = t
        .iter()
        .zip(&e_r)
        .map(|(&t, &e)| {
            if t > a {
                (t - a).powf(1.0 - eta) * e
            } else {
                f64::NAN
            }
        })
        .collect();
    let bound = (2.0 + support) * i0_sq;
    let wratio: Vec<f64> = wext.iter().map(|w| w / bound).collect();
    for (name, y) in PLOT_FILES.iter().zip([&e_r, &scaled, &res, &wratio]) {
        let path = dir.join(name);
        fs::write(&path, two_column(&t, y)).map_err(|e| CliError::io(&path, e))?;
    }

    let checks: Vec<Check> = serde_json::from_value(summary["checks"].clone()).unwrap_or_default();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "run        {}",
        summary["scenario"]["id"].as_str().unwrap_or("?")
    );
    let _ = writeln!(
        out,
        "dim        {}",
        summary["scenario"]["dim"].as_str().unwrap_or("?")
    );
    let _ = writeln!(
        out,
        "L, a       {support} {}",
        num(&summary, &["scenario", "amplitude"]).unwrap_or(f64::NAN)
    );
    let _ = writeln!(
        out,
        "h, dt      {} {:.6e}",
        num(&summary, &["scenario", "h"]).unwrap_or(f64::NAN),
        num(&summary, &["dt"]).unwrap_or(f64::NAN)
    );
    let _ = writeln!(out, "eta        {eta:.7}");
    let _ = writeln!(out, "R, R/c_m   {radius} {a:.6}");
    let _ = writeln!(out, "I0^2       {i0_sq:.6e}");
    let _ = writeln!(out, "samples    {}", t.len());
    let _ = writeln!(
        out,
        "drift      {:.3e}",
        num(&summary, &["conservation_drift"]).unwrap_or(f64::NAN)
    );
    if let Some(m) = num(&summary, &["morawetz_max_ratio"]) {
        let _ = writeln!(out, "morawetz   {m:.3e}");
    }
    let _ = writeln!(out, "checks");
    for c in &checks {
        let value = c.value.map_or(String::new(), |v| format!(" {v:.4e}"));
        let _ = writeln!(out, "  [{}] {}{value}", c.status, c.name);
    }
    let path = dir.join(REPORT_FILE);
    fs::write(&path, &out).map_err(|e| CliError::io(&path, e))?;
    Ok(out)
}

/// Accepts a scenario directory or an experiment directory with an index.
pub fn report(dir: &Path) -> Result<String, CliError> {
    if dir.join(SUMMARY_FILE).exists() {
        return report_run(dir);
    }
    let index_path = dir.join(INDEX_FILE);
    let text =
        fs::read_to_string(&index_path).map_err(|_| incomplete(dir, "no summary or index"))?;
    let index: Value =
        serde_json::from_str(&text).map_err(|_| incomplete(dir, "unreadable index"))?;
    let ids: Vec<PathBuf> = index
        .as_array()
        .ok_or_else(|| incomplete(dir, "malformed index"))?
        .iter()
        .filter_map(|e| e["id"].as_str().map(|id| dir.join(id)))
        .collect();
    if ids.is_empty() {
        return Err(incomplete(dir, "index lists no runs"));
    }
    let mut out = String::new();
    for sub in ids {
        out.push_str(&report_run(&sub)?);
        out.push('\n');
    }
    Ok(out)
}
