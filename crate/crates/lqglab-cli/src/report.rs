//! Manifest and CSV emission for `run`.
//!
//! A run produces `manifest.json` (tool version, timestamps, config echo,
//! every report), `reports.csv` (one row per graded report), and one or
//! more `<check>.<stem>.csv` plot-data files per check. Reruns with the
//! same config reproduce every estimate bit-exactly; only the wall-clock
//! fields (`started_at`, `finished_at`, `runtime_ms`) differ.

use crate::config::RunConfig;
use lqglab::laws::LawReport;
use lqglab::{Error, Result};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Numeric plot data: named columns, one `Vec<f64>` row per point.
#[derive(Debug, Clone)]
pub struct PlotFile {
    /// File stem; the file is written as `<check>.<stem>.csv`.
    pub stem: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Everything one check hands back to the orchestrator.
#[derive(Debug, Clone)]
pub struct CheckOutput {
    pub reports: Vec<LawReport>,
    pub plots: Vec<PlotFile>,
}

/// One executed check inside the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct CheckSection {
    pub check: String,
    pub reports: Vec<LawReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: ToolInfo,
    pub started_at: String,
    pub finished_at: String,
    pub config: RunConfig,
    pub checks: Vec<CheckSection>,
    pub all_passed: bool,
}

/// Seconds since the Unix epoch with millisecond resolution.
pub fn unix_timestamp() -> String {
    let d = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    format!("{}.{:03}", d.as_secs(), d.subsec_millis())
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::param(format!("cannot write {}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Format a float for CSV: shortest round-trip decimal, empty for NaN-free
/// callers to rely on (`NaN` prints as `NaN` on purpose, keeping failed
/// estimates visible).
fn num(v: f64) -> String {
    format!("{v}")
}

fn reports_csv(checks: &[CheckSection]) -> String {
    let mut out = String::from(
        "check,name,estimate,stderr,target,tolerance,n,seed,verdict,runtime_ms,params\n",
    );
    for section in checks {
        for r in &section.reports {
            let target = r.target.map(num).unwrap_or_default();
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let verdict = if r.passed() { "pass" } else { "fail" };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                section.check,
                r.name,
                num(r.estimate),
                num(r.stderr),
                target,
                num(r.tolerance),
                r.n,
                r.seed,
                verdict,
                r.runtime_ms,
                params.join(";"),
            ));
        }
    }
    out
}

fn plot_csv(plot: &PlotFile) -> String {
    let mut out = plot.columns.join(",");
    out.push('\n');
    for row in &plot.rows {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Write the manifest, the flat report table, and every plot file into
/// `config.output_dir`. Returns the manifest path.
pub fn write_outputs(
    config: &RunConfig,
    manifest: &RunManifest,
    plots: &[(String, PlotFile)],
) -> Result<PathBuf> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::numerical(format!("manifest serialization failed: {e}")))?;
    write_file(&manifest_path, &(json + "\n"))?;
    write_file(&dir.join("reports.csv"), &reports_csv(&manifest.checks))?;
    for (check, plot) in plots {
        let path = dir.join(format!("{check}.{}.csv", plot.stem));
        write_file(&path, &plot_csv(plot))?;
    }
    Ok(manifest_path)
}
