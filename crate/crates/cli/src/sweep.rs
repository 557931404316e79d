//! Parallel parameter sweeps with per-point failure isolation.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{apply_coords, AxisName, SweepSpec};
use crate::error::{CliError, CliResult};
use crate::output::{to_json_bytes, write_bytes, Table};
use crate::run::{compute, summary_bytes, verdict_str};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub index: usize,
    pub coords: Vec<(String, f64)>,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Value>,
    #[serde(skip)]
    pub files: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub total: usize,
    pub failed: Vec<usize>,
    pub points: Vec<PointResult>,
}

fn run_point(spec: &SweepSpec, index: usize, coords: &[(AxisName, f64)]) -> PointResult {
    let named = coords.iter().map(|(n, v)| (n.as_str().to_string(), *v)).collect();
    let outcome = apply_coords(&spec.template, coords).and_then(|sc| {
        let out = compute(&sc)?;
        let mut files = Vec::new();
        for t in &out.tables {
            files.push((format!("{}.csv", t.name), t.to_csv()?));
        }
        files.push(("summary.json".to_string(), summary_bytes(&sc, &out)?));
        Ok((out, files))
    });
    match outcome {
        Ok((out, files)) => PointResult {
            index,
            coords: named,
            status: "ok",
            error: None,
            verdict: out.verdict.map(verdict_str),
            results: Some(out.results),
            files,
        },
        Err(e) => PointResult {
            index,
            coords: named,
            status: "failed",
            error: Some(format!("{} (exit {})", e, e.exit_code())),
            verdict: None,
            results: None,
            files: Vec::new(),
        },
    }
}

/// Runs every point on a pool of `workers` threads. Results come back in
/// point order whatever the pool size.
pub fn compute_sweep(spec: &SweepSpec, workers: usize) -> CliResult<SweepReport> {
    spec.validate()?;
    let points = spec.points()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, c)| run_point(spec, i, c))
            .collect()
    });
    Ok(SweepReport {
        spec: spec.clone(),
        total: results.len(),
        failed: results.iter().filter(|r| r.status != "ok").map(|r| r.index).collect(),
        points: results,
    })
}

/// One row per point: coordinates, then every top-level numeric result.
pub fn aggregate_table(report: &SweepReport) -> Table {
    let axes: Vec<String> = report.spec.axes.iter().map(|a| a.name.as_str().to_string()).collect();
    let mut keys = BTreeSet::new();
    for p in &report.points {
        if let Some(Value::Object(m)) = &p.results {
            keys.extend(m.iter().filter(|(_, v)| v.is_number()).map(|(k, _)| k.clone()));
        }
    }
    let mut headers = vec!["index[1]".to_string()];
    headers.extend(axes.iter().map(|a| format!("{a}[1]")));
    headers.push("ok[1]".to_string());
    headers.extend(keys.iter().map(|k| format!("{k}[1]")));
    let rows = report
        .points
        .iter()
        .map(|p| {
            let mut r = vec![p.index as f64];
            r.extend(p.coords.iter().map(|c| c.1));
            r.push(if p.status == "ok" { 1.0 } else { 0.0 });
            for k in &keys {
                let v = p
                    .results
                    .as_ref()
                    .and_then(|m| m.get(k))
                    .and_then(Value::as_f64)
                    .unwrap_or(f64::NAN);
                r.push(v);
            }
            r
        })
        .collect();
    Table {
        name: "sweep".to_string(),
        headers,
        rows,
    }
}

/// Runs a sweep and writes `sweep.csv`, `sweep_summary.json` and each
/// point's files under `point_<index>/`.
pub fn run_sweep(spec: &SweepSpec, workers: usize, dir: &Path) -> CliResult<SweepReport> {
    let report = compute_sweep(spec, workers)?;
    for p in &report.points {
        for (name, bytes) in &p.files {
            write_bytes(&dir.join(format!("point_{:05}", p.index)).join(name), bytes)?;
        }
    }
    write_bytes(&dir.join("sweep.csv"), &aggregate_table(&report).to_csv()?)?;
    write_bytes(&dir.join("sweep_summary.json"), &to_json_bytes(&report)?)?;
    Ok(report)
}
