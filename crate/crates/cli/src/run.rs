//! Single-scenario runs.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use thinspec::ed::{ed_evolve, ed_static_order_parameter, EdOptions, MAX_SITES};
use thinspec::exact::{detect_comb, evolve_exact, order_parameter_trace, predicted_t_i, ExactOptions};
use thinspec::kz::{
    adiabaticity_bound, classify_regime, defect_saturation_law, frozen_defect_density, impulse_coefficients,
    recursion_fidelity_trace, recursion_times, RegimeLabel,
};
use thinspec::model::{freeze_out_time, static_omega};
use thinspec::numerics::peaks::{local_maxima, median};
use thinspec::spectrum::{dual_thin_energy, static_order_parameter};
use thinspec::{ModelParams, Schedule};

use crate::config::{RunKind, Scenario};
use crate::error::{CliError, CliResult};
use crate::output::{to_json_bytes, write_bytes, Table};

/// Everything a run produces, before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub results: Value,
    /// `Some` for runs that end in a PASS/FAIL verdict.
    pub verdict: Option<bool>,
}

impl RunOutput {
    fn plain(tables: Vec<Table>, results: Value) -> Self {
        RunOutput {
            tables,
            results,
            verdict: None,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a Scenario,
    run: String,
    results: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<&'static str>,
}

pub fn verdict_str(v: bool) -> &'static str {
    if v {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Computes a scenario without touching the filesystem.
pub fn compute(scenario: &Scenario) -> CliResult<RunOutput> {
    scenario.validate()?;
    match scenario.run {
        RunKind::Static => run_static(scenario),
        RunKind::Kz { k_max } => run_kz(scenario, k_max),
        RunKind::Exact { k_max, schedule } => run_exact(scenario, k_max, schedule),
        RunKind::Ed { schedule } => run_ed(scenario, schedule),
        RunKind::Check { name } => crate::check::oracle_check(scenario, name),
        RunKind::Figure { number } => crate::figures::figure(scenario, number),
    }
}

/// Serialized summary document of a finished run.
pub fn summary_bytes(scenario: &Scenario, out: &RunOutput) -> CliResult<Vec<u8>> {
    to_json_bytes(&Summary {
        scenario,
        run: scenario.run.label(),
        results: &out.results,
        verdict: out.verdict.map(verdict_str),
    })
}

/// Runs a scenario and writes `<name>.csv` files plus `summary.json` into
/// `dir`.
pub fn run_scenario(scenario: &Scenario, dir: &Path) -> CliResult<RunOutput> {
    let out = compute(scenario)?;
    write_output(scenario, &out, dir)?;
    Ok(out)
}

pub fn write_output(scenario: &Scenario, out: &RunOutput, dir: &Path) -> CliResult<()> {
    for t in &out.tables {
        write_bytes(&dir.join(format!("{}.csv", t.name)), &t.to_csv()?)?;
    }
    write_bytes(&dir.join("summary.json"), &summary_bytes(scenario, out)?)
}

/// Writes `diagnostics.json` describing a failed run.
pub fn write_diagnostics(scenario: Option<&Scenario>, err: &CliError, dir: &Path) -> CliResult<()> {
    let doc = json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
        "scenario": scenario,
    });
    write_bytes(&dir.join("diagnostics.json"), &to_json_bytes(&doc)?)
}

fn run_static(s: &Scenario) -> CliResult<RunOutput> {
    let p = &s.params;
    let times = s.grid.times(p)?;
    let with_ed = p.n() <= 1000;
    let mut cols = vec![
        ("t", "time"),
        ("H", "energy"),
        ("omega_S", "1"),
        ("E_dual_n1", "energy"),
        ("order_parameter", "1"),
    ];
    if with_ed {
        cols.push(("ed_order_parameter", "1"));
    }
    let mut table = Table::new("static", &cols);
    for &t in &times {
        let h = p.delta() * t;
        if h <= 0.0 {
            continue;
        }
        let mut row = vec![
            t,
            h,
            static_omega(p, h)?,
            dual_thin_energy(p, h, 1)?,
            static_order_parameter(p, h)?,
        ];
        if with_ed {
            row.push(ed_static_order_parameter(p, h)?);
        }
        table.push(row);
    }
    let h0 = p.h0();
    let results = json!({
        "t_hat": freeze_out_time(p),
        "t0": p.t0(),
        "E_thin_magnon": p.j(),
        "E_thin_tower": p.j() / p.n_f64(),
        "omega_S_H0": if h0 > 0.0 { Some(static_omega(p, h0)?) } else { None },
        "order_parameter_H0": if h0 > 0.0 { Some(static_order_parameter(p, h0)?) } else { None },
        "adiabaticity_bound": if h0 > 0.0 { Some(adiabaticity_bound(p)?) } else { None },
    });
    Ok(RunOutput::plain(vec![table], results))
}

fn regime_code(r: RegimeLabel) -> f64 {
    match r {
        RegimeLabel::Impulse => 0.0,
        RegimeLabel::PostFreezeOut => 1.0,
        RegimeLabel::Adiabatic => 2.0,
    }
}

/// Saturated frozen-state defect density and its deviation from the
/// small-t0 law, in units of `1 - D_sat`.
pub fn saturation(p: &ModelParams) -> CliResult<(f64, f64, f64)> {
    let t_hat = freeze_out_time(p);
    let x = p.t0() / t_hat;
    let d_sat = frozen_defect_density(p, p.t0().max(t_hat))?;
    let law = defect_saturation_law(x);
    Ok((d_sat, law, (d_sat - law).abs() / (1.0 - d_sat)))
}

fn run_kz(s: &Scenario, k_max: usize) -> CliResult<RunOutput> {
    let p = &s.params;
    let t_hat = freeze_out_time(p);
    let times = s.grid.times(p)?;
    let c = impulse_coefficients(p, None)?;
    let mut table = Table::new(
        "kz",
        &[
            ("t", "time"),
            ("t_over_that", "1"),
            ("H", "energy"),
            ("D", "1"),
            ("regime", "code"),
            ("kz_fidelity", "1"),
        ],
    );
    let after: Vec<f64> = times.iter().copied().filter(|&t| t >= t_hat).collect();
    let fids = recursion_fidelity_trace(p, &c, &after)?;
    let skip = times.len() - after.len();
    for (i, &t) in times.iter().enumerate() {
        let fid = if i >= skip { fids[i - skip] } else { f64::NAN };
        table.push(vec![
            t,
            t / t_hat,
            p.delta() * t,
            frozen_defect_density(p, t)?,
            regime_code(classify_regime(t, p.t0(), t_hat)?),
            fid,
        ]);
    }
    let (d_sat, law, rel) = saturation(p)?;
    let tk = recursion_times(t_hat, k_max);
    let fk = recursion_fidelity_trace(p, &c, &tk)?;
    let min_f = fk.iter().copied().fold(f64::INFINITY, f64::min);
    let results = json!({
        "t_hat": t_hat,
        "t0_over_that": p.t0() / t_hat,
        "D_sat": d_sat,
        "D_sat_law": law,
        "saturation_rel_deviation": rel,
        "n_max": c.n_max(),
        "captured_weight": c.weight(),
        "recursion_times": tk,
        "recursion_fidelity": fk,
        "min_recursion_fidelity": min_f,
        "recursion_fidelity_within_tolerance": 1.0 - min_f < s.tolerances.kz_fidelity,
        "saturation_within_tolerance": rel < s.tolerances.saturation_rel,
    });
    Ok(RunOutput::plain(vec![table], results))
}

fn exact_options(s: &Scenario, schedule: Schedule) -> ExactOptions {
    ExactOptions {
        schedule,
        ..s.tolerances.exact_options()
    }
}

fn run_exact(s: &Scenario, k_max: usize, schedule: Schedule) -> CliResult<RunOutput> {
    let p = &s.params;
    let times = s.grid.times(p)?;
    let traj = evolve_exact(p, *times.last().expect("non-empty grid"), &exact_options(s, schedule))?;
    let mut series = traj.series(&times)?;
    let proxy = order_parameter_trace(&traj, &times)?;
    for c in proxy.columns {
        series.push(&c.name, &c.unit, c.values)?;
    }
    let report = detect_comb(&traj, k_max)?;
    let max_dev = |ev: &[thinspec::exact::CombEvent]| {
        ev.iter()
            .filter_map(|e| e.rel_deviation)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let results = json!({
        "t_hat": report.t_hat,
        "t0_over_that": p.t0() / report.t_hat,
        "steps": traj.solution.steps.len(),
        "found_r": report.found_r(),
        "found_i": report.found_i(),
        "max_deviation_r": max_dev(&report.events_r),
        "max_deviation_i": max_dev(&report.events_i),
        "comb_within_tolerance": max_dev(&report.events_r).is_some_and(|d| d < s.tolerances.comb_rel)
            && max_dev(&report.events_i).is_some_and(|d| d < s.tolerances.comb_rel),
        "comb": report,
    });
    Ok(RunOutput::plain(vec![Table::from_series("exact", &series)], results))
}

/// ED order-parameter peak times: local maxima of the sampled trace with
/// prominence at least `1e-4 N`, placed at the vertex of the parabola
/// through the three samples around each maximum.
pub fn ed_peak_times(t: &[f64], op: &[f64], n: f64) -> Vec<f64> {
    local_maxima(op, 1e-4 * n)
        .into_iter()
        .map(|i| {
            let (y0, y1, y2) = (op[i - 1], op[i], op[i + 1]);
            let den = y0 - 2.0 * y1 + y2;
            let h = 0.5 * (t[i + 1] - t[i - 1]);
            if den < 0.0 {
                t[i] + 0.5 * h * (y0 - y2) / den
            } else {
                t[i]
            }
        })
        .collect()
}

/// Nearest detection to each prediction, with relative deviation.
pub fn match_nearest(predicted: &[f64], detected: &[f64]) -> Vec<(f64, Option<f64>, Option<f64>)> {
    predicted
        .iter()
        .map(|&pk| {
            let best = detected
                .iter()
                .copied()
                .min_by(|a, b| (a - pk).abs().total_cmp(&(b - pk).abs()));
            (pk, best, best.map(|d| (d - pk).abs() / pk))
        })
        .collect()
}

pub fn ed_options(s: &Scenario, schedule: Schedule) -> EdOptions {
    EdOptions {
        schedule,
        ..s.tolerances.ed_options()
    }
}

fn run_ed(s: &Scenario, schedule: Schedule) -> CliResult<RunOutput> {
    let p = &s.params;
    if p.n() > MAX_SITES {
        return Err(CliError::Config(format!("N = {} exceeds the ED limit {MAX_SITES}", p.n())));
    }
    let times = s.grid.times(p)?;
    let run = ed_evolve(p, &times, &ed_options(s, schedule))?;
    let t_hat = freeze_out_time(p);
    let op = run.series.column("order_parameter").expect("ED series has order_parameter");
    let d = run.series.column("defect_density").expect("ED series has defect_density");
    let peaks = ed_peak_times(&times, op, p.n_f64());
    let t_end = *times.last().expect("non-empty grid");
    let predicted: Vec<f64> = (0..)
        .map(|k| predicted_t_i(t_hat, k))
        .take_while(|&t| t <= t_end)
        .collect();
    let nearest = match_nearest(&predicted, &peaks);
    let peaks_ok = !nearest.is_empty() && nearest.iter().all(|m| m.2.is_some_and(|d| d < s.tolerances.ed_peak_rel));
    let matched: Vec<Value> = nearest
        .into_iter()
        .enumerate()
        .map(|(k, (pk, det, dev))| json!({"k": k, "predicted": pk, "detected": det, "rel_deviation": dev}))
        .collect();
    let after: Vec<f64> = times.iter().zip(d).filter(|(t, _)| **t >= t_hat).map(|(_, v)| *v).collect();
    let results = json!({
        "t_hat": t_hat,
        "t0_over_that": p.t0() / t_hat,
        "steps": run.steps,
        "max_norm_drift": run.max_norm_drift,
        "order_parameter_peaks": peaks,
        "peak_matches": matched,
        "peaks_within_tolerance": peaks_ok,
        "D_after_freeze_out_median": if after.is_empty() { None } else { Some(median(&after)) },
    });
    Ok(RunOutput::plain(vec![Table::from_series("ed", &run.series)], results))
}
