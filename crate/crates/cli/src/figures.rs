//! Datasets behind the four figures.

use serde_json::json;
use thinspec::exact::{detect_comb, evolve_exact, extrapolate_sqrt, order_parameter_trace, predicted_t_i, predicted_t_r};
use thinspec::kz::{classify_regime, defect_saturation_law, frozen_defect_density};
use thinspec::model::freeze_out_time;
use thinspec::numerics::{geomspace, linspace};

use crate::config::Scenario;
use crate::error::{CliError, CliResult};
use crate::output::Table;
use crate::run::RunOutput;

pub fn figure(s: &Scenario, number: u8) -> CliResult<RunOutput> {
    match number {
        1 => figure1(s),
        2 => figure2(s),
        3 => figure3(s),
        4 => figure4(s),
        _ => Err(CliError::Config(format!("figure {number} does not exist (1-4)"))),
    }
}

/// Regime map in the `(t0, t)` plane, in units of `t̂`.
fn figure1(s: &Scenario) -> CliResult<RunOutput> {
    let t_hat = freeze_out_time(&s.params);
    let mut table = Table::new("figure1", &[("t0_over_that", "1"), ("t_over_that", "1"), ("regime", "code")]);
    for x0 in geomspace(1e-2, 1e2, 41) {
        for x in geomspace(1e-2, 1e3, 51) {
            if x < x0 {
                continue;
            }
            let code = match classify_regime(x * t_hat, x0 * t_hat, t_hat)? {
                thinspec::kz::RegimeLabel::Impulse => 0.0,
                thinspec::kz::RegimeLabel::PostFreezeOut => 1.0,
                thinspec::kz::RegimeLabel::Adiabatic => 2.0,
            };
            table.push(vec![x0, x, code]);
        }
    }
    Ok(RunOutput {
        tables: vec![table],
        results: json!({
            "regime_codes": {"impulse": 0, "post_freeze_out": 1, "adiabatic": 2},
            "t_hat": t_hat,
        }),
        verdict: None,
    })
}

/// Saturated defect density and `D(t)` traces, computed at `N` and `10 N`.
fn figure2(s: &Scenario) -> CliResult<RunOutput> {
    let p = s.params;
    let p10 = p.with_n(10 * p.n())?;
    let t_hat = freeze_out_time(&p);
    let mut a = Table::new("figure2a", &[("t0_over_that", "1"), ("D_sat", "1"), ("D_sat_law", "1")]);
    for x in geomspace(1e-6, 1e1, 71) {
        let q = p.with_t0(x * t_hat)?;
        let d = frozen_defect_density(&q, q.t0().max(t_hat))?;
        a.push(vec![x, d, defect_saturation_law(x)]);
    }
    let mut b = Table::new("figure2b", &[("t0_over_that", "1"), ("t_over_that", "1"), ("D", "1")]);
    let mut n_diff = 0.0f64;
    for x0 in [1e-3, 1e-2, 1e-1, 0.5] {
        let q = p.with_t0(x0 * t_hat)?;
        let q10 = p10.with_t0(x0 * t_hat)?;
        for x in geomspace(x0, 10.0, 200) {
            let t = (x * t_hat).max(q.t0());
            let d = frozen_defect_density(&q, t)?;
            n_diff = n_diff.max((d - frozen_defect_density(&q10, t)?).abs());
            b.push(vec![x0, x, d]);
        }
    }
    Ok(RunOutput {
        tables: vec![a, b],
        results: json!({
            "N": p.n(),
            "max_abs_diff_N_vs_10N": n_diff,
        }),
        verdict: None,
    })
}

/// `ω(t)` for several `t0` at fixed `N`, and `N ω(t)` for several `N`.
fn figure3(s: &Scenario) -> CliResult<RunOutput> {
    let p = s.params;
    let t_hat = freeze_out_time(&p);
    let t_end = s.grid.t_end_over_that * t_hat;
    let opts = s.tolerances.exact_options();
    let mut a = Table::new(
        "figure3a",
        &[
            ("t0_over_that", "1"),
            ("N", "1"),
            ("t_over_that", "1"),
            ("Re_omega", "1"),
            ("Im_omega", "1"),
        ],
    );
    for x0 in [1e-1, 1e-2, 1e-3] {
        let q = p.with_t0(x0 * t_hat)?;
        let traj = evolve_exact(&q, t_end, &opts)?;
        for t in linspace(q.t0(), t_end, s.grid.points) {
            let w = traj.state_at(t).omega;
            a.push(vec![x0, q.n_f64(), t / t_hat, w.re, w.im]);
        }
    }
    let mut b = Table::new(
        "figure3b",
        &[
            ("N", "1"),
            ("t_over_that", "1"),
            ("N_Re_omega", "1"),
            ("N_Im_omega", "1"),
        ],
    );
    let x0 = 1e-2;
    let mut traces = Vec::new();
    for n in [100, 1000, 10000] {
        let q = p.with_n(n)?.with_t0(x0 * t_hat)?;
        let traj = evolve_exact(&q, t_end, &opts)?;
        let ts = linspace(q.t0(), t_end, s.grid.points);
        let tr: Vec<_> = ts.iter().map(|&t| traj.state_at(t).omega * q.n_f64()).collect();
        for (t, u) in ts.iter().zip(&tr) {
            b.push(vec![n as f64, t / t_hat, u.re, u.im]);
        }
        traces.push(tr);
    }
    let mut worst = 0.0f64;
    for tr in &traces[1..] {
        for (u, v) in traces[0].iter().zip(tr) {
            worst = worst.max((u - v).norm() / u.norm().max(1.0));
        }
    }
    Ok(RunOutput {
        tables: vec![a, b],
        results: json!({
            "t_hat": t_hat,
            "max_rel_diff_N_omega": worst,
        }),
        verdict: None,
    })
}

/// Comb times extrapolated to `t0 → 0`, and the asymptotic traces.
fn figure4(s: &Scenario) -> CliResult<RunOutput> {
    let p = s.params;
    let t_hat = freeze_out_time(&p);
    let k_max = 4;
    let t_end = 1.05 * predicted_t_r(t_hat, k_max);
    let opts = s.tolerances.exact_options();
    let xs = geomspace(1e-2, 1e-4, 5);
    let mut detected = Table::new(
        "figure4_detected",
        &[("t0_over_that", "1"), ("k", "1"), ("t_R", "time"), ("t_I", "time")],
    );
    let mut tr = vec![Vec::new(); k_max + 1];
    let mut ti = vec![Vec::new(); k_max + 1];
    let mut last = None;
    for &x in &xs {
        let q = p.with_t0(x * t_hat)?;
        let traj = evolve_exact(&q, t_end, &opts)?;
        let rep = detect_comb(&traj, k_max)?;
        for k in 0..=k_max {
            let r = rep.events_r[k].detected.unwrap_or(f64::NAN);
            let i = rep.events_i[k].detected.unwrap_or(f64::NAN);
            tr[k].push(r);
            ti[k].push(i);
            detected.push(vec![x, k as f64, r, i]);
        }
        last = Some(traj);
    }
    let mut comb = Table::new(
        "figure4_comb",
        &[
            ("k", "1"),
            ("predicted_t_R", "time"),
            ("extrapolated_t_R", "time"),
            ("predicted_t_I", "time"),
            ("extrapolated_t_I", "time"),
        ],
    );
    let mut dev_r = Vec::new();
    let mut dev_i = Vec::new();
    for k in 0..=k_max {
        let (pr, pi) = (predicted_t_r(t_hat, k), predicted_t_i(t_hat, k));
        let er = extrapolate_sqrt(&xs, &tr[k]).unwrap_or(f64::NAN);
        let ei = extrapolate_sqrt(&xs, &ti[k]).unwrap_or(f64::NAN);
        dev_r.push((er - pr).abs() / pr);
        dev_i.push((ei - pi).abs() / pi);
        comb.push(vec![k as f64, pr, er, pi, ei]);
    }
    let traj = last.expect("at least one t0");
    let times = linspace(traj.t_start(), t_end, s.grid.points.max(2001));
    let states = traj.sample(&times);
    let proxy = order_parameter_trace(&traj, &times)?;
    let proxy = proxy.column("order_parameter_proxy").expect("proxy column");
    let mut omega = Table::new(
        "figure4_traces",
        &[
            ("t_over_that", "1"),
            ("N_Re_omega", "1"),
            ("N_Im_omega", "1"),
            ("order_parameter_proxy", "1"),
        ],
    );
    for (i, st) in states.iter().enumerate() {
        let u = st.omega * p.n_f64();
        omega.push(vec![times[i] / t_hat, u.re, u.im, proxy[i]]);
    }
    Ok(RunOutput {
        tables: vec![comb, detected, omega],
        results: json!({
            "t_hat": t_hat,
            "t0_over_that": xs,
            "extrapolated_rel_deviation_r": dev_r,
            "extrapolated_rel_deviation_i": dev_i,
        }),
        verdict: None,
    })
}
