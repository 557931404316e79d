//! Oracle cross-checks: two independent routes to one quantity.

use serde_json::json;
use thinspec::ed::{ed_evolve, ed_static_order_parameter, wigner_eckart_max_error};
use thinspec::exact::{evolve_exact, wavefunction_at, ExactTrajectory, FidelityReference};
use thinspec::grid::{grid_evolve, GridConfig};
use thinspec::kz::{impulse_coefficients, recursion_fidelity_trace, recursion_times};
use thinspec::model::freeze_out_time;
use thinspec::numerics::linspace;
use thinspec::numerics::peaks::refine_maximum;
use thinspec::spectrum::static_order_parameter;
use thinspec::{ModelParams, Schedule};

use crate::config::{CheckName, Scenario};
use crate::error::CliResult;
use crate::output::Table;
use crate::run::{ed_options, RunOutput};

pub fn oracle_check(s: &Scenario, name: CheckName) -> CliResult<RunOutput> {
    match name {
        CheckName::ExactVsGrid => exact_vs_grid(s),
        CheckName::KzVsExact => kz_vs_exact(s),
        CheckName::EdVsContinuum => ed_vs_continuum(s),
        CheckName::WignerEckartVsClebschGordan => wigner_eckart(s),
    }
}

/// Largest L² distance per output time between a grid run and the
/// Gaussian reconstruction, plus the run's norm drift.
pub fn grid_errors(
    p: &ModelParams,
    traj: &ExactTrajectory,
    cfg: &GridConfig,
    times: &[f64],
) -> CliResult<(Vec<f64>, f64)> {
    let init = traj.state_at(times[0]).hermite_state(1)?;
    let run = grid_evolve(p, cfg, &init, times)?;
    let errs = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let st = traj.state_at(t);
            run.l2_distance(k, |x| wavefunction_at(&st, 1, x).unwrap_or_default())
        })
        .collect();
    Ok((errs, run.norm_drift))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn exact_vs_grid(s: &Scenario) -> CliResult<RunOutput> {
    let p = &s.params;
    let tol = &s.tolerances;
    let t_end = s.grid.t_end_over_that * freeze_out_time(p);
    let times = linspace(p.t0(), t_end, s.grid.points.clamp(2, 201));
    let traj = evolve_exact(p, t_end, &tol.exact_options())?;
    let fine = s.grid_solver;
    let coarse = GridConfig {
        n_points: fine.n_points / 2,
        dt: 2.0 * fine.dt,
        ..fine
    };
    let (e_fine, drift_fine) = grid_errors(p, &traj, &fine, &times)?;
    let (e_coarse, drift_coarse) = grid_errors(p, &traj, &coarse, &times)?;
    let (m_fine, m_coarse) = (max_of(&e_fine), max_of(&e_coarse));
    let order = (m_coarse / m_fine).log2();
    let drift = drift_fine.max(drift_coarse);
    let pass = m_fine < tol.grid_l2 && order >= tol.grid_order && drift < tol.norm_drift;
    let mut table = Table::new("exact_vs_grid", &[("t", "time"), ("l2_fine", "1"), ("l2_coarse", "1")]);
    for i in 0..times.len() {
        table.push(vec![times[i], e_fine[i], e_coarse[i]]);
    }
    Ok(RunOutput {
        tables: vec![table],
        results: json!({
            "metric": m_fine,
            "tolerance": tol.grid_l2,
            "max_l2_fine": m_fine,
            "max_l2_coarse": m_coarse,
            "observed_order": order,
            "norm_drift": drift,
            "fine": fine,
            "coarse": coarse,
        }),
        verdict: Some(pass),
    })
}

/// Maximum of a sampled function over `[a, b]`, refined on the dense
/// trajectory.
fn window_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let ts = linspace(a, b, samples);
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let i = (0..vals.len()).max_by(|&x, &y| vals[x].total_cmp(&vals[y])).unwrap_or(0);
    let lo = ts[i.saturating_sub(1)];
    let hi = ts[(i + 1).min(ts.len() - 1)];
    refine_maximum(f, lo, hi, 1e-12 * hi.abs().max(1.0))
}

fn kz_vs_exact(s: &Scenario) -> CliResult<RunOutput> {
    let t_hat = freeze_out_time(&s.params);
    let p = s.params.with_t0(2.0 * t_hat)?;
    let tol = &s.tolerances;
    let k_max = 5;
    let tk = recursion_times(t_hat, k_max + 1);
    let traj = evolve_exact(&p, tk[k_max + 1], &tol.exact_options())?;
    let f_exact = |t: f64| {
        traj.fidelity(&traj.state_at(t), FidelityReference::KzRecursion)
            .unwrap_or(f64::NAN)
    };
    let c = impulse_coefficients(&p, None)?;
    let f_kz = |t: f64| -> CliResult<f64> { Ok(recursion_fidelity_trace(&p, &c, &[t])?[0]) };
    let mut events = Vec::new();
    let mut worst = 0.0f64;
    for k in 1..=k_max {
        let a = (0.5 * (tk[k - 1] + tk[k])).max(p.t0());
        let b = 0.5 * (tk[k] + tk[k + 1]);
        let (t_peak, f_peak) = window_max(&f_exact, a, b, 400);
        let dev = (t_peak - tk[k]).abs() / tk[k];
        worst = worst.max(dev);
        events.push(json!({
            "k": k,
            "t_k": tk[k],
            "exact_peak": t_peak,
            "exact_peak_fidelity": f_peak,
            "kz_fidelity_at_t_k": f_kz(tk[k])?,
            "rel_deviation": dev,
        }));
    }
    let mut table = Table::new("kz_vs_exact", &[("t", "time"), ("exact_fidelity", "1"), ("kz_fidelity", "1")]);
    let ts = linspace(p.t0(), tk[k_max + 1], 1001);
    for (&t, f) in ts.iter().zip(recursion_fidelity_trace(&p, &c, &ts)?) {
        table.push(vec![t, f_exact(t), f]);
    }
    Ok(RunOutput {
        tables: vec![table],
        results: json!({
            "metric": worst,
            "tolerance": tol.kz_vs_exact,
            "t0_over_that": 2.0,
            "events": events,
        }),
        verdict: Some(worst < tol.kz_vs_exact),
    })
}

fn ed_vs_continuum(s: &Scenario) -> CliResult<RunOutput> {
    let p = &s.params;
    p.require_ed_sector()?;
    let tol = &s.tolerances;
    let t_hat = freeze_out_time(p);
    let times = s.grid.times(p)?;
    let t_end = *times.last().expect("non-empty grid");
    let ed = ed_evolve(p, &times, &ed_options(s, Schedule::Ramp))?;
    let traj = evolve_exact(p, t_end, &tol.exact_options())?;
    let d_ed = ed.series.column("defect_density").expect("ED series has defect_density");
    let mut table = Table::new("ed_vs_continuum", &[("t", "time"), ("D_ed", "1"), ("D_continuum", "1")]);
    let mut worst = 0.0f64;
    for (i, &t) in times.iter().enumerate() {
        let d_c = 1.0 - traj.fidelity(&traj.state_at(t), FidelityReference::Instantaneous)?;
        if t >= t_hat {
            worst = worst.max((d_ed[i] - d_c).abs());
        }
        table.push(vec![t, d_ed[i], d_c]);
    }
    let static_dev = |h: f64| -> CliResult<f64> {
        let e = ed_static_order_parameter(p, h)?;
        let c = static_order_parameter(p, h)?;
        Ok((e - c).abs() / c)
    };
    let h_end = p.delta() * t_end;
    Ok(RunOutput {
        tables: vec![table],
        results: json!({
            "metric": worst,
            "tolerance": tol.ed_vs_continuum,
            "max_norm_drift": ed.max_norm_drift,
            "static_order_parameter_rel_deviation_H0": if p.h0() > 0.0 { Some(static_dev(p.h0())?) } else { None },
            "static_order_parameter_rel_deviation_H_end": static_dev(h_end)?,
        }),
        verdict: Some(worst < tol.ed_vs_continuum && ed.max_norm_drift < tol.norm_drift),
    })
}

fn wigner_eckart(s: &Scenario) -> CliResult<RunOutput> {
    let n = s.params.n();
    let mut sizes = vec![4, 8];
    if n <= 24 && !sizes.contains(&n) {
        sizes.push(n);
    }
    let mut table = Table::new("wigner_eckart", &[("N", "1"), ("max_error", "1")]);
    let mut worst = 0.0f64;
    for &m in &sizes {
        let e = wigner_eckart_max_error(m)?;
        worst = worst.max(e);
        table.push(vec![m as f64, e]);
    }
    Ok(RunOutput {
        tables: vec![table],
        results: json!({
            "metric": worst,
            "tolerance": s.tolerances.wigner_eckart,
            "sizes": sizes,
        }),
        verdict: Some(worst < s.tolerances.wigner_eckart),
    })
}
