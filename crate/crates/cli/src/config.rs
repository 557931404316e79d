//! Scenario and sweep configuration, parsed from JSON.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thinspec::grid::{GridConfig, GridScheme};
use thinspec::model::freeze_out_time;
use thinspec::numerics::{geomspace, linspace};
use thinspec::{ModelParams, Schedule};

use crate::error::{CliError, CliResult};

/// Numerical tolerances in one place. Each field names the check it serves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the exact flow; comb detection and the N-scaling
    /// comparison (agreement required within 10× this value).
    pub exact_rtol: f64,
    pub exact_atol: f64,
    /// ED local error per unit time; ED peak-time comparison.
    pub ed_tol: f64,
    /// Largest allowed L² distance in exact-vs-grid.
    pub grid_l2: f64,
    /// Smallest observed convergence order accepted in exact-vs-grid.
    pub grid_order: f64,
    /// Relative deviation of detected comb times from the asymptotic forms.
    pub comb_rel: f64,
    /// Largest fidelity deficit of the KZ state at the recursion times.
    pub kz_fidelity: f64,
    /// Largest relative deviation of recursion times in kz-vs-exact.
    pub kz_vs_exact: f64,
    /// Relative deviation of the saturated defect density from its
    /// small-t0 law, in units of `1 - D_sat`.
    pub saturation_rel: f64,
    /// Relative deviation of ED order-parameter peaks from `t_k^I`.
    pub ed_peak_rel: f64,
    /// Largest |D_ED - D_continuum| after freeze-out in ed-vs-continuum.
    pub ed_vs_continuum: f64,
    /// Closed-form vs brute-force staggered matrix elements.
    pub wigner_eckart: f64,
    /// Norm drift of the ED and grid evolutions.
    pub norm_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact_rtol: 1e-10,
            exact_atol: 1e-14,
            ed_tol: 1e-6,
            grid_l2: 1e-5,
            grid_order: 1.9,
            comb_rel: 0.02,
            kz_fidelity: 1e-6,
            kz_vs_exact: 0.1,
            saturation_rel: 0.05,
            ed_peak_rel: 0.05,
            ed_vs_continuum: 0.05,
            wigner_eckart: 1e-12,
            norm_drift: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn exact_options(&self) -> thinspec::exact::ExactOptions {
        thinspec::exact::ExactOptions {
            rtol: self.exact_rtol,
            atol: self.exact_atol,
            ..Default::default()
        }
    }

    pub fn ed_options(&self) -> thinspec::ed::EdOptions {
        thinspec::ed::EdOptions {
            tol: self.ed_tol,
            ..Default::default()
        }
    }

    fn validate(&self) -> CliResult<()> {
        let all = [
            self.exact_rtol,
            self.exact_atol,
            self.ed_tol,
            self.grid_l2,
            self.grid_order,
            self.comb_rel,
            self.kz_fidelity,
            self.kz_vs_exact,
            self.saturation_rel,
            self.ed_peak_rel,
            self.ed_vs_continuum,
            self.wigner_eckart,
            self.norm_drift,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CliError::Config("tolerances must be finite and positive".into()));
        }
        Ok(())
    }
}

/// Oracle cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    ExactVsGrid,
    KzVsExact,
    EdVsContinuum,
    WignerEckartVsClebschGordan,
}

impl std::str::FromStr for CheckName {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CliError::Config(format!("unknown check '{s}'")))
    }
}

impl CheckName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::ExactVsGrid => "exact-vs-grid",
            CheckName::KzVsExact => "kz-vs-exact",
            CheckName::EdVsContinuum => "ed-vs-continuum",
            CheckName::WignerEckartVsClebschGordan => "wigner-eckart-vs-clebsch-gordan",
        }
    }
}

fn default_k_max() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunKind {
    Static,
    Kz {
        #[serde(default = "default_k_max")]
        k_max: usize,
    },
    Exact {
        #[serde(default = "default_k_max")]
        k_max: usize,
        #[serde(default)]
        schedule: Schedule,
    },
    Ed {
        #[serde(default)]
        schedule: Schedule,
    },
    Check {
        name: CheckName,
    },
    Figure {
        number: u8,
    },
}

impl RunKind {
    pub fn label(&self) -> String {
        match self {
            RunKind::Static => "static".into(),
            RunKind::Kz { .. } => "kz".into(),
            RunKind::Exact { .. } => "exact".into(),
            RunKind::Ed { .. } => "ed".into(),
            RunKind::Check { name } => format!("check {}", name.as_str()),
            RunKind::Figure { number } => format!("figure {number}"),
        }
    }
}

/// Output time grid `t0 ..= t_end_over_that · t̂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputGrid {
    pub t_end_over_that: f64,
    pub points: usize,
}

impl Default for OutputGrid {
    fn default() -> Self {
        OutputGrid {
            t_end_over_that: 10.0,
            points: 1001,
        }
    }
}

/// Hard cap on output grid size.
pub const MAX_GRID_POINTS: usize = 10_000_000;

impl OutputGrid {
    pub fn times(&self, p: &ModelParams) -> CliResult<Vec<f64>> {
        let t0 = p.t0();
        let t_end = self.t_end_over_that * freeze_out_time(p);
        if !(t_end.is_finite() && t_end > t0) {
            return Err(CliError::Config(format!("output grid end {t_end} must exceed t0 = {t0}")));
        }
        if self.points < 2 || self.points > MAX_GRID_POINTS {
            return Err(CliError::Config(format!("output grid needs 2..={MAX_GRID_POINTS} points")));
        }
        Ok(linspace(t0, t_end, self.points))
    }
}

pub fn default_params() -> ModelParams {
    ModelParams::new(1.0, 1.0, 0.01, 100).expect("valid defaults")
}

/// Grid solver settings used by exact-vs-grid.
pub fn default_grid_solver() -> GridConfig {
    GridConfig {
        s_max: 280.0,
        n_points: 5000,
        dt: 1.6e-3,
        scheme: GridScheme::Magnus4,
        schedule: Schedule::Ramp,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_params")]
    pub params: ModelParams,
    pub run: RunKind,
    #[serde(default)]
    pub grid: OutputGrid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_grid_solver")]
    pub grid_solver: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Scenario {
    pub fn new(run: RunKind) -> Self {
        Scenario {
            params: default_params(),
            run,
            grid: OutputGrid::default(),
            tolerances: Tolerances::default(),
            grid_solver: default_grid_solver(),
            output: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.tolerances.validate()?;
        self.grid_solver.validate()?;
        if let RunKind::Figure { number } = self.run {
            if !(1..=4).contains(&number) {
                return Err(CliError::Config(format!("figure {number} does not exist (1-4)")));
            }
        }
        if let RunKind::Ed { .. } = self.run {
            self.params.require_ed_sector()?;
        }
        Ok(())
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    let s: Scenario = serde_json::from_str(text)?;
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "t0_over_that")]
    T0OverThat,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "delta")]
    Delta,
}

impl AxisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisName::T0OverThat => "t0_over_that",
            AxisName::N => "N",
            AxisName::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisValues {
    List(Vec<f64>),
    Geometric { start: f64, stop: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub values: AxisValues,
}

impl Axis {
    pub fn resolve(&self) -> CliResult<Vec<f64>> {
        let v = match &self.values {
            AxisValues::List(v) => v.clone(),
            AxisValues::Geometric { start, stop, count } => {
                if !(*start > 0.0 && *stop > 0.0 && start.is_finite() && stop.is_finite()) {
                    return Err(CliError::Config(format!("{}: geometric range needs positive ends", self.name.as_str())));
                }
                if *count > MAX_GRID_POINTS {
                    return Err(CliError::Config(format!("{}: too many values", self.name.as_str())));
                }
                let g = geomspace(*start, *stop, *count);
                // Site counts are integers; a geometric N axis is rounded.
                if self.name == AxisName::N {
                    g.into_iter().map(f64::round).collect()
                } else {
                    g
                }
            }
        };
        for &x in &v {
            let ok = match self.name {
                AxisName::N => x >= 4.0 && x.fract() == 0.0 && x <= 1e9,
                _ => x.is_finite() && x > 0.0,
            };
            if !ok {
                return Err(CliError::Config(format!("{}: invalid value {x}", self.name.as_str())));
            }
        }
        Ok(v)
    }
}

/// Parses the short axis form `name=v1,v2,...` or `name=geom:start:stop:count`.
pub fn parse_axis(text: &str) -> CliResult<Axis> {
    let (name, rest) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("axis '{text}' is not of the form name=values")))?;
    let name: AxisName = serde_json::from_value(serde_json::Value::String(name.trim().to_string()))
        .map_err(|_| CliError::Config(format!("unknown axis '{}'", name.trim())))?;
    let num = |s: &str| -> CliResult<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("'{s}' is not a number")))
    };
    let values = if let Some(g) = rest.trim().strip_prefix("geom:") {
        let parts: Vec<&str> = g.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config("geometric axis needs geom:start:stop:count".into()));
        }
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("'{}' is not a count", parts[2])))?;
        AxisValues::Geometric {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            count,
        }
    } else if rest.trim().is_empty() {
        AxisValues::List(Vec::new())
    } else {
        AxisValues::List(rest.split(',').map(num).collect::<CliResult<_>>()?)
    };
    let axis = Axis { name, values };
    axis.resolve()?;
    Ok(axis)
}

fn default_budget() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub axes: Vec<Axis>,
    pub template: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_budget")]
    pub max_points: usize,
}

impl SweepSpec {
    /// Coordinates of every point, first axis slowest. No axes means no
    /// points.
    pub fn points(&self) -> CliResult<Vec<Vec<(AxisName, f64)>>> {
        if self.axes.is_empty() {
            return Ok(Vec::new());
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut resolved = Vec::new();
        for a in &self.axes {
            if !seen.insert(a.name) {
                return Err(CliError::Config(format!("axis {} given twice", a.name.as_str())));
            }
            resolved.push((a.name, a.resolve()?));
        }
        let total = resolved
            .iter()
            .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
            .unwrap_or(usize::MAX);
        if total > self.max_points {
            return Err(CliError::Config(format!(
                "sweep has {total} points, budget is {}",
                self.max_points
            )));
        }
        let mut out: Vec<Vec<(AxisName, f64)>> = vec![Vec::new()];
        for (name, vals) in &resolved {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push((*name, v));
                        p
                    })
                })
                .collect();
        }
        Ok(out)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.template.validate()?;
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        self.points().map(|_| ())
    }
}

/// Applies sweep coordinates to a template. `delta` and `N` are applied
/// before `t0_over_that`, which is measured in units of the resulting `t̂`.
pub fn apply_coords(template: &Scenario, coords: &[(AxisName, f64)]) -> CliResult<Scenario> {
    let mut s = template.clone();
    let mut sorted: Vec<(AxisName, f64)> = coords.to_vec();
    sorted.sort_by_key(|(n, _)| match n {
        AxisName::Delta => 0,
        AxisName::N => 1,
        AxisName::T0OverThat => 2,
    });
    let t0_ratio = s.params.t0() / freeze_out_time(&s.params);
    let mut explicit_t0 = None;
    for (name, v) in sorted {
        match name {
            AxisName::Delta => s.params = s.params.with_delta(v)?,
            AxisName::N => s.params = s.params.with_n(v as usize)?,
            AxisName::T0OverThat => explicit_t0 = Some(v),
        }
    }
    // Keep t0/t̂ fixed under a delta change unless it is swept itself.
    let x = explicit_t0.unwrap_or(t0_ratio);
    s.params = s.params.with_t0(x * freeze_out_time(&s.params))?;
    s.validate()?;
    Ok(s)
}

/// Parses and validates a sweep document.
pub fn parse_sweep(text: &str) -> CliResult<SweepSpec> {
    let s: SweepSpec = serde_json::from_str(text)?;
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_defaults_fill_in() {
        let s = parse_scenario(r#"{"run": {"kind": "exact"}}"#).unwrap();
        assert_eq!(s.params, default_params());
        assert_eq!(s.run, RunKind::Exact { k_max: 4, schedule: Schedule::Ramp });
        assert_eq!(s.tolerances, Tolerances::default());
        let round = parse_scenario(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(round, s);
    }

    #[test]
    fn scenario_rejects_bad_input() {
        assert!(parse_scenario(r#"{"run": {"kind": "nope"}}"#).is_err());
        assert!(parse_scenario(r#"{"run": {"kind": "figure", "number": 7}}"#).is_err());
        assert!(parse_scenario(r#"{"params": {"J": -1, "delta": 1, "H0": 0.1, "N": 100}, "run": {"kind": "static"}}"#).is_err());
        assert!(parse_scenario(r#"{"params": {"J": 1, "delta": 1, "H0": 0.1, "N": 20002}, "run": {"kind": "ed"}}"#).is_err());
        assert!(parse_scenario(r#"{"run": {"kind": "static"}, "tolerances": {"grid_l2": 0}}"#).is_err());
        assert!(parse_scenario(r#"{"run": {"kind": "static"}, "extra": 1}"#).is_err());
        assert!("exact-vs-grid".parse::<CheckName>().is_ok());
        assert!("bogus".parse::<CheckName>().is_err());
    }

    #[test]
    fn axis_forms() {
        let a = parse_axis("N=100,1000").unwrap();
        assert_eq!(a.resolve().unwrap(), vec![100.0, 1000.0]);
        let g = parse_axis("t0_over_that=geom:1e-1:1e-4:4").unwrap();
        let v = g.resolve().unwrap();
        assert_eq!(v.len(), 4);
        assert!((v[3] - 1e-4).abs() < 1e-18);
        assert!(parse_axis("N=101.5").is_err());
        assert!(parse_axis("foo=1").is_err());
        assert!(parse_axis("delta=geom:0:1:3").is_err());
        assert_eq!(parse_axis("delta=").unwrap().resolve().unwrap(), Vec::<f64>::new());
        assert_eq!(parse_axis("N=geom:100:10000:3").unwrap().resolve().unwrap(), vec![100.0, 1000.0, 10000.0]);
    }

    #[test]
    fn sweep_points_and_budget() {
        let mut spec = SweepSpec {
            axes: vec![parse_axis("N=100,200").unwrap(), parse_axis("t0_over_that=0.1,0.01,0.001").unwrap()],
            template: Scenario::new(RunKind::Kz { k_max: 2 }),
            workers: None,
            max_points: 10,
        };
        let pts = spec.points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![(AxisName::N, 100.0), (AxisName::T0OverThat, 0.01)]);
        spec.max_points = 5;
        assert!(spec.points().is_err());
        spec.axes.clear();
        assert!(spec.points().unwrap().is_empty());
    }

    #[test]
    fn coordinates_apply_in_order() {
        let t = Scenario::new(RunKind::Static);
        let s = apply_coords(&t, &[(AxisName::T0OverThat, 0.5), (AxisName::Delta, 8.0)]).unwrap();
        let that = freeze_out_time(&s.params);
        assert!((that - 0.5).abs() < 1e-15);
        assert!((s.params.t0() / that - 0.5).abs() < 1e-12);
    }
}
