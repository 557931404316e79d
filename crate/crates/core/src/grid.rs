//! Brute-force grid solver for the continuum Schrödinger equation
//! `iħ ∂ψ/∂t = [-(NH/4) ∂²/∂S² + (J/N) S²] ψ` on `0 < S < S_max` with
//! fixed-zero ends.
//!
//! Two schemes are offered. [`GridScheme::CrankNicolson`] is the textbook
//! second-order pair (three-point Laplacian, midpoint mass). The default
//! [`GridScheme::Magnus4`] uses the Numerov compact Laplacian
//! `B⁻¹A/h²` and a fourth-order commutator-free Magnus step whose
//! exponentials are (2,2) Padé approximants, each split into two
//! tridiagonal solves. Both are exactly unitary up to rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContinuumHamiltonian, ModelParams, Schedule};
use crate::numerics::tridiag::{eigenvalue_bisect, eigenvector_inverse_iteration, ThomasSolver, Tridiag};
use crate::spectrum::GaussianHermiteState;

/// Largest allowed ratio of the peak amplitude in the outer 5% of the
/// domain to the global peak amplitude.
pub const CUTOFF_LIMIT: f64 = 1e-9;

/// Fewest grid points allowed per local wavelength of the solution.
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScheme {
    CrankNicolson,
    #[default]
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub s_max: f64,
    /// Interior points; the grid is `S_i = i S_max/(n_points+1)`.
    pub n_points: usize,
    /// Upper bound on the time step. Each output interval is split evenly.
    pub dt: f64,
    #[serde(default)]
    pub scheme: GridScheme,
    #[serde(default)]
    pub schedule: Schedule,
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_max > 0.0 && self.s_max.is_finite()) {
            return Err(Error::InvalidParams(format!("S_max = {} must be positive", self.s_max)));
        }
        if self.n_points < 8 {
            return Err(Error::InvalidParams(format!("n_points = {} is below 8", self.n_points)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt = {} must be positive", self.dt)));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.s_max / (self.n_points as f64 + 1.0)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.n_points).map(|i| h * i as f64).collect()
    }
}

/// Output of [`grid_evolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    pub s: Vec<f64>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<Complex64>>,
    /// Largest `|‖ψ(t)‖² - ‖ψ(t_first)‖²|` over the outputs.
    pub norm_drift: f64,
    pub steps: usize,
    /// Largest outer-5% to peak amplitude ratio seen.
    pub cutoff_ratio: f64,
    pub min_points_per_wavelength: f64,
}

impl GridRun {
    pub fn spacing(&self) -> f64 {
        if self.s.len() > 1 {
            self.s[1] - self.s[0]
        } else {
            self.s[0]
        }
    }

    /// Discrete `L²` distance between snapshot `k` and `f` sampled on the grid.
    pub fn l2_distance<F: Fn(f64) -> Complex64>(&self, k: usize, f: F) -> f64 {
        let h = self.spacing();
        let sum: f64 = self.s.iter().zip(&self.snapshots[k]).map(|(&s, &v)| (v - f(s)).norm_sqr()).sum();
        (h * sum).sqrt()
    }
}

fn discrete_norm_sqr(h: f64, psi: &[Complex64]) -> f64 {
    h * psi.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Spatial operators: `K = -c M⁻¹ L + V`, with `L` the second-difference
/// stencil `(1,-2,1)/h²` and `M` the identity (three-point) or the Numerov
/// mass `(1,10,1)/12`.
struct Operators {
    ld: f64,
    lo: f64,
    md: f64,
    mo: f64,
    v: Vec<f64>,
    n: usize,
}

impl Operators {
    fn new(cfg: &GridConfig, p: &ModelParams) -> Self {
        let h = cfg.spacing();
        let (md, mo) = match cfg.scheme {
            GridScheme::CrankNicolson => (1.0, 0.0),
            GridScheme::Magnus4 => (10.0 / 12.0, 1.0 / 12.0),
        };
        let k = ContinuumHamiltonian::new(*p).potential_coefficient();
        Operators {
            ld: -2.0 / (h * h),
            lo: 1.0 / (h * h),
            md,
            mo,
            v: cfg.nodes().iter().map(|s| k * s * s).collect(),
            n: cfg.n_points,
        }
    }

    /// Fills `lhs = M + iβX` and `rhs = (M - iβ̄X) ψ` with `X = M K τ`
    /// for the exponent `τK`, `K = -c̃ M⁻¹L + ṽ V` (already scaled by dt/ħ).
    fn pade_factor(&self, c: f64, v: f64, beta: Complex64, lhs: &mut Tridiag, psi: &[Complex64], rhs: &mut [Complex64]) {
        let n = self.n;
        let i = Complex64::new(0.0, 1.0);
        let bp = i * beta;
        let bm = -i * beta.conj();
        let xd = |k: usize| -c * self.ld + v * self.md * self.v[k];
        // (M V)_{k,k+1} = mo V_{k+1}; (M V)_{k+1,k} = mo V_k.
        let xu = |k: usize| -c * self.lo + v * self.mo * self.v[k + 1];
        let xl = |k: usize| -c * self.lo + v * self.mo * self.v[k];
        for k in 0..n {
            lhs.diag[k] = self.md + bp * xd(k);
            let mut r = (self.md + bm * xd(k)) * psi[k];
            if k + 1 < n {
                lhs.upper[k] = self.mo + bp * xu(k);
                r += (self.mo + bm * xu(k)) * psi[k + 1];
            }
            if k > 0 {
                lhs.lower[k - 1] = self.mo + bp * xl(k - 1);
                r += (self.mo + bm * xl(k - 1)) * psi[k - 1];
            }
            rhs[k] = r;
        }
    }
}

struct Stepper {
    ops: Operators,
    lhs: Tridiag,
    buf: Vec<Complex64>,
    solver: ThomasSolver,
    scheme: GridScheme,
    schedule: Schedule,
    params: ModelParams,
}

impl Stepper {
    fn kinetic(&self, t: f64) -> f64 {
        ContinuumHamiltonian::new(self.params).kinetic_coefficient(self.schedule.field(&self.params, t))
    }

    fn apply_exp(&mut self, c: f64, v: f64, betas: &[Complex64], psi: &mut [Complex64]) {
        for &beta in betas {
            self.ops.pade_factor(c, v, beta, &mut self.lhs, psi, &mut self.buf);
            self.solver.solve(&self.lhs, &mut self.buf);
            psi.copy_from_slice(&self.buf);
        }
    }

    fn step(&mut self, psi: &mut [Complex64], t: f64, dt: f64) {
        let tau = dt / self.params.hbar();
        match self.scheme {
            GridScheme::CrankNicolson => {
                let c = tau * self.kinetic(t + 0.5 * dt);
                self.apply_exp(c, tau, &[Complex64::new(0.5, 0.0)], psi);
            }
            GridScheme::Magnus4 => {
                let r3 = 3f64.sqrt();
                let (g1, g2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
                let (a1, a2) = ((3.0 - 2.0 * r3) / 12.0, (3.0 + 2.0 * r3) / 12.0);
                let c1 = self.kinetic(t + g1 * dt);
                let c2 = self.kinetic(t + g2 * dt);
                let b = 1.0 / (4.0 * r3);
                let betas = [Complex64::new(0.25, b), Complex64::new(0.25, -b)];
                for (w1, w2) in [(a2, a1), (a1, a2)] {
                    self.apply_exp(tau * (w1 * c1 + w2 * c2), tau * (w1 + w2), &betas, psi);
                }
            }
        }
    }
}

fn cutoff_ratio(psi: &[Complex64]) -> f64 {
    let n = psi.len();
    let peak = psi.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let start = n - (n / 20).max(1);
    let tail = psi[start..].iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if peak > 0.0 {
        tail / peak
    } else {
        0.0
    }
}

/// Fewest points per local wavelength over the region where `|ψ|` exceeds
/// `1e-6` of its peak.
fn points_per_wavelength(psi: &[Complex64]) -> f64 {
    let peak = psi.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let floor = 1e-6 * peak;
    let mut worst = f64::INFINITY;
    for w in psi.windows(2) {
        if w[0].norm() > floor && w[1].norm() > floor {
            let dphi = (w[1] * w[0].conj()).arg().abs();
            if dphi > 0.0 {
                worst = worst.min(2.0 * std::f64::consts::PI / dphi);
            }
        }
    }
    worst
}

/// Evolves `initial` (sampled at time `times[0]`) through the increasing
/// output `times`, returning a snapshot at each.
pub fn grid_evolve(p: &ModelParams, cfg: &GridConfig, initial: &GaussianHermiteState, times: &[f64]) -> Result<GridRun> {
    cfg.validate()?;
    if times.is_empty() {
        return Err(Error::Grid("no output times".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Grid("output times must be finite and strictly increasing".into()));
    }
    if cfg.schedule == Schedule::Ramp && times[0] < p.t0() {
        return Err(Error::Grid(format!("start {} precedes t0 = {}", times[0], p.t0())));
    }
    let s = cfg.nodes();
    let h = cfg.spacing();
    let n = cfg.n_points;
    let mut psi: Vec<Complex64> = s.iter().map(|&x| initial.value(x)).collect();
    let mut stepper = Stepper {
        ops: Operators::new(cfg, p),
        lhs: Tridiag::zeros(n),
        buf: vec![Complex64::new(0.0, 0.0); n],
        solver: ThomasSolver::default(),
        scheme: cfg.scheme,
        schedule: cfg.schedule,
        params: *p,
    };
    let norm0 = discrete_norm_sqr(h, &psi);
    let mut run = GridRun {
        s,
        times: times.to_vec(),
        snapshots: Vec::with_capacity(times.len()),
        norm_drift: 0.0,
        steps: 0,
        cutoff_ratio: 0.0,
        min_points_per_wavelength: f64::INFINITY,
    };
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            let t_prev = times[k - 1];
            let span = t - t_prev;
            let m = (span / cfg.dt).ceil().max(1.0) as usize;
            let dt = span / m as f64;
            for j in 0..m {
                stepper.step(&mut psi, t_prev + j as f64 * dt, dt);
            }
            run.steps += m;
        }
        let ratio = cutoff_ratio(&psi);
        if ratio > CUTOFF_LIMIT {
            return Err(Error::Cutoff { t, ratio, limit: CUTOFF_LIMIT });
        }
        let ppw = points_per_wavelength(&psi);
        if ppw < MIN_POINTS_PER_WAVELENGTH {
            return Err(Error::Grid(format!(
                "only {ppw:.1} points per wavelength at t = {t:.6e}; increase n_points"
            )));
        }
        run.cutoff_ratio = run.cutoff_ratio.max(ratio);
        run.min_points_per_wavelength = run.min_points_per_wavelength.min(ppw);
        run.norm_drift = run.norm_drift.max((discrete_norm_sqr(h, &psi) - norm0).abs());
        run.snapshots.push(psi.clone());
    }
    Ok(run)
}

/// One eigenpair of the gridded static Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEigenpair {
    pub energy: f64,
    /// Grid values normalized to `h Σ|ψ|² = 1`, positive near `S = 0`.
    pub vector: Vec<f64>,
}

/// Lowest `count` eigenpairs of `-(NH/4) ∂² + (J/N) S²` on the half-line
/// grid, from the three-point Laplacian by Sturm bisection.
pub fn grid_eigensolve(p: &ModelParams, h_field: f64, cfg: &GridConfig, count: usize) -> Result<Vec<GridEigenpair>> {
    cfg.validate()?;
    if !(h_field > 0.0) {
        return Err(Error::Domain(format!("eigensolve needs H > 0, got {h_field}")));
    }
    if count > cfg.n_points {
        return Err(Error::InvalidParams(format!("{count} eigenpairs requested from {} points", cfg.n_points)));
    }
    let h = cfg.spacing();
    let ch = ContinuumHamiltonian::new(*p);
    let c = ch.kinetic_coefficient(h_field);
    let k = ch.potential_coefficient();
    let diag: Vec<f64> = cfg.nodes().iter().map(|s| 2.0 * c / (h * h) + k * s * s).collect();
    let off = vec![-c / (h * h); cfg.n_points - 1];
    Ok((0..count)
        .map(|i| {
            let energy = eigenvalue_bisect(&diag, &off, i);
            let mut vector = eigenvector_inverse_iteration(&diag, &off, energy);
            let scale = if vector[0] < 0.0 { -1.0 } else { 1.0 } / h.sqrt();
            vector.iter_mut().for_each(|x| *x *= scale);
            GridEigenpair { energy, vector }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{evolve_exact, wavefunction_at, ExactOptions};
    use crate::spectrum::{dual_thin_energy, snapshot_eigenstate};

    fn cfg(s_max: f64, n_points: usize, dt: f64, scheme: GridScheme) -> GridConfig {
        GridConfig { s_max, n_points, dt, scheme, schedule: Schedule::Ramp }
    }

    #[test]
    fn eigensolve_matches_odd_ladder() {
        let p = ModelParams::new(1.0, 1.0, 1.0, 4).unwrap();
        let c = cfg(12.0, 4000, 1e-3, GridScheme::CrankNicolson);
        let pairs = grid_eigensolve(&p, 1.0, &c, 3).unwrap();
        for (i, e) in pairs.iter().enumerate() {
            let want = dual_thin_energy(&p, 1.0, 2 * i + 1).unwrap();
            assert!((e.energy - want).abs() < 1e-4, "{} vs {want}", e.energy);
        }
        assert!((pairs[0].energy - 1.5).abs() < 1e-4);
        assert!((pairs[1].energy - pairs[0].energy - 2.0).abs() < 1e-4);
        let p4 = ModelParams::new(4.0, 1.0, 1.0, 4).unwrap();
        let e = grid_eigensolve(&p4, 1.0, &c, 1).unwrap();
        assert!((e[0].energy - 3.0).abs() < 1e-4);
        // Node at S = 0: the first interior value is small and linear in h.
        let v = &pairs[0].vector;
        assert!(v[0] > 0.0 && v[0] < 2.0 * v[1]);
    }

    #[test]
    fn frozen_eigenstate_is_stationary() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 20).unwrap();
        let init = snapshot_eigenstate(&p, 0.5, 1).unwrap();
        let mut c = cfg(2.5, 800, 2e-3, GridScheme::Magnus4);
        c.schedule = Schedule::Frozen;
        c.s_max = 16.0 / init.omega().re.sqrt();
        let times = [0.5, 1.5, 2.5];
        let run = grid_evolve(&p, &c, &init, &times).unwrap();
        let e = dual_thin_energy(&p, 0.5, 1).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let phi = e / 1.5 * (t - 0.5);
            let want = GaussianHermiteState::new(1, init.omega(), phi).unwrap();
            let d = run.l2_distance(k, |s| want.value(s));
            assert!(d < 1e-6, "t = {t}: {d}");
        }
        assert!(run.norm_drift < 1e-12);
    }

    fn exact_error(scheme: GridScheme, n_points: usize, dt: f64) -> (f64, f64) {
        let p = ModelParams::new(1.0, 1.0, 0.05, 100).unwrap();
        let traj = evolve_exact(&p, 3.0, &ExactOptions::default()).unwrap();
        let times: Vec<f64> = (0..=6).map(|k| 0.05 + k as f64 * 0.45).collect();
        let init = traj.state_at(0.05).hermite_state(1).unwrap();
        let run = grid_evolve(&p, &cfg(200.0, n_points, dt, scheme), &init, &times).unwrap();
        let mut worst: f64 = 0.0;
        for (k, &t) in times.iter().enumerate() {
            let st = traj.state_at(t);
            worst = worst.max(run.l2_distance(k, |s| wavefunction_at(&st, 1, s).unwrap()));
        }
        (worst, run.norm_drift)
    }

    #[test]
    fn magnus4_converges_to_exact_at_fourth_order() {
        let (e1, d1) = exact_error(GridScheme::Magnus4, 1000, 8e-3);
        let (e2, d2) = exact_error(GridScheme::Magnus4, 2000, 4e-3);
        let order = (e1 / e2).log2();
        assert!(e2 < 1e-4, "{e1} {e2}");
        assert!(order > 3.5, "order {order}");
        assert!(d1 < 1e-11 && d2 < 1e-11);
    }

    #[test]
    fn crank_nicolson_converges_at_second_order() {
        let (e1, _) = exact_error(GridScheme::CrankNicolson, 1000, 8e-3);
        let (e2, d2) = exact_error(GridScheme::CrankNicolson, 2000, 4e-3);
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "order {order} ({e1} -> {e2})");
        assert!(d2 < 1e-11);
    }

    #[test]
    fn small_cutoff_is_rejected() {
        let p = ModelParams::new(1.0, 1.0, 0.05, 100).unwrap();
        let init = snapshot_eigenstate(&p, 0.05, 1).unwrap();
        let err = grid_evolve(&p, &cfg(20.0, 400, 1e-2, GridScheme::Magnus4), &init, &[0.05, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Cutoff { .. }), "{err}");
    }

    #[test]
    fn config_validation() {
        let p = ModelParams::new(1.0, 1.0, 0.05, 100).unwrap();
        let init = snapshot_eigenstate(&p, 0.05, 1).unwrap();
        assert!(grid_evolve(&p, &cfg(0.0, 400, 1e-2, GridScheme::Magnus4), &init, &[0.05]).is_err());
        assert!(grid_evolve(&p, &cfg(50.0, 400, 1e-2, GridScheme::Magnus4), &init, &[0.05, 0.04]).is_err());
        assert!(grid_evolve(&p, &cfg(50.0, 400, 1e-2, GridScheme::Magnus4), &init, &[0.01]).is_err());
    }
}
