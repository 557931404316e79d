//! Exact Gaussian-state evolution under the ramped field.
//!
//! The width `ω(t)` follows from the classical equation of motion of the
//! collective coordinate, `d/dt(m χ̇) + k χ = 0`, through
//! `ω = -i p/(ħ χ)` with `p = m χ̇`. The linear flow is integrated; the
//! Riccati form of the same flow is kept as a cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{freeze_out_time, kz_recursion_field, renormalized_field, static_omega, ModelParams, Schedule};
use crate::numerics::ode::{dopri5, DenseSolution, Dopri5Options};
use crate::numerics::peaks::{bisect_root, local_maxima, median, refine_maximum};
use crate::series::TimeSeries;
use crate::spectrum::{overlap_n1, GaussianHermiteState};

/// Peaks of `Re ω` must stand out by this multiple of the trace median.
pub const PEAK_PROMINENCE_FACTOR: f64 = 2.0;

/// Minimum prominence of a fidelity maximum counted as a classical return.
pub const FIDELITY_PROMINENCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiState {
    pub t: f64,
    pub omega: Complex64,
    pub phi: f64,
}

impl RiccatiState {
    /// The evolved order-`n` state of the Gaussian–Hermite family.
    pub fn hermite_state(&self, n: usize) -> Result<GaussianHermiteState> {
        GaussianHermiteState::new(n, self.omega, self.phi)
    }
}

/// `dω/dt = i [2J/(N ħ) - N H(t) ω² / (2ħ)]` on the linear ramp.
pub fn riccati_rhs(p: &ModelParams, t: f64, omega: Complex64) -> Complex64 {
    riccati_rhs_at_field(p, p.delta() * t, omega)
}

/// [`riccati_rhs`] for a given field value.
pub fn riccati_rhs_at_field(p: &ModelParams, h: f64, omega: Complex64) -> Complex64 {
    let n = p.n_f64();
    let hb = p.hbar();
    Complex64::i() * (2.0 * p.j() / (n * hb) - n * h * omega * omega / (2.0 * hb))
}

/// Integration settings for the exact flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub schedule: Schedule,
    /// Starting width; defaults to the static ground state `ω_S(H0)`.
    pub initial_omega: Option<Complex64>,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            rtol: 1e-10,
            atol: 1e-14,
            max_steps: 5_000_000,
            schedule: Schedule::Ramp,
            initial_omega: None,
        }
    }
}

impl ExactOptions {
    fn ode(&self) -> Dopri5Options {
        Dopri5Options {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
            ..Default::default()
        }
    }
}

/// Dense trajectory of the linear flow, state `(Re χ, Im χ, Re p, Im p, φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrajectory {
    pub params: ModelParams,
    pub options: ExactOptions,
    pub solution: DenseSolution<5>,
}

fn state_from(hbar: f64, t: f64, y: &[f64; 5]) -> RiccatiState {
    let chi = Complex64::new(y[0], y[1]);
    let pm = Complex64::new(y[2], y[3]);
    RiccatiState {
        t,
        omega: -Complex64::i() * pm / (hbar * chi),
        phi: y[4],
    }
}

impl ExactTrajectory {
    pub fn t_start(&self) -> f64 {
        self.solution.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn state_at(&self, t: f64) -> RiccatiState {
        state_from(self.params.hbar(), t, &self.solution.eval(t))
    }

    /// Complex classical coordinate `χ(t)`.
    pub fn chi_at(&self, t: f64) -> Complex64 {
        let y = self.solution.eval(t);
        Complex64::new(y[0], y[1])
    }

    pub fn field_at(&self, t: f64) -> f64 {
        self.options.schedule.field(&self.params, t)
    }

    /// States at the accepted integrator steps.
    pub fn nodes(&self) -> Vec<RiccatiState> {
        let hb = self.params.hbar();
        self.solution.nodes().map(|(t, y)| state_from(hb, t, &y)).collect()
    }

    pub fn sample(&self, times: &[f64]) -> Vec<RiccatiState> {
        times.iter().map(|&t| self.state_at(t)).collect()
    }

    /// Accepted step times refined by `sub` dense-output points per step.
    pub fn fine_times(&self, sub: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.solution.steps.len() * (sub + 1) + 1);
        for s in &self.solution.steps {
            for j in 0..=sub {
                out.push(s.t + s.h * j as f64 / (sub + 1) as f64);
            }
        }
        out.push(self.t_end());
        out
    }

    /// Series with widths, phase, fidelities and energy on `times`.
    pub fn series(&self, times: &[f64]) -> Result<TimeSeries> {
        let p = &self.params;
        let n = p.n_f64();
        let states = self.sample(times);
        let mut s = TimeSeries::new(times.to_vec());
        s.push("Re_omega", "1", states.iter().map(|x| x.omega.re).collect())?;
        s.push("Im_omega", "1", states.iter().map(|x| x.omega.im).collect())?;
        s.push("N_Re_omega", "1", states.iter().map(|x| n * x.omega.re).collect())?;
        s.push("N_Im_omega", "1", states.iter().map(|x| n * x.omega.im).collect())?;
        s.push("phi", "rad", states.iter().map(|x| x.phi).collect())?;
        for (name, r) in [
            ("fidelity_instantaneous", FidelityReference::Instantaneous),
            ("fidelity_renormalized", FidelityReference::Renormalized),
            ("fidelity_classical_return", FidelityReference::ClassicalReturn),
        ] {
            let v = states
                .iter()
                .map(|x| self.fidelity(x, r))
                .collect::<Result<Vec<_>>>()?;
            s.push(name, "1", v)?;
        }
        let d: Vec<f64> = s
            .column("fidelity_instantaneous")
            .expect("present")
            .iter()
            .map(|f| 1.0 - f)
            .collect();
        s.push("D", "1", d)?;
        let e = states
            .iter()
            .map(|x| gaussian_energy(p, self.field_at(x.t), x.omega))
            .collect();
        s.push("energy", "J", e)?;
        Ok(s)
    }

    /// Classical fidelity using this trajectory's schedule for `H(t)`.
    pub fn fidelity(&self, state: &RiccatiState, reference: FidelityReference) -> Result<f64> {
        let w = reference.omega(&self.params, self.field_at(state.t))?;
        overlap_n1(Complex64::new(w, 0.0), state.omega)
    }
}

/// Integrates the linear flow from `t0` (ground state at `H0`) to `t_end`.
///
/// Every accepted step is checked for `Re ω > 0`.
pub fn evolve_exact(p: &ModelParams, t_end: f64, opts: &ExactOptions) -> Result<ExactTrajectory> {
    let t0 = p.t0();
    if !(p.h0() > 0.0) {
        return domain("exact evolution needs H0 > 0; take the t0 -> 0 limit by extrapolation");
    }
    if !(t_end > t0) {
        return domain(format!("t_end = {t_end} must exceed t0 = {t0}"));
    }
    let omega0 = match opts.initial_omega {
        Some(w) if w.re > 0.0 => w,
        Some(w) => return domain(format!("initial width {w} must have positive real part")),
        None => Complex64::new(static_omega(p, p.h0())?, 0.0),
    };
    let hb = p.hbar();
    let n = p.n_f64();
    let k = 2.0 * p.j() / n;
    let sched = opts.schedule;
    let params = *p;
    let pm0 = Complex64::i() * hb * omega0;
    let rhs = move |t: f64, y: &[f64; 5]| {
        let h = sched.field(&params, t);
        let inv_m = n * h / (2.0 * hb * hb);
        let chi = Complex64::new(y[0], y[1]);
        let pm = Complex64::new(y[2], y[3]);
        let re_omega = (-Complex64::i() * pm / (hb * chi)).re;
        [
            inv_m * y[2],
            inv_m * y[3],
            -k * y[0],
            -k * y[1],
            0.5 * n * h * re_omega / hb,
        ]
    };
    let solution = dopri5(rhs, t0, [1.0, 0.0, pm0.re, pm0.im, 0.0], t_end, &opts.ode())?;
    for (t, y) in solution.nodes() {
        let s = state_from(hb, t, &y);
        if !(s.omega.re > 0.0) {
            return Err(Error::Positivity { t, re: s.omega.re });
        }
    }
    Ok(ExactTrajectory {
        params: *p,
        options: *opts,
        solution,
    })
}

/// Integrates the Riccati equation for `ω` (with `φ`) directly. Used only
/// to cross-check [`evolve_exact`] away from the sharp peaks.
pub fn evolve_riccati(p: &ModelParams, t_end: f64, opts: &ExactOptions) -> Result<DenseSolution<3>> {
    if !(p.h0() > 0.0) {
        return domain("Riccati evolution needs H0 > 0");
    }
    let omega0 = match opts.initial_omega {
        Some(w) => w,
        None => Complex64::new(static_omega(p, p.h0())?, 0.0),
    };
    let sched = opts.schedule;
    let params = *p;
    let rhs = move |t: f64, y: &[f64; 3]| {
        let h = sched.field(&params, t);
        let d = riccati_rhs_at_field(&params, h, Complex64::new(y[0], y[1]));
        [d.re, d.im, 0.5 * params.n_f64() * h * y[0] / params.hbar()]
    };
    dopri5(rhs, p.t0(), [omega0.re, omega0.im, 0.0], t_end, &opts.ode())
}

/// Eq.-(5)-family amplitude of the evolved state at `S`.
pub fn wavefunction_at(state: &RiccatiState, n: usize, s: f64) -> Result<Complex64> {
    Ok(state.hermite_state(n)?.value(s))
}

/// `⟨H⟩` of the half-line `n = 1` state of width `ω` at field `H`:
/// `(N H/4)·3|ω|²/(2 Re ω) + (J/N)·3/(2 Re ω)`.
pub fn gaussian_energy(p: &ModelParams, h: f64, omega: Complex64) -> f64 {
    let a = omega.re;
    let n = p.n_f64();
    n * h / 4.0 * 1.5 * omega.norm_sqr() / a + p.j() / n * 1.5 / a
}

/// Reference state of a classical fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityReference {
    /// Snapshot ground state at `H(t)`.
    Instantaneous,
    /// Snapshot ground state at the renormalized field `H_R(t)`.
    Renormalized,
    /// Wide real-width partner of the renormalized state,
    /// `ω_S(H)²/ω_S(H_R)`, i.e. the snapshot state at `H²/H_R`.
    ClassicalReturn,
    /// Snapshot ground state at `H H0/(δ t̂)`, the state rebuilt by the
    /// adiabatic-impulse sum at its recursion times.
    KzRecursion,
}

impl FidelityReference {
    pub fn omega(&self, p: &ModelParams, h: f64) -> Result<f64> {
        match self {
            FidelityReference::Instantaneous => static_omega(p, h),
            FidelityReference::Renormalized => static_omega(p, renormalized_field(p, h)),
            FidelityReference::ClassicalReturn => static_omega(p, h * h / renormalized_field(p, h)),
            FidelityReference::KzRecursion => static_omega(p, kz_recursion_field(p, h)),
        }
    }
}

/// `|⟨u^1(ω_ref)|Ψ(t)⟩|²` on the linear ramp.
pub fn classical_fidelity(p: &ModelParams, state: &RiccatiState, reference: FidelityReference) -> Result<f64> {
    let w = reference.omega(p, p.delta() * state.t)?;
    overlap_n1(Complex64::new(w, 0.0), state.omega)
}

/// Asymptotic singular instants `t̂ (3kπ/2 + 13π/8)^(2/3)`.
pub fn predicted_t_r(t_hat: f64, k: usize) -> f64 {
    t_hat * (1.5 * std::f64::consts::PI * k as f64 + 13.0 * std::f64::consts::PI / 8.0).powf(2.0 / 3.0)
}

/// Asymptotic classical-return instants `t̂ (3kπ/2 + 7π/8)^(2/3)`.
pub fn predicted_t_i(t_hat: f64, k: usize) -> f64 {
    t_hat * (1.5 * std::f64::consts::PI * k as f64 + 7.0 * std::f64::consts::PI / 8.0).powf(2.0 / 3.0)
}

/// One predicted comb event and the detection matched to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombEvent {
    pub k: usize,
    pub predicted: f64,
    pub detected: Option<f64>,
    pub rel_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombReport {
    pub t_hat: f64,
    pub t0: f64,
    /// Local maxima of `Re ω`.
    pub detected_tr: Vec<f64>,
    /// Local maxima of the classical-return fidelity.
    pub detected_ti: Vec<f64>,
    /// Local maxima of the renormalized-field fidelity.
    pub renormalized_peaks: Vec<f64>,
    /// Times where `Im ω` changes sign.
    pub im_zero_crossings: Vec<f64>,
    pub events_r: Vec<CombEvent>,
    pub events_i: Vec<CombEvent>,
}

impl CombReport {
    pub fn found_r(&self) -> usize {
        self.events_r.iter().filter(|e| e.detected.is_some()).count()
    }

    pub fn found_i(&self) -> usize {
        self.events_i.iter().filter(|e| e.detected.is_some()).count()
    }

    pub fn deviation_r(&self, k: usize) -> Option<f64> {
        self.events_r.get(k).and_then(|e| e.rel_deviation)
    }

    pub fn deviation_i(&self, k: usize) -> Option<f64> {
        self.events_i.get(k).and_then(|e| e.rel_deviation)
    }
}

/// Matches each prediction to the nearest detection lying closer to it than
/// to the neighbouring predictions.
fn match_events(predicted: &[f64], detected: &[f64]) -> Vec<CombEvent> {
    predicted
        .iter()
        .enumerate()
        .map(|(k, &pk)| {
            let lo = if k == 0 { f64::NEG_INFINITY } else { 0.5 * (predicted[k - 1] + pk) };
            let hi = if k + 1 < predicted.len() {
                0.5 * (pk + predicted[k + 1])
            } else {
                pk + 0.5 * (pk - predicted.get(k.wrapping_sub(1)).copied().unwrap_or(0.0))
            };
            let best = detected
                .iter()
                .copied()
                .filter(|&d| d > lo && d <= hi)
                .min_by(|a, b| (a - pk).abs().total_cmp(&(b - pk).abs()));
            CombEvent {
                k,
                predicted: pk,
                detected: best,
                rel_deviation: best.map(|d| (d - pk).abs() / pk),
            }
        })
        .collect()
}

fn refined_peaks<F: Fn(f64) -> f64>(times: &[f64], values: &[f64], threshold: f64, f: F) -> Vec<f64> {
    local_maxima(values, threshold)
        .into_iter()
        .map(|i| refine_maximum(&f, times[i - 1], times[i + 1], 1e-13 * times[i].abs().max(1.0)).0)
        .collect()
}

/// Detects the comb in a trajectory and compares with the asymptotic
/// predictions for `k = 0..=k_max`.
pub fn detect_comb(traj: &ExactTrajectory, k_max: usize) -> Result<CombReport> {
    let p = &traj.params;
    let t_hat = freeze_out_time(p);
    let times = traj.fine_times(3);
    let states = traj.sample(&times);
    let re: Vec<f64> = states.iter().map(|s| s.omega.re).collect();
    let threshold = PEAK_PROMINENCE_FACTOR * median(&re);
    let detected_tr = refined_peaks(&times, &re, threshold, |t| traj.state_at(t).omega.re);

    let fid = |r: FidelityReference| -> Result<Vec<f64>> { states.iter().map(|s| traj.fidelity(s, r)).collect() };
    let f_cr = fid(FidelityReference::ClassicalReturn)?;
    let detected_ti = refined_peaks(&times, &f_cr, FIDELITY_PROMINENCE, |t| {
        traj.fidelity(&traj.state_at(t), FidelityReference::ClassicalReturn)
            .unwrap_or(f64::NAN)
    });
    let f_rn = fid(FidelityReference::Renormalized)?;
    let renormalized_peaks = refined_peaks(&times, &f_rn, FIDELITY_PROMINENCE, |t| {
        traj.fidelity(&traj.state_at(t), FidelityReference::Renormalized)
            .unwrap_or(f64::NAN)
    });

    let mut im_zero_crossings = Vec::new();
    for i in 1..times.len().saturating_sub(1) {
        let (a, b) = (states[i].omega.im, states[i + 1].omega.im);
        if a != 0.0 && (a > 0.0) != (b > 0.0) {
            im_zero_crossings.push(bisect_root(
                |t| traj.state_at(t).omega.im,
                times[i],
                times[i + 1],
                1e-13 * times[i].max(1.0),
            ));
        }
    }

    let pr: Vec<f64> = (0..=k_max).map(|k| predicted_t_r(t_hat, k)).collect();
    let pi: Vec<f64> = (0..=k_max).map(|k| predicted_t_i(t_hat, k)).collect();
    Ok(CombReport {
        t_hat,
        t0: p.t0(),
        events_r: match_events(&pr, &detected_tr),
        events_i: match_events(&pi, &detected_ti),
        detected_tr,
        detected_ti,
        renormalized_peaks,
        im_zero_crossings,
    })
}

/// Fidelity-based proxy of the order-parameter comb:
/// `N × |⟨u^1(classical return)|Ψ(t)⟩|²`.
///
/// This is not the expectation value `2⟨S_A^z − S_B^z⟩`; its maxima mark
/// the instants where the evolved state is a classical symmetry-broken
/// state. The literal expectation value comes from the `ed` module.
pub fn order_parameter_trace(traj: &ExactTrajectory, times: &[f64]) -> Result<TimeSeries> {
    let n = traj.params.n_f64();
    let v = traj
        .sample(times)
        .iter()
        .map(|s| Ok(n * traj.fidelity(s, FidelityReference::ClassicalReturn)?))
        .collect::<Result<Vec<_>>>()?;
    let mut out = TimeSeries::new(times.to_vec());
    out.push("order_parameter_proxy", "1", v)?;
    Ok(out)
}

/// Linear extrapolation in `√x` to `x = 0` through the two points with the
/// smallest `x`.
pub fn extrapolate_sqrt(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).filter(|&i| ys[i].is_finite()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    if idx.len() < 2 {
        return None;
    }
    let (s1, s2) = (xs[idx[0]].sqrt(), xs[idx[1]].sqrt());
    let (y1, y2) = (ys[idx[0]], ys[idx[1]]);
    Some(y1 - (y2 - y1) * s1 / (s2 - s1))
}
