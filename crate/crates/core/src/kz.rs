//! Adiabatic-impulse (Kibble–Zurek) description of the ramp.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{field_at, freeze_out_time, static_omega, ModelParams};
use crate::series::TimeSeries;
use crate::spectrum::{
    expand_in_snapshot_basis, expand_to_tolerance, overlap_n1, snapshot_eigenstate, GaussianHermiteState,
    EXPANSION_CAP, EXPANSION_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    Adiabatic,
    Impulse,
    PostFreezeOut,
}

/// Regime of the point `(t, t0)` for freeze-out time `t̂`. Boundaries
/// `t = t̂` and `t0 = t̂` belong to the later regime.
pub fn classify_regime(t: f64, t0: f64, t_hat: f64) -> Result<RegimeLabel> {
    if !(t0 > 0.0 && t_hat > 0.0) {
        return domain(format!("regime needs t0 > 0 and t_hat > 0, got t0 = {t0}, t_hat = {t_hat}"));
    }
    if t < t0 {
        return domain(format!("t = {t} < t0 = {t0} is unphysical"));
    }
    Ok(if t0 >= t_hat {
        RegimeLabel::Adiabatic
    } else if t < t_hat {
        RegimeLabel::Impulse
    } else {
        RegimeLabel::PostFreezeOut
    })
}

/// `τ(t) = ħ / √(J δ t)`.
pub fn relaxation_time(p: &ModelParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("relaxation time needs t > 0, got {t}"));
    }
    Ok(p.hbar() / (p.j() * p.delta() * t).sqrt())
}

/// `1 - 8 ρ^(3/2) / (1 + ρ)³` with `ρ = √(t0/t)`.
pub fn frozen_defect_closed_form(t0_over_t: f64) -> f64 {
    let rho = t0_over_t.sqrt();
    1.0 - 8.0 * rho * rho.sqrt() / (1.0 + rho).powi(3)
}

/// Leading small-`t0` law for the saturated defect density,
/// `1 - 8 (t0/t̂)^(3/4)`.
pub fn defect_saturation_law(t0_over_that: f64) -> f64 {
    1.0 - 8.0 * t0_over_that.powf(0.75)
}

/// Defect density of the frozen initial ground state against the snapshot
/// ground state at `H(t)`, held fixed after freeze-out.
///
/// Freeze-out happens at `max(t0, t̂)`, so the density vanishes identically
/// when the ramp starts in the adiabatic regime.
pub fn frozen_defect_density(p: &ModelParams, t: f64) -> Result<f64> {
    let t0 = p.t0();
    if t < t0 {
        return domain(format!("t = {t} is before schedule start t0 = {t0}"));
    }
    static_omega(p, p.h0())?;
    let t_freeze = freeze_out_time(p).max(t0);
    let te = t.min(t_freeze);
    // ω_S(H(te))/ω_S(H0) = √(H0/H(te)); the ratio form keeps N out exactly.
    let ratio = (p.h0() / field_at(p, te)?).sqrt();
    Ok((1.0 - overlap_n1(Complex64::new(ratio, 0.0), Complex64::new(1.0, 0.0))?).max(0.0))
}

/// Sampled frozen-state defect density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectTrace {
    /// Columns `t_over_that` and `D`.
    pub series: TimeSeries,
    pub d_sat: f64,
    pub t0_over_that: f64,
}

/// Defect density at the given times (each `>= t0`).
pub fn defect_trace(p: &ModelParams, times: &[f64]) -> Result<DefectTrace> {
    let t_hat = freeze_out_time(p);
    let d = times
        .iter()
        .map(|&t| frozen_defect_density(p, t))
        .collect::<Result<Vec<_>>>()?;
    let mut series = TimeSeries::new(times.to_vec());
    series.push("t_over_that", "1", times.iter().map(|t| t / t_hat).collect())?;
    series.push("D", "1", d)?;
    Ok(DefectTrace {
        series,
        d_sat: frozen_defect_density(p, t_hat.max(p.t0()))?,
        t0_over_that: p.t0() / t_hat,
    })
}

/// Ramp-rate threshold `δ* = √(H0³ J)/ħ` below which a ramp starting at
/// `H0` is nearly adiabatic. The limits `δ → 0` and `H0 → 0` do not
/// commute: at fixed `δ` the threshold itself vanishes as `H0 → 0`.
pub fn adiabaticity_bound(p: &ModelParams) -> Result<f64> {
    if !(p.h0() > 0.0) {
        return domain("adiabaticity bound needs H0 > 0");
    }
    Ok((p.h0().powi(3) * p.j()).sqrt() / p.hbar())
}

/// `Ω_n(t) = (2/3)(n + ½)[(t/t̂)^(3/2) - 1]`, defined for `t >= t̂`.
pub fn dynamical_phase(n: usize, t: f64, t_hat: f64) -> Result<f64> {
    if t < t_hat {
        return domain(format!("dynamical phase is defined from freeze-out on; t = {t} < t_hat = {t_hat}"));
    }
    let x = t / t_hat;
    Ok(2.0 / 3.0 * (n as f64 + 0.5) * (x * x.sqrt() - 1.0))
}

/// `t_k = (1 + 3kπ/2)^(2/3) t̂` for `k = 0..=k_max`.
pub fn recursion_times(t_hat: f64, k_max: usize) -> Vec<f64> {
    (0..=k_max)
        .map(|k| (1.0 + 1.5 * std::f64::consts::PI * k as f64).powf(2.0 / 3.0) * t_hat)
        .collect()
}

/// The phased snapshot superposition `Σ c_n e^(-iΩ_n(t)) u^n(ω_S(H(t)))`.
///
/// The geometric phase is zero because the snapshot states are real.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KzState {
    pub t: f64,
    /// Width of the snapshot basis at `H(t)`.
    pub basis_omega: f64,
    /// `coeffs[n] = c_n e^(-iΩ_n(t))`, even entries zero.
    pub coeffs: Vec<Complex64>,
}

impl KzState {
    pub fn n_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn weight(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨u^1(ω_ref)|ψ⟩`, with the reference expanded in the same basis and
    /// truncation.
    pub fn amplitude_with(&self, omega_ref: f64) -> Result<Complex64> {
        let reference = GaussianHermiteState::new(1, Complex64::new(omega_ref, 0.0), 0.0)?;
        let d = expand_in_snapshot_basis(&reference, self.basis_omega, self.n_max().max(1))?;
        Ok((1..=self.n_max())
            .step_by(2)
            .map(|n| d.coeff(n).conj() * self.coeffs[n])
            .sum())
    }

    /// `|⟨u^1(ω_ref)|ψ⟩|²`.
    pub fn fidelity_with(&self, omega_ref: f64) -> Result<f64> {
        Ok(self.amplitude_with(omega_ref)?.norm_sqr())
    }

    /// Amplitude at `S`.
    pub fn value(&self, s: f64) -> Complex64 {
        let mut buf = vec![0.0; self.n_max() + 1];
        crate::numerics::hermite::hermite_functions(self.basis_omega.sqrt() * s, &mut buf);
        let pref = std::f64::consts::SQRT_2 * self.basis_omega.powf(0.25);
        (1..=self.n_max())
            .step_by(2)
            .map(|n| self.coeffs[n] * (pref * buf[n]))
            .sum()
    }
}

/// Impulse-stage coefficients `c_n = ⟨u^n(ω_S(δ t̂))|u^1(ω_S(H0))⟩`.
///
/// With `n_max = None` the expansion is truncated at the smallest odd order
/// capturing `1 - 1e-8` of the weight (capped at 4001).
pub fn impulse_coefficients(p: &ModelParams, n_max: Option<usize>) -> Result<crate::spectrum::Expansion> {
    let t_hat = freeze_out_time(p);
    let initial = snapshot_eigenstate(p, p.h0(), 1)?;
    let basis = static_omega(p, p.delta() * t_hat)?;
    match n_max {
        Some(n) => {
            let e = expand_in_snapshot_basis(&initial, basis, n)?;
            let deficit = 1.0 - e.weight();
            if deficit > EXPANSION_TOL {
                return Err(crate::Error::Truncation {
                    n_max: n,
                    weight: e.weight(),
                    tolerance: EXPANSION_TOL,
                });
            }
            Ok(e)
        }
        None => expand_to_tolerance(&initial, basis, EXPANSION_TOL, EXPANSION_CAP),
    }
}

/// Adiabatic-impulse state at `t >= t̂`.
///
/// The same construction is used when the ramp starts after `t̂`; there the
/// expansion is nearly trivial but the phased sum still fixes the recursion
/// times.
pub fn kz_state_at(p: &ModelParams, t: f64, n_max: Option<usize>) -> Result<KzState> {
    let c = impulse_coefficients(p, n_max)?;
    kz_state_from(p, &c, t)
}

/// [`kz_state_at`] with precomputed impulse coefficients.
pub fn kz_state_from(p: &ModelParams, c: &crate::spectrum::Expansion, t: f64) -> Result<KzState> {
    let t_hat = freeze_out_time(p);
    let h = p.delta() * t;
    let basis_omega = static_omega(p, h)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); c.n_max() + 1];
    for n in (1..=c.n_max()).step_by(2) {
        let om = dynamical_phase(n, t, t_hat)?;
        coeffs[n] = c.coeff(n) * Complex64::from_polar(1.0, -om);
    }
    Ok(KzState { t, basis_omega, coeffs })
}

/// Fidelity of the phased sum against the snapshot ground state of
/// [`kz_recursion_field`] at each of `times` (all `>= t̂`).
///
/// The reference-to-basis width ratio `√(δ t̂ / H0)` does not depend on
/// `t`, so the reference is expanded once.
pub fn recursion_fidelity_trace(p: &ModelParams, c: &crate::spectrum::Expansion, times: &[f64]) -> Result<Vec<f64>> {
    let t_hat = freeze_out_time(p);
    if !(p.h0() > 0.0) {
        return domain("recursion fidelity needs H0 > 0");
    }
    let ratio = (p.delta() * t_hat / p.h0()).sqrt();
    let reference = GaussianHermiteState::new(1, Complex64::new(ratio, 0.0), 0.0)?;
    let d = expand_in_snapshot_basis(&reference, 1.0, c.n_max().max(1))?;
    times
        .iter()
        .map(|&t| {
            let mut amp = Complex64::new(0.0, 0.0);
            for n in (1..=c.n_max()).step_by(2) {
                amp += d.coeff(n).conj() * c.coeff(n) * Complex64::from_polar(1.0, -dynamical_phase(n, t, t_hat)?);
            }
            Ok(amp.norm_sqr())
        })
        .collect()
}
