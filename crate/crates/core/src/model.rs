//! Model parameters, derived scales and the field schedule.
//!
//! Internal units take ħ = 1 by default, but ħ, J and δ are all carried
//! explicitly so that scaling relations can be exercised.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Physical constants of one scenario.
///
/// The ramp start `t0 = H0/δ` is always derived from `H0` and `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    j: f64,
    delta: f64,
    h0: f64,
    n: usize,
    hbar: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "J")]
    j: f64,
    delta: f64,
    #[serde(rename = "H0")]
    h0: f64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(default = "one")]
    hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.j, r.delta, r.h0, r.n)?.with_hbar(r.hbar)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            j: p.j,
            delta: p.delta,
            h0: p.h0,
            n: p.n,
            hbar: p.hbar,
        }
    }
}

impl ModelParams {
    pub fn new(j: f64, delta: f64, h0: f64, n: usize) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(j.is_finite() && j > 0.0) {
            return bad("J must be finite and > 0");
        }
        if !(delta.is_finite() && delta > 0.0) {
            return bad("delta must be finite and > 0");
        }
        if !(h0.is_finite() && h0 >= 0.0) {
            return bad("H0 must be finite and >= 0");
        }
        if n < 4 || n % 2 != 0 {
            return bad("N must be even and >= 4");
        }
        Ok(ModelParams {
            j,
            delta,
            h0,
            n,
            hbar: 1.0,
        })
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParams("hbar must be finite and > 0".into()));
        }
        self.hbar = hbar;
        Ok(self)
    }

    pub fn with_h0(self, h0: f64) -> Result<Self> {
        ModelParams::new(self.j, self.delta, h0, self.n)?.with_hbar(self.hbar)
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        ModelParams::new(self.j, delta, self.h0, self.n)?.with_hbar(self.hbar)
    }

    pub fn with_n(self, n: usize) -> Result<Self> {
        ModelParams::new(self.j, self.delta, self.h0, n)?.with_hbar(self.hbar)
    }

    /// Parameters whose ramp starts at `t0` (sets `H0 = δ t0`).
    pub fn with_t0(self, t0: f64) -> Result<Self> {
        self.with_h0(self.delta * t0)
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn t0(&self) -> f64 {
        self.h0 / self.delta
    }

    /// Checks that `S_A = S_B = N/4` is a valid (integer or half-integer)
    /// spin and `N` is within the ED limit.
    pub fn require_ed_sector(&self) -> Result<()> {
        if self.n % 2 != 0 || self.n > crate::ed::MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "exact diagonalization needs even N <= {}, got {}",
                crate::ed::MAX_SITES,
                self.n
            )));
        }
        Ok(())
    }

    pub fn scales(&self) -> DerivedScales {
        DerivedScales::new(*self)
    }
}

/// Field schedule `H(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `H(t) = δ t`.
    #[default]
    Ramp,
    /// `H(t) = H0` for all t (control runs).
    Frozen,
}

impl Schedule {
    /// Field at time `t` without the `t >= t0` check.
    pub fn field(&self, p: &ModelParams, t: f64) -> f64 {
        match self {
            Schedule::Ramp => p.delta * t,
            Schedule::Frozen => p.h0,
        }
    }
}

/// `H(t) = δ t`, defined from the ramp start on.
pub fn field_at(p: &ModelParams, t: f64) -> Result<f64> {
    let t0 = p.t0();
    if t < t0 {
        return domain(format!("t = {t} is before schedule start t0 = {t0}"));
    }
    if t == t0 {
        return Ok(p.h0);
    }
    Ok(p.delta * t)
}

/// Freeze-out time `t̂ = (ħ²/(J δ))^(1/3)`.
pub fn freeze_out_time(p: &ModelParams) -> f64 {
    (p.hbar * p.hbar / (p.j * p.delta)).cbrt()
}

/// Static width `ω_S(H) = N⁻¹ √(4J/H)`.
pub fn static_omega(p: &ModelParams, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("static width needs H > 0, got {h}"));
    }
    Ok((4.0 * p.j / h).sqrt() / p.n_f64())
}

/// `H_R = H H0 / (ħ² δ² / (2J))^(1/3)`.
pub fn renormalized_field(p: &ModelParams, h: f64) -> f64 {
    h * p.h0 / (p.hbar * p.hbar * p.delta * p.delta / (2.0 * p.j)).cbrt()
}

/// Field whose snapshot ground state the adiabatic-impulse sum rebuilds at
/// the recursion times: `H H0 / (δ t̂)`. It is `2^(-1/3)` times
/// [`renormalized_field`].
pub fn kz_recursion_field(p: &ModelParams, h: f64) -> f64 {
    h * p.h0 / (p.delta * freeze_out_time(p))
}

/// Scales derived from one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    params: ModelParams,
    pub t_hat: f64,
    pub e_thin_magnon: f64,
    pub e_thin_tower: f64,
}

impl DerivedScales {
    pub fn new(params: ModelParams) -> Self {
        DerivedScales {
            params,
            t_hat: freeze_out_time(&params),
            e_thin_magnon: params.j,
            e_thin_tower: params.j / params.n_f64(),
        }
    }

    pub fn omega_s(&self, h: f64) -> Result<f64> {
        static_omega(&self.params, h)
    }

    /// `√(J H)`.
    pub fn e_thin_dual(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return domain(format!("dual thin energy needs H >= 0, got {h}"));
        }
        Ok((self.params.j * h).sqrt())
    }
}

/// The continuum Hamiltonian written as `Π²/(2m) + k S²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumHamiltonian {
    params: ModelParams,
}

impl ContinuumHamiltonian {
    pub fn new(params: ModelParams) -> Self {
        ContinuumHamiltonian { params }
    }

    /// `m = 2ħ²/(N H)`.
    pub fn mass(&self, h: f64) -> f64 {
        let p = &self.params;
        2.0 * p.hbar * p.hbar / (p.n_f64() * h)
    }

    /// `k = 2J/N`.
    pub fn stiffness(&self) -> f64 {
        2.0 * self.params.j / self.params.n_f64()
    }

    /// `ħ²/(2m) = N H / 4`, the coefficient of `-∂²/∂S²`.
    pub fn kinetic_coefficient(&self, h: f64) -> f64 {
        self.params.n_f64() * h / 4.0
    }

    /// `k/2 = J/N`, the coefficient of `S²`.
    pub fn potential_coefficient(&self) -> f64 {
        self.params.j / self.params.n_f64()
    }

    /// `√(k/m)`.
    pub fn classical_frequency(&self, h: f64) -> f64 {
        (self.stiffness() / self.mass(h)).sqrt()
    }

    /// Classical energy in the form `(H N/4ħ²) Π² + (J/N) S²`.
    pub fn energy_field_form(&self, h: f64, pi: f64, s: f64) -> f64 {
        let p = &self.params;
        h * p.n_f64() / (4.0 * p.hbar * p.hbar) * pi * pi + p.j / p.n_f64() * s * s
    }

    /// Classical energy in the form `Π²/(2m) + k S²/2`.
    pub fn energy_mass_form(&self, h: f64, pi: f64, s: f64) -> f64 {
        pi * pi / (2.0 * self.mass(h)) + 0.5 * self.stiffness() * s * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(j: f64, delta: f64, h0: f64, n: usize) -> ModelParams {
        ModelParams::new(j, delta, h0, n).unwrap()
    }

    #[test]
    fn field_schedule() {
        let a = p(1.0, 1.0, 0.01, 100);
        assert_eq!(field_at(&a, 0.01).unwrap(), 0.01);
        let b = p(1.0, 2.0, 0.0, 100);
        assert_eq!(field_at(&b, 3.0).unwrap(), 6.0);
        let c = p(1.0, 1.0, 0.5, 100);
        assert!(matches!(field_at(&c, 0.5 - 1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn field_at_start_is_exact_for_awkward_values() {
        for &(d, h0) in &[(0.3, 0.7), (1.0 / 3.0, 0.1), (7.1, 1e-5)] {
            let q = p(1.0, d, h0, 100);
            assert_eq!(field_at(&q, q.t0()).unwrap(), h0);
        }
    }

    #[test]
    fn freeze_out_examples() {
        assert_eq!(freeze_out_time(&p(1.0, 1.0, 0.0, 4)), 1.0);
        assert!((freeze_out_time(&p(1.0, 8.0, 0.0, 4)) - 0.5).abs() < 1e-15);
        assert!((freeze_out_time(&p(2.0, 4.0, 0.0, 4)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn static_omega_examples() {
        assert!((static_omega(&p(1.0, 1.0, 0.0, 100), 0.04).unwrap() - 0.1).abs() < 1e-15);
        assert!((static_omega(&p(1.0, 1.0, 0.0, 10), 4.0).unwrap() - 0.1).abs() < 1e-15);
        assert!((static_omega(&p(1.0, 1.0, 0.0, 200), 0.04).unwrap() - 0.05).abs() < 1e-15);
        assert!(static_omega(&p(1.0, 1.0, 0.0, 200), 0.0).is_err());
    }

    #[test]
    fn renormalized_field_examples() {
        let a = p(1.0, 2f64.sqrt(), 0.1, 100);
        assert!((renormalized_field(&a, 1.0) - 0.1).abs() < 1e-15);
        assert_eq!(renormalized_field(&p(1.0, 1.0, 0.0, 100), 1.0), 0.0);
        let c = p(4.0, 1.0, 0.2, 100);
        assert!((renormalized_field(&c, 2.0) - 0.8).abs() < 1e-14);
    }

    #[test]
    fn kz_field_differs_by_cube_root_two() {
        let a = p(1.3, 0.7, 0.05, 100);
        let r = renormalized_field(&a, 2.0) / kz_recursion_field(&a, 2.0);
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, 1.0, 0.0, 4).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.0, 4).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1, 4).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 5).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0, 2).is_err());
        assert!(p(1.0, 1.0, 0.0, 6).require_ed_sector().is_ok());
        assert!(p(1.0, 1.0, 0.0, 20_002).require_ed_sector().is_err());
        assert!(p(1.0, 1.0, 0.0, 8).require_ed_sector().is_ok());
    }

    #[test]
    fn serde_roundtrip_and_validation() {
        let a = p(1.5, 0.25, 0.01, 100);
        let s = serde_json::to_string(&a).unwrap();
        let b: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        let bad = r#"{"J": 1.0, "delta": 1.0, "H0": 0.1, "N": 7}"#;
        assert!(serde_json::from_str::<ModelParams>(bad).is_err());
        let d: ModelParams = serde_json::from_str(r#"{"J":1,"delta":2,"H0":0,"N":8}"#).unwrap();
        assert_eq!(d.hbar(), 1.0);
    }

    #[test]
    fn continuum_forms_agree() {
        let a = p(1.7, 0.3, 0.1, 64).with_hbar(0.8).unwrap();
        let c = ContinuumHamiltonian::new(a);
        for &(h, pi, s) in &[(0.3, 1.2, -0.7), (2.0, -0.1, 3.0), (1e-3, 5.0, 0.2)] {
            let e1 = c.energy_field_form(h, pi, s);
            let e2 = c.energy_mass_form(h, pi, s);
            assert!((e1 - e2).abs() <= 1e-13 * e1.abs());
            let w = c.classical_frequency(h);
            let dual = a.scales().e_thin_dual(h).unwrap() / a.hbar();
            assert!((w - dual).abs() < 1e-13 * dual);
        }
    }
}
