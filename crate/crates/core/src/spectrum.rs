//! Static thin-spectrum theory and half-line Gaussian–Hermite states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{static_omega, ModelParams};
use crate::numerics::hermite::{hermite_functions, hermite_poly, ln_factorial};
use crate::numerics::quadrature::{composite_gauss_legendre, integrate};

/// Half-line cutoff in units of the narrowest width, `S_max = 12/√(Re ω)`.
pub const CUTOFF_WIDTHS: f64 = 12.0;

/// Default truncation tolerance on the captured weight of an expansion.
pub const EXPANSION_TOL: f64 = 1e-8;

/// Largest order an automatic expansion may use.
pub const EXPANSION_CAP: usize = 4001;

/// An order-`n` Gaussian–Hermite state on `S >= 0`:
///
/// `Ψ(S) = √(1/(2^(n-1) n!)) (Re ω/π)^(1/4) e^(-i(n+½)φ) H_n(√(Re ω) S) e^(-S²ω/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianHermiteState {
    n: usize,
    omega: Complex64,
    phi: f64,
}

impl GaussianHermiteState {
    pub fn new(n: usize, omega: Complex64, phi: f64) -> Result<Self> {
        if n % 2 == 0 {
            return domain(format!("order n = {n} is even; half-line states need odd n"));
        }
        if !(omega.re > 0.0 && omega.re.is_finite() && omega.im.is_finite()) {
            return domain(format!("width {omega} must have finite positive real part"));
        }
        if !phi.is_finite() {
            return domain("phase must be finite");
        }
        Ok(GaussianHermiteState { n, omega, phi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Amplitude at `S` (zero for `S < 0`), stable for large `n`.
    pub fn value(&self, s: f64) -> Complex64 {
        if s < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let a = self.omega.re;
        let mut buf = vec![0.0; self.n + 1];
        hermite_functions(a.sqrt() * s, &mut buf);
        self.assemble(s, buf[self.n])
    }

    /// Amplitude from the polynomial form directly. Only for moderate `n`
    /// and `S`; [`value`](Self::value) is the general path.
    pub fn value_literal(&self, s: f64) -> Complex64 {
        if s < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.n as f64;
        let a = self.omega.re;
        let pref = (-0.5 * ((n - 1.0) * std::f64::consts::LN_2 + ln_factorial(self.n))).exp()
            * (a / std::f64::consts::PI).powf(0.25);
        let phase = Complex64::new(0.0, -(n + 0.5) * self.phi).exp();
        let gauss = (-(s * s) * self.omega / 2.0).exp();
        phase * gauss * pref * hermite_poly(self.n, a.sqrt() * s)
    }

    /// Combines a normalized Hermite function value `ψ_n(√a S)` with the
    /// half-line prefactor, chirp and phase.
    fn assemble(&self, s: f64, psi_n: f64) -> Complex64 {
        let a = self.omega.re;
        let chirp = -0.5 * self.omega.im * s * s - (self.n as f64 + 0.5) * self.phi;
        Complex64::from_polar(std::f64::consts::SQRT_2 * a.powf(0.25) * psi_n, chirp)
    }

    /// Upper end of the integration range for this state.
    pub fn extent(&self) -> f64 {
        let x = CUTOFF_WIDTHS.max((2.0 * self.n as f64 + 1.0).sqrt() + 8.0);
        x / self.omega.re.sqrt()
    }

    /// `∫₀^∞ |Ψ|² dS` by adaptive quadrature.
    pub fn half_line_norm(&self) -> Result<f64> {
        let v = integrate(
            |s| Complex64::new(self.value(s).norm_sqr(), 0.0),
            0.0,
            self.extent(),
            1e-14,
            1e-13,
        )?;
        Ok(v.re)
    }
}

/// Real-width snapshot eigenstate of order `n` at field `H`, with `φ = 0`.
pub fn snapshot_eigenstate(p: &ModelParams, h: f64, n: usize) -> Result<GaussianHermiteState> {
    if n % 2 == 0 {
        return domain(format!("order n = {n} is even; half-line states need odd n"));
    }
    let w = static_omega(p, h)?;
    GaussianHermiteState::new(n, Complex64::new(w, 0.0), 0.0)
}

/// Static ground state `n = 1` at field `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticGroundState {
    pub state: GaussianHermiteState,
    pub field: f64,
}

impl StaticGroundState {
    pub fn new(p: &ModelParams, h: f64) -> Result<Self> {
        Ok(StaticGroundState {
            state: snapshot_eigenstate(p, h, 1)?,
            field: h,
        })
    }
}

/// `√(J H) (n + ½)`.
pub fn dual_thin_energy(p: &ModelParams, h: f64, n: usize) -> Result<f64> {
    Ok(p.scales().e_thin_dual(h)? * (n as f64 + 0.5))
}

/// `N e^(-ω_S(H))`.
pub fn static_order_parameter(p: &ModelParams, h: f64) -> Result<f64> {
    Ok(p.n_f64() * (-static_omega(p, h)?).exp())
}

/// `|⟨1_ω₁|1_ω₂⟩|² = 8 (Re ω₁ Re ω₂)^(3/2) / |ω̄₁ + ω₂|³`.
pub fn overlap_n1(bra: Complex64, ket: Complex64) -> Result<f64> {
    if !(bra.re > 0.0 && ket.re > 0.0) {
        return domain(format!("overlap needs positive real widths, got {bra} and {ket}"));
    }
    let s = bra.conj() + ket;
    // Written as a product of ratios so that widely different widths do
    // not overflow.
    let r = (bra.re / s.norm()) * (ket.re / s.norm());
    Ok(8.0 * r * r.sqrt())
}

/// `⟨bra|ket⟩` on the half line by adaptive quadrature.
pub fn overlap_quadrature(bra: &GaussianHermiteState, ket: &GaussianHermiteState) -> Result<Complex64> {
    let hi = bra.extent().min(ket.extent());
    integrate(|s| bra.value(s).conj() * ket.value(s), 0.0, hi, 1e-14, 1e-12)
}

/// Coefficients of a state in the real-width snapshot basis `{u^n(ω_b)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub basis_omega: f64,
    /// `coeffs[n] = ⟨u^n|Ψ⟩`; entries with even `n` are structural zeros.
    pub coeffs: Vec<Complex64>,
}

impl Expansion {
    pub fn n_max(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        if n % 2 == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs.get(n).copied().unwrap_or_default()
    }

    /// `Σ |c_n|²`.
    pub fn weight(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Drops orders above the smallest odd `n` whose cumulative weight
    /// reaches `1 - tol`, or reports truncation.
    pub fn truncate_to_weight(mut self, tol: f64) -> Result<Self> {
        let mut acc = 0.0;
        for n in (1..self.coeffs.len()).step_by(2) {
            acc += self.coeffs[n].norm_sqr();
            if acc >= 1.0 - tol {
                self.coeffs.truncate(n + 1);
                return Ok(self);
            }
        }
        Err(Error::Truncation {
            n_max: self.n_max(),
            weight: acc,
            tolerance: tol,
        })
    }
}

/// `c_n = ∫₀^∞ u^n(S; ω_b) Ψ(S) dS` for odd `n <= n_max`, by composite
/// Gauss–Legendre quadrature with all orders built at each node.
pub fn expand_in_snapshot_basis(state: &GaussianHermiteState, basis_omega: f64, n_max: usize) -> Result<Expansion> {
    if !(basis_omega > 0.0 && basis_omega.is_finite()) {
        return domain(format!("basis width must be positive, got {basis_omega}"));
    }
    if n_max % 2 == 0 {
        return domain(format!("n_max = {n_max} must be odd"));
    }
    let a_s = state.omega.re;
    let s_max = CUTOFF_WIDTHS / a_s.min(basis_omega).sqrt();
    let sb = basis_omega.sqrt();
    // Panel width chosen so that every factor of the integrand varies by a
    // few radians at most per panel in basis units x = √ω_b S.
    let x_max = sb * s_max;
    let k = (2.0 * n_max as f64 + 1.0).sqrt()
        + state.omega.im.abs() * s_max / sb
        + (a_s / basis_omega).sqrt() * CUTOFF_WIDTHS
        + 1.0;
    let panels = ((x_max * k / 3.0).ceil() as usize).max(8);
    let rule = composite_gauss_legendre(0.0, s_max, panels, 16);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let mut buf = vec![0.0; n_max + 1];
    let pref = std::f64::consts::SQRT_2 * basis_omega.powf(0.25);
    for (s, w) in rule {
        let psi = state.value(s);
        if psi.norm_sqr() == 0.0 {
            continue;
        }
        hermite_functions(sb * s, &mut buf);
        let f = psi * (w * pref);
        for n in (1..=n_max).step_by(2) {
            coeffs[n] += f * buf[n];
        }
    }
    Ok(Expansion { basis_omega, coeffs })
}

/// Expansion truncated at the smallest odd order capturing `1 - tol` of the
/// weight, searching up to `cap`.
pub fn expand_to_tolerance(state: &GaussianHermiteState, basis_omega: f64, tol: f64, cap: usize) -> Result<Expansion> {
    let cap = if cap % 2 == 0 { cap.saturating_sub(1) } else { cap };
    let mut n_max = 63usize.min(cap);
    loop {
        let e = expand_in_snapshot_basis(state, basis_omega, n_max)?;
        match e.truncate_to_weight(tol) {
            Ok(e) => return Ok(e),
            Err(err) if n_max >= cap => return Err(err),
            Err(_) => n_max = (2 * n_max + 1).min(cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(n: usize) -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.0, n).unwrap()
    }

    #[test]
    fn snapshot_examples() {
        let p = params(100);
        assert!(snapshot_eigenstate(&p, 0.04, 2).is_err());
        let s = snapshot_eigenstate(&p, 0.04, 1).unwrap();
        assert!((s.omega() - c(0.1, 0.0)).norm() < 1e-15);
        assert_eq!(s.omega().im, 0.0);
        for n in [1, 3, 5, 21] {
            assert_eq!(snapshot_eigenstate(&p, 0.04, n).unwrap().value(0.0).norm(), 0.0);
        }
    }

    #[test]
    fn dual_energy_examples() {
        let p = params(100);
        assert!((dual_thin_energy(&p, 1.0, 1).unwrap() - 1.5).abs() < 1e-15);
        let p4 = ModelParams::new(4.0, 1.0, 0.0, 100).unwrap();
        assert!((dual_thin_energy(&p4, 1.0, 1).unwrap() - 3.0).abs() < 1e-15);
        for n in [1, 3, 7] {
            let gap = dual_thin_energy(&p, 0.3, n + 2).unwrap() - dual_thin_energy(&p, 0.3, n).unwrap();
            assert!((gap - 2.0 * 0.3f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn order_parameter_examples() {
        let p = params(100);
        assert!((static_order_parameter(&p, 0.04).unwrap() - 100.0 * (-0.1f64).exp()).abs() < 1e-12);
        assert!((static_order_parameter(&p, 1e12).unwrap() - 100.0).abs() < 1e-3);
    }

    #[test]
    fn overlap_examples() {
        assert!((overlap_n1(c(0.7, 0.0), c(0.7, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        let rho: f64 = 1e-4;
        let want = 8.0 * rho.powf(1.5) / (1.0 + rho).powi(3);
        assert!((overlap_n1(c(1.0, 0.0), c(rho, 0.0)).unwrap() - want).abs() < 1e-18);
        assert!((want - 7.9976e-6).abs() < 1e-9);
        let v = overlap_n1(c(1.0, 0.0), c(1.0, 1.0)).unwrap();
        assert!((v - 8.0 / 5f64.powf(1.5)).abs() < 1e-15);
        assert!((v - 0.71554).abs() < 1e-5);
        assert!(overlap_n1(c(0.0, 1.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn literal_and_stable_forms_agree() {
        let st = GaussianHermiteState::new(7, c(0.8, -0.4), 0.3).unwrap();
        for i in 0..40 {
            let s = i as f64 * 0.2;
            assert!((st.value(s) - st.value_literal(s)).norm() < 1e-13);
        }
    }

    #[test]
    fn expansion_identical_widths() {
        let st = GaussianHermiteState::new(1, c(0.3, 0.0), 0.0).unwrap();
        let e = expand_in_snapshot_basis(&st, 0.3, 15).unwrap();
        assert!((e.coeff(1) - c(1.0, 0.0)).norm() < 1e-12);
        for n in (3..=15).step_by(2) {
            assert!(e.coeff(n).norm() < 1e-12);
        }
        assert_eq!(e.coeff(4), c(0.0, 0.0));
    }

    #[test]
    fn expansion_matches_closed_form_overlap() {
        // Width ratio 100, as in the impulse regime.
        let st = GaussianHermiteState::new(1, c(1.0, 0.0), 0.0).unwrap();
        let e = expand_to_tolerance(&st, 100.0, EXPANSION_TOL, EXPANSION_CAP).unwrap();
        let c1 = e.coeff(1).norm_sqr();
        let want = overlap_n1(c(100.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((c1 - want).abs() < 1e-12);
        assert!((e.weight() - 1.0).abs() < EXPANSION_TOL);
    }

    #[test]
    fn expansion_of_complex_state_is_complete() {
        let st = GaussianHermiteState::new(1, c(0.5, 0.9), 0.4).unwrap();
        let e = expand_to_tolerance(&st, 0.7, 1e-10, EXPANSION_CAP).unwrap();
        assert!((e.weight() - 1.0).abs() < 1e-10);
        let ov = overlap_n1(c(0.7, 0.0), c(0.5, 0.9)).unwrap();
        assert!((e.coeff(1).norm_sqr() - ov).abs() < 1e-12);
    }

    #[test]
    fn truncation_error_reported() {
        let st = GaussianHermiteState::new(1, c(1.0, 0.0), 0.0).unwrap();
        let r = expand_to_tolerance(&st, 1e4, 1e-8, 31);
        assert!(matches!(r, Err(Error::Truncation { n_max: 31, .. })));
    }
}
