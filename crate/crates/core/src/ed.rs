//! Exact diagonalization of the finite Lieb–Mattis model in the sector
//! `S_A = S_B = N/4`, `M = 0`, basis `|S⟩` for `S = 0..=N/2`. For
//! `N ≡ 2 (mod 4)` the sublattice spins are half-integer.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ModelParams, Schedule};
use crate::numerics::tridiag::{lowest_eigenpair, ThomasSolver, Tridiag};
use crate::series::TimeSeries;

/// Largest `N` accepted by the ED module.
pub const MAX_SITES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdBasis {
    pub n: usize,
    /// Twice the sublattice spin, `2 S_A = 2 S_B = N/2`.
    pub two_s_sub: usize,
}

impl EdBasis {
    pub fn dim(&self) -> usize {
        self.n / 2 + 1
    }
}

/// Thin-spectrum energies and the staggered operator `S_A^z − S_B^z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdOperator {
    /// `E(S) = (J/N)[S(S+1) − 2 s(s+1)]`.
    pub diag: Vec<f64>,
    /// `O_S = ⟨S+1, 0| S_A^z − S_B^z |S, 0⟩`.
    pub off: Vec<f64>,
}

impl EdOperator {
    /// `diag(E) − H O` as a complex tridiagonal matrix, shifted by `−e_ref`.
    fn hamiltonian(&self, h: f64, e_ref: f64) -> Tridiag {
        let mut m = Tridiag::zeros(self.diag.len());
        for (d, e) in m.diag.iter_mut().zip(&self.diag) {
            *d = Complex64::new(e - e_ref, 0.0);
        }
        for (i, o) in self.off.iter().enumerate() {
            m.lower[i] = Complex64::new(-h * o, 0.0);
            m.upper[i] = Complex64::new(-h * o, 0.0);
        }
        m
    }

    /// Real off-diagonal of `diag(E) − H O`.
    pub fn hamiltonian_offdiag(&self, h: f64) -> Vec<f64> {
        self.off.iter().map(|o| -h * o).collect()
    }
}

/// Wigner–Eckart closed form
/// `O_S = (S+1) √(((2s+1)² − (S+1)²) / ((2S+1)(2S+3)))`.
/// `two_s_sub` is `2s`, so half-integer sublattice spins are allowed.
pub fn staggered_element(two_s_sub: usize, s: usize) -> f64 {
    let (s2, sp) = ((two_s_sub + 1) as f64, (s + 1) as f64);
    let sf = s as f64;
    sp * ((s2 * s2 - sp * sp) / ((2.0 * sf + 1.0) * (2.0 * sf + 3.0))).sqrt()
}

pub fn build_basis_and_operators(n: usize, j: f64) -> Result<(EdBasis, EdOperator)> {
    if n < 4 || n % 2 != 0 {
        return domain(format!("ED needs even N >= 4, got {n}"));
    }
    if n > MAX_SITES {
        return domain(format!("N = {n} exceeds the ED limit {MAX_SITES}"));
    }
    let basis = EdBasis { n, two_s_sub: n / 2 };
    let s = 0.5 * basis.two_s_sub as f64;
    let nf = n as f64;
    let diag = (0..basis.dim())
        .map(|sv| {
            let sv = sv as f64;
            j / nf * (sv * (sv + 1.0) - 2.0 * s * (s + 1.0))
        })
        .collect();
    let off = (0..basis.dim() - 1).map(|sv| staggered_element(basis.two_s_sub, sv)).collect();
    Ok((basis, EdOperator { diag, off }))
}

fn ln_fact(k: i64) -> f64 {
    (2..=k).map(|v| (v as f64).ln()).sum()
}

/// Clebsch–Gordan coefficient `⟨j1 m1 j2 m2 | J M⟩` for integer spins.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, jt: i64, mt: i64) -> f64 {
    clebsch_gordan_doubled(2 * j1, 2 * m1, 2 * j2, 2 * m2, 2 * jt, 2 * mt)
}

/// Clebsch–Gordan coefficient with every argument doubled (so `1` is
/// spin ½), by the Racah formula with Condon–Shortley phases.
pub fn clebsch_gordan_doubled(tj1: i64, tm1: i64, tj2: i64, tm2: i64, tjt: i64, tmt: i64) -> f64 {
    if tm1 + tm2 != tmt || tm1.abs() > tj1 || tm2.abs() > tj2 || tmt.abs() > tjt {
        return 0.0;
    }
    if tjt < (tj1 - tj2).abs() || tjt > tj1 + tj2 {
        return 0.0;
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tjt + tmt) % 2 != 0 || (tj1 + tj2 + tjt) % 2 != 0 {
        return 0.0;
    }
    let h = |v: i64| v / 2;
    let pre = 0.5 * ((tjt + 1) as f64).ln()
        + 0.5
            * (ln_fact(h(tjt + tj1 - tj2)) + ln_fact(h(tjt - tj1 + tj2)) + ln_fact(h(tj1 + tj2 - tjt))
                - ln_fact(h(tj1 + tj2 + tjt) + 1))
        + 0.5
            * (ln_fact(h(tjt + tmt))
                + ln_fact(h(tjt - tmt))
                + ln_fact(h(tj1 - tm1))
                + ln_fact(h(tj1 + tm1))
                + ln_fact(h(tj2 - tm2))
                + ln_fact(h(tj2 + tm2)));
    let mut sum = 0.0;
    for k in 0..=h(tj1 + tj2 + tjt) {
        let d = [
            k,
            h(tj1 + tj2 - tjt) - k,
            h(tj1 - tm1) - k,
            h(tj2 + tm2) - k,
            h(tjt - tj2 + tm1) + k,
            h(tjt - tj1 - tm2) + k,
        ];
        if d.iter().any(|&v| v < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (pre - d.iter().map(|&v| ln_fact(v)).sum::<f64>()).exp();
    }
    sum
}

/// `⟨S', 0| S_A^z − S_B^z |S, 0⟩` from the explicit product-basis expansion
/// `|S, 0⟩ = Σ_m ⟨s m s −m|S 0⟩ |m, −m⟩`, with `two_s_sub = 2s`.
pub fn staggered_element_brute_force(two_s_sub: usize, s_bra: usize, s_ket: usize) -> f64 {
    let ts = two_s_sub as i64;
    (-ts..=ts)
        .step_by(2)
        .map(|tm| {
            clebsch_gordan_doubled(ts, tm, ts, -tm, 2 * s_bra as i64, 0)
                * clebsch_gordan_doubled(ts, tm, ts, -tm, 2 * s_ket as i64, 0)
                * tm as f64
        })
        .sum()
}

/// Largest deviation between the closed form and the brute-force matrix of
/// `S_A^z − S_B^z` (all pairs, including the ones the selection rule zeroes).
pub fn wigner_eckart_max_error(n: usize) -> Result<f64> {
    let (basis, ops) = build_basis_and_operators(n, 1.0)?;
    let mut worst = 0.0f64;
    for a in 0..basis.dim() {
        for b in 0..basis.dim() {
            let closed = if b == a + 1 {
                ops.off[a]
            } else if a == b + 1 {
                ops.off[b]
            } else {
                0.0
            };
            let brute = staggered_element_brute_force(basis.two_s_sub, b, a);
            worst = worst.max((closed - brute).abs());
        }
    }
    Ok(worst)
}

/// Amplitudes over the basis `|S⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdState {
    pub amps: Vec<Complex64>,
}

impl EdState {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn overlap(&self, other: &EdState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `2⟨S_A^z − S_B^z⟩`.
    pub fn order_parameter(&self, ops: &EdOperator) -> f64 {
        let v: f64 = ops
            .off
            .iter()
            .enumerate()
            .map(|(s, o)| o * (self.amps[s].conj() * self.amps[s + 1]).re)
            .sum();
        2.0 * 2.0 * v
    }

    /// `⟨diag(E) − H O⟩`.
    pub fn energy(&self, ops: &EdOperator, h: f64) -> f64 {
        let d: f64 = ops.diag.iter().zip(&self.amps).map(|(e, a)| e * a.norm_sqr()).sum();
        let o: f64 = ops
            .off
            .iter()
            .enumerate()
            .map(|(s, o)| o * (self.amps[s].conj() * self.amps[s + 1]).re)
            .sum();
        d - 2.0 * h * o
    }
}

/// Lowest eigenpair of `diag(E) − H O`.
pub fn ed_ground_state(ops: &EdOperator, h: f64) -> Result<(EdState, f64)> {
    if !(h >= 0.0) {
        return domain(format!("ED ground state needs H >= 0, got {h}"));
    }
    let (e, v) = lowest_eigenpair(&ops.diag, &ops.hamiltonian_offdiag(h));
    Ok((
        EdState {
            amps: v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        },
        e,
    ))
}

/// Ground-state order parameter `2⟨S_A^z − S_B^z⟩` at field `H`.
pub fn ed_static_order_parameter(p: &ModelParams, h: f64) -> Result<f64> {
    p.require_ed_sector()?;
    let (_, ops) = build_basis_and_operators(p.n(), p.j())?;
    Ok(ed_ground_state(&ops, h)?.0.order_parameter(&ops))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdObservables {
    pub order_parameter: f64,
    pub defect_density: f64,
    pub energy: f64,
}

pub fn ed_observables(state: &EdState, ops: &EdOperator, h: f64) -> Result<EdObservables> {
    let (gs, _) = ed_ground_state(ops, h)?;
    Ok(EdObservables {
        order_parameter: state.order_parameter(ops),
        defect_density: (1.0 - gs.overlap(state).norm_sqr()).max(0.0),
        energy: state.energy(ops, h),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdOptions {
    /// Local error allowed per unit time.
    pub tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub max_steps: usize,
    pub schedule: Schedule,
}

impl Default for EdOptions {
    fn default() -> Self {
        EdOptions {
            tol: 1e-6,
            dt_init: 1e-3,
            dt_min: 1e-9,
            max_steps: 10_000_000,
            schedule: Schedule::Ramp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdRun {
    /// Columns `order_parameter`, `defect_density`, `energy`, `norm`.
    pub series: TimeSeries,
    pub final_state: EdState,
    pub max_norm_drift: f64,
    pub steps: usize,
}

struct Stepper<'a> {
    ops: &'a EdOperator,
    p: ModelParams,
    schedule: Schedule,
    solver: ThomasSolver,
    tmp: Vec<Complex64>,
}

impl Stepper<'_> {
    /// One implicit-midpoint step `(1 + i h M/2ħ) ψ' = (1 − i h M/2ħ) ψ`
    /// with `M = H_LM(t + h/2) − e_ref`. The scalar gauge `e_ref` only
    /// changes the global phase; taking it near `⟨H⟩` keeps the common phase
    /// (and its discretization error) small.
    fn step(&mut self, psi: &mut [Complex64], t: f64, h: f64, e_ref: f64) {
        let hm = self.schedule.field(&self.p, t + 0.5 * h);
        let m = self.ops.hamiltonian(hm, e_ref);
        let c = Complex64::new(0.0, 0.5 * h / self.p.hbar());
        self.tmp.resize(psi.len(), Complex64::new(0.0, 0.0));
        m.mul_vec(psi, &mut self.tmp);
        for (x, mx) in psi.iter_mut().zip(&self.tmp) {
            *x -= c * mx;
        }
        let mut a = m;
        for d in a.diag.iter_mut() {
            *d = 1.0 + c * *d;
        }
        for v in a.lower.iter_mut().chain(a.upper.iter_mut()) {
            *v *= c;
        }
        self.solver.solve(&a, psi);
    }
}

/// Distance between two unit vectors up to a global phase.
fn phase_free_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let ov: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let rot = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { Complex64::new(1.0, 0.0) };
    a.iter().zip(b).map(|(x, y)| (x - rot * y).norm_sqr()).sum::<f64>().sqrt()
}

/// Unitary evolution from the ground state at `H0` (time `t0 = H0/δ`),
/// sampled at `times` (ascending, all `>= t0`).
///
/// Steps are controlled by step doubling: the two-half-step result is kept
/// and the phase-free distance to the full step must stay below
/// `tol · h` (plus a rounding floor).
pub fn ed_evolve(p: &ModelParams, times: &[f64], opts: &EdOptions) -> Result<EdRun> {
    p.require_ed_sector()?;
    let t0 = p.t0();
    if times.iter().any(|&t| t < t0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Grid("ED output times must be ascending and >= t0".into()));
    }
    let (_, ops) = build_basis_and_operators(p.n(), p.j())?;
    let (gs, _) = ed_ground_state(&ops, p.h0())?;
    let mut psi = gs.amps;
    let mut stepper = Stepper {
        ops: &ops,
        p: *p,
        schedule: opts.schedule,
        solver: ThomasSolver::default(),
        tmp: Vec::new(),
    };
    let floor = 1e3 * f64::EPSILON;
    let mut cols: [Vec<f64>; 4] = Default::default();
    let mut t = t0;
    let mut h = opts.dt_init;
    let mut steps = 0usize;
    let mut drift = 0.0f64;
    let mut full = psi.clone();
    let mut half = psi.clone();
    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::StepBudget {
                    t,
                    max_steps: opts.max_steps,
                });
            }
            let hs = h.min(target - t);
            let e_ref = EdState { amps: psi.clone() }.energy(&ops, opts.schedule.field(p, t + 0.5 * hs));
            full.copy_from_slice(&psi);
            half.copy_from_slice(&psi);
            stepper.step(&mut full, t, hs, e_ref);
            stepper.step(&mut half, t, 0.5 * hs, e_ref);
            stepper.step(&mut half, t + 0.5 * hs, 0.5 * hs, e_ref);
            let err = phase_free_distance(&full, &half);
            steps += 1;
            let allowed = opts.tol * hs + floor;
            if err <= allowed {
                psi.copy_from_slice(&half);
                let clipped = hs < h;
                t = if clipped { target } else { t + hs };
                // Only grow from a step that was not clipped by the grid.
                if !clipped {
                    let fac = if err > 0.0 { 0.9 * (allowed / err).sqrt() } else { 2.0 };
                    h *= fac.clamp(0.3, 2.0);
                }
            } else {
                h = hs * (0.9 * (allowed / err).sqrt()).clamp(0.1, 0.9);
                if h < opts.dt_min {
                    return Err(Error::StepUnderflow { t, h });
                }
            }
        }
        let st = EdState { amps: psi.clone() };
        let hf = opts.schedule.field(p, t);
        let obs = ed_observables(&st, &ops, hf)?;
        let nrm = st.norm_sqr();
        drift = drift.max((nrm - 1.0).abs());
        cols[0].push(obs.order_parameter);
        cols[1].push(obs.defect_density);
        cols[2].push(obs.energy);
        cols[3].push(nrm);
    }
    let mut series = TimeSeries::new(times.to_vec());
    let [c0, c1, c2, c3] = cols;
    series.push("order_parameter", "1", c0)?;
    series.push("defect_density", "1", c1)?;
    series.push("energy", "J", c2)?;
    series.push("norm", "1", c3)?;
    Ok(EdRun {
        series,
        final_state: EdState { amps: psi },
        max_norm_drift: drift,
        steps,
    })
}
