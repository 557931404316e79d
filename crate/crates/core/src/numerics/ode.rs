//! Dormand–Prince 5(4) integrator with continuous (dense) output.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options {
            rtol: 1e-10,
            atol: 1e-14,
            h_init: None,
            h_min: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const D: usize> {
    pub t: f64,
    pub h: f64,
    pub rcont: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    pub fn y_start(&self) -> [f64; D] {
        self.rcont[0]
    }

    pub fn y_end(&self) -> [f64; D] {
        let mut y = self.rcont[0];
        for (v, r) in y.iter_mut().zip(&self.rcont[1]) {
            *v += r;
        }
        y
    }

    /// Fourth-order continuous extension at `t` in `[self.t, self.t + h]`.
    pub fn eval(&self, t: f64) -> [f64; D] {
        let th = (t - self.t) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut y = [0.0; D];
        for i in 0..D {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

/// The accepted steps of one integration; evaluable anywhere in its span.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution<const D: usize> {
    pub steps: Vec<DenseStep<D>>,
    pub rejected: usize,
    pub evaluations: usize,
}

impl<const D: usize> DenseSolution<D> {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(f64::NAN, |s| s.t)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.t + s.h)
    }

    /// Index of the step covering `t` (clamped to the span).
    pub fn step_index(&self, t: f64) -> usize {
        let i = self.steps.partition_point(|s| s.t <= t);
        i.saturating_sub(1).min(self.steps.len() - 1)
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let s = &self.steps[self.step_index(t)];
        if t >= s.t + s.h {
            return s.y_end();
        }
        s.eval(t)
    }

    /// Accepted step end points, starting with the initial point.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, [f64; D])> + '_ {
        let first = self.steps.first().map(|s| (s.t, s.y_start()));
        first.into_iter().chain(self.steps.iter().map(|s| (s.t + s.h, s.y_end())))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (`t_end > t0`).
pub fn dopri5<const D: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    opts: &Dopri5Options,
) -> Result<DenseSolution<D>>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let span = t_end - t0;
    if !(span > 0.0) {
        return Err(Error::Grid(format!("integration span [{t0}, {t_end}] is empty")));
    }
    let sk = |a: &[f64; D], b: &[f64; D], i: usize| opts.atol + opts.rtol * a[i].abs().max(b[i].abs());
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut evals = 1;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            // Standard starting-step heuristic.
            let mut d0 = 0.0;
            let mut d1 = 0.0;
            for i in 0..D {
                let s = opts.atol + opts.rtol * y[i].abs();
                d0 += (y[i] / s).powi(2);
                d1 += (k1[i] / s).powi(2);
            }
            let (d0, d1) = ((d0 / D as f64).sqrt(), (d1 / D as f64).sqrt());
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let y1 = axpy(&y, h0, &[(1.0, &k1)]);
            let f1 = f(t + h0, &y1);
            evals += 1;
            let mut d2 = 0.0;
            for i in 0..D {
                let s = opts.atol + opts.rtol * y[i].abs();
                d2 += ((f1[i] - k1[i]) / s).powi(2);
            }
            let d2 = (d2 / D as f64).sqrt() / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
    }
    .min(span);

    let mut steps = Vec::new();
    let mut rejected = 0;
    let mut err_old = 1e-4f64;
    let mut last_rejected = false;
    while t < t_end {
        if steps.len() + rejected >= opts.max_steps {
            return Err(Error::StepBudget {
                t,
                max_steps: opts.max_steps,
            });
        }
        if h < opts.h_min * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y1);
        evals += 6;

        let mut err = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / sk(&y, &y1, i)).powi(2);
        }
        let err = (err / D as f64).sqrt();

        if err <= 1.0 {
            let mut rc = [[0.0; D]; 5];
            for i in 0..D {
                let dy = y1[i] - y[i];
                let bspl = h * k1[i] - dy;
                rc[0][i] = y[i];
                rc[1][i] = dy;
                rc[2][i] = bspl;
                rc[3][i] = dy - h * k7[i] - bspl;
                rc[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            steps.push(DenseStep { t, h, rcont: rc });
            // PI controller (Hairer's beta = 0.04).
            let e = err.max(1e-10);
            let mut fac = 0.9 * e.powf(-0.17) * err_old.powf(0.04);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = e;
            last_rejected = false;
            t = if last { t_end } else { t + h };
            y = y1;
            k1 = k7;
            h *= fac;
        } else {
            rejected += 1;
            last_rejected = true;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.1
            };
            h *= fac;
        }
    }
    Ok(DenseSolution {
        steps,
        rejected,
        evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_end_point_and_dense_output() {
        let w = 3.0;
        let opts = Dopri5Options {
            rtol: 1e-11,
            atol: 1e-13,
            ..Default::default()
        };
        let sol = dopri5(|_, y: &[f64; 2]| [y[1], -w * w * y[0]], 0.0, [1.0, 0.0], 10.0, &opts).unwrap();
        assert_eq!(sol.t_end(), 10.0);
        let yend = sol.eval(10.0);
        assert!((yend[0] - (w * 10.0).cos()).abs() < 1e-8);
        // Dense output between nodes is fourth order and close to the
        // node accuracy.
        let mut worst = 0.0f64;
        for i in 0..2000 {
            let t = 10.0 * i as f64 / 2000.0 + 1e-3;
            let y = sol.eval(t);
            worst = worst.max((y[0] - (w * t).cos()).abs());
            worst = worst.max((y[1] + w * (w * t).sin()).abs());
        }
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn dense_output_matches_nodes() {
        let sol = dopri5(|t, y: &[f64; 1]| [t * y[0]], 0.0, [1.0], 2.0, &Dopri5Options::default()).unwrap();
        for s in &sol.steps {
            let a = s.eval(s.t + s.h);
            let b = s.y_end();
            assert!((a[0] - b[0]).abs() < 1e-12 * b[0].abs());
            assert_eq!(s.eval(s.t)[0], s.y_start()[0]);
        }
        assert!((sol.eval(2.0)[0] - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn step_budget_is_reported() {
        let opts = Dopri5Options {
            max_steps: 3,
            ..Default::default()
        };
        let r = dopri5(|_, y: &[f64; 2]| [y[1], -1e4 * y[0]], 0.0, [1.0, 0.0], 100.0, &opts);
        assert!(matches!(r, Err(Error::StepBudget { .. })));
    }
}
