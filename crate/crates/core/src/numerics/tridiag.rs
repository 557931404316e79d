//! Tridiagonal linear solves and symmetric tridiagonal eigenpairs.

use num_complex::Complex64;

/// A complex tridiagonal matrix stored by diagonals.
///
/// `lower[i]` sits at `(i+1, i)` and `upper[i]` at `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Tridiag {
            lower: vec![z; n.saturating_sub(1)],
            diag: vec![z; n],
            upper: vec![z; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = A x`.
    pub fn mul_vec(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            if i > 0 {
                v += self.lower[i - 1] * x[i - 1];
            }
            out[i] = v;
        }
    }
}

/// Reusable workspace for the Thomas algorithm.
#[derive(Debug, Clone, Default)]
pub struct ThomasSolver {
    c: Vec<Complex64>,
}

impl ThomasSolver {
    /// Solves `A x = b` in place (`b` becomes `x`). No pivoting; the
    /// matrices met here (shifted Hermitian forms) have nonsingular leading
    /// minors.
    pub fn solve(&mut self, a: &Tridiag, b: &mut [Complex64]) {
        let n = a.len();
        if n == 0 {
            return;
        }
        self.c.resize(n, Complex64::new(0.0, 0.0));
        let mut beta = a.diag[0];
        b[0] /= beta;
        for i in 1..n {
            self.c[i] = a.upper[i - 1] / beta;
            beta = a.diag[i] - a.lower[i - 1] * self.c[i];
            b[i] = (b[i] - a.lower[i - 1] * b[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            let next = b[i + 1];
            b[i] -= self.c[i + 1] * next;
        }
    }
}

/// Number of eigenvalues of the real symmetric tridiagonal matrix
/// `(diag, off)` strictly below `x` (Sturm sequence count).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let o2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { o2 / q };
        if q == 0.0 {
            q = f64::EPSILON * (diag[i].abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin bounds of a symmetric tridiagonal matrix.
fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
pub fn eigenvalue_bisect(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(diag, off);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unit eigenvector for an eigenvalue estimate `lambda` by inverse iteration.
pub fn eigenvector_inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().chain(off).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let shift = lambda + 1e-13 * scale;
    let mut a = Tridiag::zeros(n);
    for (d, &v) in a.diag.iter_mut().zip(diag) {
        *d = Complex64::new(v - shift, 0.0);
    }
    for ((lo, up), &v) in a.lower.iter_mut().zip(a.upper.iter_mut()).zip(off) {
        *lo = Complex64::new(v, 0.0);
        *up = Complex64::new(v, 0.0);
    }
    let mut solver = ThomasSolver::default();
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0, 0.0))
        .collect();
    for _ in 0..6 {
        solver.solve(&a, &mut v);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    v.into_iter().map(|z| z.re).collect()
}

/// Lowest eigenpair of a real symmetric tridiagonal matrix. The eigenvector
/// sign is fixed so that its component sum is non-negative.
pub fn lowest_eigenpair(diag: &[f64], off: &[f64]) -> (f64, Vec<f64>) {
    let lambda = eigenvalue_bisect(diag, off, 0);
    let mut v = eigenvector_inverse_iteration(diag, off, lambda);
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda, v)
}
