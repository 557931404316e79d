//! Hermite polynomials and normalized Hermite functions.

const PI_QUARTER_INV: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
const RESCALE_AT: f64 = 1e150;

/// Physicists' Hermite polynomial `H_n(x)` by the plain recurrence.
///
/// Overflows for large `n` and `|x|`; use [`hermite_functions`] there.
pub fn hermite_poly(n: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Fills `out[k] = ψ_k(x)` for `k < out.len()`, where
/// `ψ_k(x) = (2^k k! √π)^(-1/2) H_k(x) e^(-x²/2)` are the orthonormal
/// Hermite functions on the full line.
///
/// The Gaussian factor is applied last with a running log-scale so the
/// recurrence neither overflows nor underflows for large `k` and `|x|`.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    let len = out.len();
    if len == 0 {
        return;
    }
    let gauss = -0.5 * x * x;
    // out[k] temporarily holds the unscaled value; scale[k] its log offset.
    let mut log_scale = 0.0f64;
    let mut scales = Vec::with_capacity(len);
    let mut prev = 0.0f64;
    let mut cur = PI_QUARTER_INV;
    out[0] = cur;
    scales.push(log_scale);
    for k in 0..len - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            let s = cur.abs();
            cur /= s;
            prev /= s;
            log_scale += s.ln();
        }
        out[k + 1] = cur;
        scales.push(log_scale);
    }
    for (v, s) in out.iter_mut().zip(scales) {
        *v *= (s + gauss).exp();
    }
}

/// Single normalized Hermite function `ψ_n(x)`.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let mut buf = vec![0.0; n + 1];
    hermite_functions(x, &mut buf);
    buf[n]
}

/// `ln(n!)` by summation; exact enough for the moderate `n` used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_polynomials() {
        let x = 0.37;
        assert_eq!(hermite_poly(0, x), 1.0);
        assert!((hermite_poly(1, x) - 2.0 * x).abs() < 1e-15);
        assert!((hermite_poly(2, x) - (4.0 * x * x - 2.0)).abs() < 1e-14);
        assert!((hermite_poly(3, x) - (8.0 * x.powi(3) - 12.0 * x)).abs() < 1e-14);
        let h5 = 32.0 * x.powi(5) - 160.0 * x.powi(3) + 120.0 * x;
        assert!((hermite_poly(5, x) - h5).abs() < 1e-12);
    }

    #[test]
    fn functions_match_polynomial_form() {
        let mut buf = [0.0; 12];
        for &x in &[-2.5, -0.3, 0.0, 0.8, 3.1] {
            hermite_functions(x, &mut buf);
            for (n, &v) in buf.iter().enumerate() {
                let norm = (-(n as f64) * 2f64.ln() - ln_factorial(n)).exp().sqrt() * PI_QUARTER_INV;
                let want = norm * hermite_poly(n, x) * (-0.5 * x * x).exp();
                assert!((v - want).abs() < 1e-13, "n={n} x={x}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn odd_functions_vanish_at_origin() {
        let mut buf = [0.0; 40];
        hermite_functions(0.0, &mut buf);
        for v in buf.iter().skip(1).step_by(2) {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn large_order_stays_finite() {
        let mut buf = vec![0.0; 4002];
        for &x in &[0.5, 30.0, 89.0, 150.0] {
            hermite_functions(x, &mut buf);
            assert!(buf.iter().all(|v| v.is_finite()));
            // Hermite functions are bounded by about π^(-1/4).
            assert!(buf.iter().all(|v| v.abs() < 1.0));
        }
        // Deep in the classically allowed region the top function is O(n^(-1/4)).
        hermite_functions(60.0, &mut buf);
        assert!(buf[4001].abs() > 1e-4);
    }
}
