//! Local-maximum detection and refinement on sampled traces.

/// Median of a slice (NaNs sort last).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Topographic prominence of the sample at `i`.
pub fn prominence(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    let mut left_min = h;
    for j in (0..i).rev() {
        if y[j] > h {
            break;
        }
        left_min = left_min.min(y[j]);
    }
    let mut right_min = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Indices of strict interior local maxima whose prominence is at least
/// `threshold`. Plateaus report their first sample.
pub fn local_maxima(y: &[f64], threshold: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] && prominence(y, i) >= threshold {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Maximizes a unimodal `f` on `[a, b]`: golden-section search down to a
/// bracket of width `max(xtol, 1e-4 (b - a))`, then the vertex of the
/// parabola through the bracket ends and midpoint. Returns `(t, f(t))`.
///
/// The final parabola matters: near a smooth maximum `f` is flat to
/// rounding error over a width of order `√ε`, which a pure comparison
/// search cannot resolve.
pub fn refine_maximum<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let stop = xtol.max(1e-4 * (b - a).abs());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > stop {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let (x0, x1, x2) = (a, 0.5 * (a + b), b);
    let (f0, f1, f2) = (f(x0), f(x1), f(x2));
    let den = f0 - 2.0 * f1 + f2;
    if den < 0.0 {
        let off = 0.25 * (x2 - x0) * (f0 - f2) / den;
        if off.abs() <= 0.5 * (x2 - x0) {
            let t = x1 + off;
            return (t, f(t));
        }
    }
    [(x0, f0), (x1, f1), (x2, f2)]
        .into_iter()
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .expect("non-empty")
}

/// Finds a root of `f` in `[a, b]` given a sign change, by bisection.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn finds_prominent_peaks_only() {
        let t: Vec<f64> = (0..2001).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&x| (x * 3.0).sin() + 0.01 * (x * 97.0).sin() + 1.5)
            .collect();
        let idx = local_maxima(&y, 0.5);
        // sin(3x) peaks at x = π/6 + 2kπ/3 within [0, 20].
        assert_eq!(idx.len(), 10);
        for (k, &i) in idx.iter().enumerate() {
            let want = std::f64::consts::PI / 6.0 + 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            assert!((t[i] - want).abs() < 0.05);
        }
    }

    #[test]
    fn refine_and_bisect() {
        let (t, v) = refine_maximum(|x| -(x - 0.123456789).powi(2) + 2.0, 0.0, 1.0, 1e-9);
        assert!((t - 0.123456789).abs() < 1e-9);
        assert!((v - 2.0).abs() < 1e-15);
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }
}
