//! Monotone-safe piecewise-cubic Hermite interpolation (Fritsch-Carlson
//! slope limiting). Used for tabulated log-densities and for inverting
//! numerical CDF tables; on monotone data the interpolant is monotone.

/// Fritsch-Carlson slopes for the data `(xs, ys)`. `xs` strictly increasing,
/// both slices the same length >= 2.
pub(crate) fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    debug_assert!(n >= 2 && ys.len() == n);
    if n == 2 {
        let d = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return vec![d, d];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m[0] = endpoint_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = endpoint_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

// Three-point one-sided estimate, limited as in pchip.
fn endpoint_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        m = 0.0;
    } else if d0 * d1 < 0.0 && m.abs() > 3.0 * d0.abs() {
        m = 3.0 * d0;
    }
    m
}

/// Locate the cell index i with xs[i] <= x < xs[i+1] (clamped to the ends).
#[inline]
pub(crate) fn locate(xs: &[f64], x: f64) -> usize {
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(xs.len() - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(xs.len() - 2),
    }
}

/// Evaluate the cubic Hermite piece on cell `i` at `x`.
#[inline]
pub(crate) fn hermite_eval(xs: &[f64], ys: &[f64], slopes: &[f64], i: usize, x: f64) -> f64 {
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    ys[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
        + h * slopes[i] * (t3 - 2.0 * t2 + t)
        + ys[i + 1] * (-2.0 * t3 + 3.0 * t2)
        + h * slopes[i + 1] * (t3 - t2)
}

/// Full interpolant evaluation (no extrapolation guard; callers check domain).
pub(crate) fn pchip_eval(xs: &[f64], ys: &[f64], slopes: &[f64], x: f64) -> f64 {
    hermite_eval(xs, ys, slopes, locate(xs, x), x)
}
