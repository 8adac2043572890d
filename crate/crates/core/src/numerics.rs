//! Fixed-step RK4 and composite quadrature shared by both tracks.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default cap on quadrature intervals (2²²).
pub const STEP_CAP: usize = 1 << 22;
/// Default relative tolerance for step-halving quadrature.
pub const QUAD_TOL: f64 = 1e-10;

/// One classical RK4 step for a complex state of fixed length.
#[inline]
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[Complex64; N], h: f64) -> [Complex64; N]
where
    F: Fn(f64, &[Complex64; N]) -> [Complex64; N],
{
    let axpy = |y: &[Complex64; N], k: &[Complex64; N], a: f64| -> [Complex64; N] {
        std::array::from_fn(|i| y[i] + k[i] * a)
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &axpy(y, &k2, 0.5 * h));
    let k4 = f(t + h, &axpy(y, &k3, h));
    std::array::from_fn(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
}

/// Composite Simpson over [a, b] with `n` (even) intervals.
pub fn simpson<const N: usize, F>(f: &F, a: f64, b: f64, n: usize) -> [Complex64; N]
where
    F: Fn(f64) -> [Complex64; N],
{
    let n = n.max(2) + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = [Complex64::new(0.0, 0.0); N];
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        // Last node pinned to b to avoid rounding past the interval.
        let t = if k == n { b } else { a + k as f64 * h };
        let v = f(t);
        for i in 0..N {
            acc[i] += v[i] * w;
        }
    }
    acc.map(|z| z * (h / 3.0))
}

/// Simpson with interval doubling until successive results differ by less
/// than `tol * max(scale, |result|)` (max over components).
///
/// Returns the converged values and the last delta.
pub fn simpson_converged<const N: usize, F>(
    f: &F,
    a: f64,
    b: f64,
    start: usize,
    tol: f64,
    scale: f64,
    cap: usize,
    what: &'static str,
) -> Result<([Complex64; N], f64)>
where
    F: Fn(f64) -> [Complex64; N],
{
    if a == b {
        return Ok(([Complex64::new(0.0, 0.0); N], 0.0));
    }
    let mut n = start.max(2);
    let mut prev = simpson(f, a, b, n);
    loop {
        n *= 2;
        let cur = simpson(f, a, b, n);
        let delta = max_diff(&cur, &prev);
        let mag = cur.iter().map(|z| z.norm()).fold(scale.abs(), f64::max);
        if delta <= tol * mag {
            return Ok((cur, delta));
        }
        if n >= cap {
            return Err(Error::NonConvergence { what, delta });
        }
        prev = cur;
    }
}

pub fn max_diff<const N: usize>(a: &[Complex64; N], b: &[Complex64; N]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Uniform grid t_k = t0 + k (t1 − t0)/n, with the last node exactly t1.
pub fn grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    let h = (t1 - t0) / n as f64;
    (0..=n)
        .map(|k| if k == n { t1 } else { t0 + k as f64 * h })
        .collect()
}

/// Ordinary least squares line through `(x, y)`; `None` when x is constant.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * x.iter().map(|v| v * v).sum::<f64>() {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
