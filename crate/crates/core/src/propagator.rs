//! Time-ordered exponential T exp(∫ B⃗(t)·σ⃗ dt) as an ordered product of
//! exact 2×2 exponentials of fourth-order Magnus steps.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{expm2, ComplexMatrix2};
use crate::numerics::STEP_CAP;

/// Convergence threshold on the max-norm change between halvings.
pub const ORDERING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Propagator {
    #[serde(skip)]
    pub matrix: ComplexMatrix2,
    /// Max-norm change at the last halving.
    pub delta: f64,
    pub steps: usize,
}

/// Product of per-step exponentials exp(Ω_k), later times on the left, with
/// Ω = h/2 (B₁ + B₂) + (√3/12) h² [B₂, B₁] from the two Gauss points of
/// each step.
///
/// With t1 < t0 the product runs backwards and is the exact inverse of the
/// forward product on the same nodes.
pub fn ordered_product<F>(b: &F, t0: f64, t1: f64, n: usize) -> Result<ComplexMatrix2>
where
    F: Fn(f64) -> [Complex64; 3],
{
    let h = (t1 - t0) / n as f64;
    let c = 3f64.sqrt() / 6.0;
    let mut u = ComplexMatrix2::identity();
    for k in 0..n {
        let t = t0 + k as f64 * h;
        let b1 = ComplexMatrix2::from_pauli(b(t + (0.5 - c) * h));
        let b2 = ComplexMatrix2::from_pauli(b(t + (0.5 + c) * h));
        let omega = (b1 + b2).scale_re(0.5 * h) + b2.commutator(&b1).scale_re(c * 0.5 * h * h);
        u = expm2(&omega)? * u;
    }
    Ok(u)
}

/// Ordered product refined by step halving until successive results differ
/// by less than 1e-9 in max-norm.
pub fn time_ordered_su2<F>(b: &F, t0: f64, t1: f64, steps: usize) -> Result<Propagator>
where
    F: Fn(f64) -> [Complex64; 3],
{
    time_ordered_su2_with(b, t0, t1, steps, ORDERING_TOL, STEP_CAP)
}

pub fn time_ordered_su2_with<F>(
    b: &F,
    t0: f64,
    t1: f64,
    steps: usize,
    tol: f64,
    cap: usize,
) -> Result<Propagator>
where
    F: Fn(f64) -> [Complex64; 3],
{
    if steps < 2 {
        return Err(Error::InsufficientSteps {
            given: steps,
            required: 2,
        });
    }
    let mut n = steps;
    let mut prev = ordered_product(b, t0, t1, n)?;
    loop {
        n *= 2;
        let cur = ordered_product(b, t0, t1, n)?;
        let delta = (cur - prev).max_norm();
        if delta < tol {
            return Ok(Propagator {
                matrix: cur,
                delta,
                steps: n,
            });
        }
        if n >= cap {
            return Err(Error::NonConvergence {
                what: "time-ordered product",
                delta,
            });
        }
        prev = cur;
    }
}
