//! Closed-form one-period solutions of the rotating-frame equations and
//! their weak-field limits.
//!
//! Every integral lives on one uniform grid: G̃ is accumulated interval by
//! interval (Simpson with midpoint and quarter-point samples), integrands are
//! combined per interval by Simpson, and the whole grid is refined by
//! halving until the result settles.

use num_complex::Complex64;
use serde::Serialize;

use crate::drive::{resonant_rate, DriveSchedule};
use crate::error::{Error, Result};
use crate::linalg::{expm2, ComplexMatrix2, I};
use crate::me::{damping_exponent, BVector, GeneratorConvention, MasterModel};
use crate::numerics::{grid, simpson_converged, QUAD_TOL, STEP_CAP};
use crate::params::ModelParams;
use crate::propagator::ORDERING_TOL;
use crate::state::DensityMatrix;

/// A converged scalar with its last refinement change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Converged<T> {
    pub value: T,
    pub delta: f64,
    pub steps: usize,
}

/// G̃ and dG̃/dt at grid nodes and interval midpoints.
struct ResonantGrid {
    h: f64,
    nodes: Vec<f64>,
    g_node: Vec<Complex64>,
    g_mid: Vec<Complex64>,
    rate_node: Vec<Complex64>,
    rate_mid: Vec<Complex64>,
}

impl ResonantGrid {
    fn new(p: &ModelParams, s: &DriveSchedule, n: usize) -> Self {
        let period = s.period();
        let nodes = grid(0.0, period, n);
        let h = period / n as f64;
        let rate = |t: f64| resonant_rate(p, s, t);
        let rate_node: Vec<Complex64> = nodes.iter().map(|&t| rate(t)).collect();
        let mut g_node = Vec::with_capacity(n + 1);
        let mut g_mid = Vec::with_capacity(n);
        let mut rate_mid = Vec::with_capacity(n);
        let mut g = Complex64::new(0.0, 0.0);
        g_node.push(g);
        for k in 0..n {
            let (a, b) = (nodes[k], nodes[k + 1]);
            let m = 0.5 * (a + b);
            let fm = rate(m);
            let fq = rate(0.5 * (a + m));
            g_mid.push(g + (rate_node[k] + 4.0 * fq + fm) * (h / 12.0));
            g += (rate_node[k] + 4.0 * fm + rate_node[k + 1]) * (h / 6.0);
            g_node.push(g);
            rate_mid.push(fm);
        }
        Self {
            h,
            nodes,
            g_node,
            g_mid,
            rate_node,
            rate_mid,
        }
    }
}

fn refine<T: Copy>(
    start: usize,
    tol: f64,
    what: &'static str,
    eval: impl Fn(usize) -> Result<T>,
    dist: impl Fn(&T, &T) -> (f64, f64),
) -> Result<Converged<T>> {
    let mut n = start.max(2);
    let mut prev = eval(n)?;
    loop {
        n *= 2;
        let cur = eval(n)?;
        let (delta, scale) = dist(&cur, &prev);
        if !delta.is_finite() {
            return Err(Error::NonFinite);
        }
        if delta <= tol * scale {
            return Ok(Converged {
                value: cur,
                delta,
                steps: n,
            });
        }
        if n >= STEP_CAP {
            return Err(Error::NonConvergence { what, delta });
        }
        prev = cur;
    }
}

/// Upper population after one period from the integrating-factor solution
/// of the rotating-frame population equation:
///
/// ρ_aa(T) = e^{−2(γT+|G̃(T)|²)} [ρ_aa(0) + ∫ 2 Im(dG̃/dt ρ_ab(0)) e^{2(γt+|G̃|²)} dt
///            + ½ ∫ e^{2γt} d(e^{2|G̃|²})/dt dt].
pub fn closed_rho_aa(
    p: &ModelParams,
    s: &DriveSchedule,
    rho0: DensityMatrix,
    steps: usize,
) -> Result<Converged<f64>> {
    let model = MasterModel::new(p, s, rho0)?;
    let p = model.params;
    let rho0 = model.rho0;
    let eval = |n: usize| -> Result<f64> {
        let g = ResonantGrid::new(&p, s, n);
        let period = s.period();
        let end = 2.0 * (p.gamma * period + g.g_node[n].norm_sqr());
        // integrands pre-multiplied by e^{−end} so nothing overflows
        let f = |t: f64, gt: Complex64, rate: Complex64| {
            let w = (2.0 * (p.gamma * t + gt.norm_sqr()) - end).exp();
            w * (2.0 * (rate * rho0.rho_ab).im + 2.0 * (gt.conj() * rate).re)
        };
        let mut acc = 0.0;
        for k in 0..n {
            let (a, b) = (g.nodes[k], g.nodes[k + 1]);
            acc += (f(a, g.g_node[k], g.rate_node[k])
                + 4.0 * f(0.5 * (a + b), g.g_mid[k], g.rate_mid[k])
                + f(b, g.g_node[k + 1], g.rate_node[k + 1]))
                * (g.h / 6.0);
        }
        Ok(rho0.rho_aa * (-end).exp() + acc)
    };
    refine(steps, QUAD_TOL, "closed-form population", eval, |a, b| {
        ((a - b).abs(), a.abs().max(1e-300))
    })
}

/// (ρ_ab(T), ρ_ba(T)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherencePair {
    pub rho_ab: Complex64,
    pub rho_ba: Complex64,
}

/// Coherence after one period from the SU(2) propagator solution
///
/// ρ_I(T) = e^{(−1)^I 2iω₀T} e^{−D(T)} [U(T,0)]_{IJ} {ρ_J(0) + ∫₀ᵀ [U(0,t′)]_{JK} e^{D(t′)} d_K(t′) dt′}
///
/// with U the time-ordered exponential of B⃗·σ⃗ and D the scalar damping
/// exponent of `convention`.
pub fn closed_rho_ab(
    p: &ModelParams,
    s: &DriveSchedule,
    rho0: DensityMatrix,
    convention: GeneratorConvention,
    steps: usize,
) -> Result<Converged<CoherencePair>> {
    let model = MasterModel::new(p, s, rho0)?;
    let p = model.params;
    let rho0 = model.rho0;
    let wp = model.omega_plus;
    let amp = 0.5 * p.dipole * p.e0 * (1.0 - 2.0 * rho0.rho_aa);
    let eval = |n: usize| -> Result<CoherencePair> {
        // Simpson over nodes needs an even count
        let n = n + n % 2;
        let g = ResonantGrid::new(&p, s, n);
        let period = s.period();
        let d_end = damping_exponent(p.gamma, period, g.g_node[n], convention);
        let source = |k: usize| -> [Complex64; 2] {
            let t = g.nodes[k];
            let d1 = I * amp * Complex64::from_polar(1.0, -(s.phase(t) - p.detuning() * t));
            let w = (damping_exponent(p.gamma, t, g.g_node[k], convention) - d_end).exp();
            [d1 * w, d1.conj() * w]
        };
        let mut fwd = ComplexMatrix2::identity();
        let mut inv = ComplexMatrix2::identity();
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        let add = |k: usize, inv: &ComplexMatrix2, acc: &mut [Complex64; 2]| {
            let wt = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let v = inv.apply(source(k));
            acc[0] += v[0] * wt;
            acc[1] += v[1] * wt;
        };
        add(0, &inv, &mut acc);
        for k in 0..n {
            let b = BVector::from_quadrature(wp, g.g_mid[k], g.rate_mid[k], convention).dot_sigma();
            fwd = expm2(&b.scale_re(g.h))? * fwd;
            inv = inv * expm2(&b.scale_re(-g.h))?;
            add(k + 1, &inv, &mut acc);
        }
        let start = (-d_end).exp();
        let inner = [
            rho0.rho_ab * start + acc[0] * (g.h / 3.0),
            rho0.rho_ba() * start + acc[1] * (g.h / 3.0),
        ];
        let out = fwd.apply(inner);
        let phase = Complex64::from_polar(1.0, -p.omega() * period);
        Ok(CoherencePair {
            rho_ab: out[0] * phase,
            rho_ba: out[1] * phase.conj(),
        })
    };
    refine(
        steps,
        ORDERING_TOL,
        "closed-form coherence",
        eval,
        |a, b| {
            let d = (a.rho_ab - b.rho_ab)
                .norm()
                .max((a.rho_ba - b.rho_ba).norm());
            (d, 1.0)
        },
    )
}

/// Weak-field solution at time `t` (first order in the field, no SU(2)
/// mixing):
///
/// ρ_aa(t) = {ρ_aa(0) + i∫(mℰ₀/2)[e^{i(Δt′−φ)}ρ_ba(0) − e^{−i(Δt′−φ)}ρ_ab(0)] e^{2γt′} dt′} e^{−2γt}
/// ρ_ab(t) = {ρ_ab(0) + i∫(mℰ₀/2)(1−2ρ_aa(0)) e^{i(Δt′−φ)} e^{(2iΩ₊+γ)t′} dt′} e^{−(2i(Ω₊+ω₀)+γ)t}
pub fn weakfield_closed(
    p: &ModelParams,
    s: &DriveSchedule,
    t: f64,
    rho0: DensityMatrix,
) -> Result<DensityMatrix> {
    let model = MasterModel::new(p, s, rho0)?;
    if !(0.0..=s.period()).contains(&t) {
        return Err(Error::OutOfRange {
            t,
            period: s.period(),
        });
    }
    let (f_aa, f_ab) = weak_integrands(&model, t);
    let f = |tp: f64| [f_aa(tp), f_ab(tp)];
    let scale = 0.5 * (p.dipole * p.e0).abs() * t;
    let (v, _) = simpson_converged(
        &f,
        0.0,
        t,
        64,
        QUAD_TOL,
        scale,
        STEP_CAP,
        "weak-field quadrature",
    )?;
    Ok(weak_assemble(&model, t, v[0], v[1]))
}

/// Weak-field solution on the uniform grid of `n` intervals over [0, T],
/// accumulated interval by interval.
pub fn weakfield_series(
    p: &ModelParams,
    s: &DriveSchedule,
    rho0: DensityMatrix,
    n: usize,
) -> Result<Vec<DensityMatrix>> {
    let model = MasterModel::new(p, s, rho0)?;
    let nodes = grid(0.0, s.period(), n);
    // integrands referenced to t = 0 (no shift), e^{2γt} stays finite for γT < 300
    let (f_aa, f_ab) = weak_integrands(&model, 0.0);
    let mut out = Vec::with_capacity(n + 1);
    let (mut i_aa, mut i_ab) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    out.push(weak_assemble(&model, 0.0, i_aa, i_ab));
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = 0.5 * (a + b);
        let h = (b - a) / 6.0;
        i_aa += (f_aa(a) + 4.0 * f_aa(m) + f_aa(b)) * h;
        i_ab += (f_ab(a) + 4.0 * f_ab(m) + f_ab(b)) * h;
        let shift_aa = (-2.0 * model.params.gamma * b).exp();
        let shift_ab = (-model.params.gamma * b).exp();
        out.push(weak_assemble(&model, b, i_aa * shift_aa, i_ab * shift_ab));
    }
    if out
        .iter()
        .any(|r| !r.rho_aa.is_finite() || !r.rho_ab.is_finite())
    {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

type Integrand<'a> = Box<dyn Fn(f64) -> Complex64 + 'a>;

/// Integrands with the decay exponent referenced to `t_ref`.
fn weak_integrands(model: &MasterModel, t_ref: f64) -> (Integrand<'_>, Integrand<'_>) {
    let p = model.params;
    let s = &model.schedule;
    let rho0 = model.rho0;
    let half = 0.5 * p.dipole * p.e0;
    let wp = model.omega_plus;
    let f_aa = move |tp: f64| {
        let e = Complex64::from_polar(1.0, p.detuning() * tp - s.phase(tp));
        I * half
            * (e * rho0.rho_ba() - e.conj() * rho0.rho_ab)
            * (2.0 * p.gamma * (tp - t_ref)).exp()
    };
    let f_ab = move |tp: f64| {
        let e = Complex64::from_polar(1.0, p.detuning() * tp - s.phase(tp));
        I * half
            * (1.0 - 2.0 * rho0.rho_aa)
            * e
            * Complex64::from_polar(1.0, 2.0 * wp * tp)
            * (p.gamma * (tp - t_ref)).exp()
    };
    (Box::new(f_aa), Box::new(f_ab))
}

/// Assembles ρ(t) from integrals already multiplied by e^{−2γt} (population)
/// and e^{−γt} (coherence).
fn weak_assemble(model: &MasterModel, t: f64, i_aa: Complex64, i_ab: Complex64) -> DensityMatrix {
    let p = model.params;
    let rho0 = model.rho0;
    let rho_aa = rho0.rho_aa * (-2.0 * p.gamma * t).exp() + i_aa.re;
    let rot = Complex64::from_polar(1.0, -2.0 * (model.omega_plus + p.omega0()) * t);
    let rho_ab = (rho0.rho_ab * (-p.gamma * t).exp() + i_ab) * rot;
    DensityMatrix::new(rho_aa, rho_ab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::me::{me_evolve, MeForm};
    use std::f64::consts::TAU;

    fn params(half_rabi: f64, gamma: f64, period: f64) -> ModelParams {
        ModelParams {
            e0: 2.0 * half_rabi,
            gamma,
            period,
            ..Default::default()
        }
        .with_detuning_times_period(TAU)
    }

    #[test]
    fn population_zero_field() {
        let p = params(0.0, 0.05, 50.0);
        let s = DriveSchedule::linear(50.0);
        let rho0 = DensityMatrix::new(0.7, Complex64::new(0.1, 0.3));
        let v = closed_rho_aa(&p, &s, rho0, 16).unwrap().value;
        assert!((v - 0.7 * (-5f64).exp()).abs() < 1e-15);
        let p = params(0.0, 0.0, 50.0);
        assert_eq!(closed_rho_aa(&p, &s, rho0, 16).unwrap().value, 0.7);
    }

    #[test]
    fn population_matches_scaled_integration() {
        let s = DriveSchedule::smooth_sine(400.0);
        for rho0 in [
            DensityMatrix::excited(),
            DensityMatrix::new(0.6, Complex64::new(0.2, -0.35)),
        ] {
            let p = params(0.005, 0.02, 400.0);
            let c = closed_rho_aa(&p, &s, rho0, 64).unwrap();
            let d = me_evolve(&p, &s, rho0, 20000, MeForm::Scaled).unwrap();
            assert!(
                (c.value - d.last().rho_aa).abs() < 1e-6,
                "{} vs {}",
                c.value,
                d.last().rho_aa
            );
        }
    }

    #[test]
    fn coherence_zero_field() {
        let p = params(0.0, 0.05, 30.0);
        let s = DriveSchedule::linear(30.0);
        let r = Complex64::new(0.2, -0.1);
        let wp = crate::params::omega_plus(&p).unwrap();
        for conv in [
            GeneratorConvention::Printed,
            GeneratorConvention::Consistent,
        ] {
            let c = closed_rho_ab(&p, &s, DensityMatrix::new(0.5, r), conv, 8)
                .unwrap()
                .value;
            let expect = r * Complex64::new(-1.5, -2.0 * (wp + 1.0) * 30.0).exp();
            assert!((c.rho_ab - expect).norm() < 1e-12);
            assert!((c.rho_ba - expect.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn coherence_vanishes_from_mixed_state() {
        let p = params(0.05, 0.02, 100.0);
        let s = DriveSchedule::linear(100.0);
        let c = closed_rho_ab(
            &p,
            &s,
            DensityMatrix::maximally_mixed(),
            GeneratorConvention::Printed,
            8,
        )
        .unwrap();
        assert_eq!(c.value.rho_ab, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn consistent_coherence_matches_scaled_integration() {
        let p = params(0.01, 0.02, 100.0);
        let s = DriveSchedule::linear(100.0);
        let rho0 = DensityMatrix::excited();
        let c = closed_rho_ab(&p, &s, rho0, GeneratorConvention::Consistent, 64)
            .unwrap()
            .value;
        let d = me_evolve(&p, &s, rho0, 20000, MeForm::Scaled).unwrap();
        let dev = (c.rho_ab - d.last().rho_ab).norm();
        assert!(dev < 1e-7, "deviation {dev}");
        assert!((c.rho_ba - c.rho_ab.conj()).norm() < 1e-12);
    }

    #[test]
    fn weak_field_zero_field_example() {
        let p = params(0.0, 0.05, 40.0);
        let s = DriveSchedule::linear(40.0);
        let rho0 = DensityMatrix::new(0.8, Complex64::new(0.1, 0.2));
        let wp = crate::params::omega_plus(&p).unwrap();
        let t = 13.0;
        let r = weakfield_closed(&p, &s, t, rho0).unwrap();
        assert!((r.rho_aa - 0.8 * (-0.1 * t).exp()).abs() < 1e-15);
        let expect = rho0.rho_ab * Complex64::new(-0.05 * t, -2.0 * (wp + 1.0) * t).exp();
        assert!((r.rho_ab - expect).norm() < 1e-15);
    }

    #[test]
    fn weak_field_mixed_state_has_no_coherence() {
        let p = params(0.01, 0.05, 40.0);
        let s = DriveSchedule::smooth_sine(40.0);
        let r = weakfield_closed(&p, &s, 40.0, DensityMatrix::maximally_mixed()).unwrap();
        assert_eq!(r.rho_ab, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn weak_field_series_matches_pointwise_closed_form() {
        let p = params(0.003, 0.02, 200.0);
        let s = DriveSchedule::smooth_sine(200.0);
        let rho0 = DensityMatrix::new(0.7, Complex64::new(0.2, 0.3));
        let series = weakfield_series(&p, &s, rho0, 4000).unwrap();
        for k in (0..=4000).step_by(800) {
            let t = 200.0 * k as f64 / 4000.0;
            let r = weakfield_closed(&p, &s, t, rho0).unwrap();
            assert!((r.rho_aa - series[k].rho_aa).abs() < 1e-10);
            assert!((r.rho_ab - series[k].rho_ab).norm() < 1e-10);
        }
    }

    #[test]
    fn weak_field_is_first_order_in_field() {
        // population deviation of the reduced form from the weak-field solution
        // is second order in the field
        let dev = |half: f64| {
            let p = params(half, 0.02, 400.0);
            let s = DriveSchedule::linear(400.0);
            let tr = me_evolve(&p, &s, DensityMatrix::excited(), 8000, MeForm::Reduced).unwrap();
            let w = weakfield_series(&p, &s, DensityMatrix::excited(), 8000).unwrap();
            tr.states
                .iter()
                .zip(&w)
                .map(|(a, b)| (a.rho_aa - b.rho_aa).abs())
                .fold(0.0, f64::max)
        };
        let ratio = dev(6.25e-4) / dev(3.125e-4);
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
    }
}
