//! Non-hermitian (Bethe–Lamb) track.
//!
//! Amplitudes obey i dC/dt = H(t) C with
//!
//! ```text
//! H(t) = [ -iγ_a/2          V* e^{iΔt} ]
//!        [ V e^{-iΔt}       -iγ_b/2    ],   V(t) = V₀ e^{iφ(t)}.
//! ```
//!
//! In the frame C_a = e^{iΔt/2} a, C_b = e^{-iΔt/2} b the detuning becomes
//! static and only the azimuth φ of the coupling moves:
//!
//! ```text
//! H_φ = [ Δ/2 - iγ_a/2     V₀ e^{-iφ}     ]
//!       [ V₀ e^{iφ}        -Δ/2 - iγ_b/2  ]
//! ```
//!
//! Its eigenvalues do not depend on φ. Following one of them adiabatically
//! around φ: 0 → 2π gives a dynamical factor ∝ T and a complex Berry phase
//! β₋ = π(1 − cos θ₀), cos θ₀ = (Δ − iδ)/√(4V₀² + (Δ − iδ)²).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::drive::DriveSchedule;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix2, I};
use crate::numerics::{grid, rk4_step};
use crate::params::NhParams;
use crate::state::AmplitudePair;

/// Time derivative dC/dt = −i H(t) C.
pub fn nh_rhs(p: &NhParams, s: &DriveSchedule, t: f64, c: &AmplitudePair) -> AmplitudePair {
    // V e^{-iΔt}
    let w = Complex64::from_polar(p.v0, s.phase(t) - p.detuning * t);
    AmplitudePair::new(
        -0.5 * p.gamma_a * c.c_a - I * w.conj() * c.c_b,
        -I * w * c.c_a - 0.5 * p.gamma_b * c.c_b,
    )
}

/// Fewest steps `nh_evolve` accepts for period `period`.
pub fn required_steps(p: &NhParams, period: f64) -> usize {
    let rate = p
        .detuning
        .abs()
        .max(p.v0.abs())
        .max(p.gamma_a)
        .max(p.gamma_b);
    ((10.0 * period * rate / TAU).ceil() as usize).max(1000)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NhTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudePair>,
}

impl NhTrajectory {
    pub fn last(&self) -> &AmplitudePair {
        self.states.last().expect("trajectory is never empty")
    }

    /// Largest step-to-step increase of |C_a|² + |C_b|² (≤ 0 when contracting).
    pub fn max_norm_increase(&self) -> f64 {
        self.states
            .windows(2)
            .map(|w| w[1].norm_sqr() - w[0].norm_sqr())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Fixed-step RK4 over [0, T] with `steps` intervals.
pub fn nh_evolve(
    p: &NhParams,
    s: &DriveSchedule,
    c0: AmplitudePair,
    steps: usize,
) -> Result<NhTrajectory> {
    let p = p.validate()?;
    let required = required_steps(&p, s.period());
    if steps < required {
        return Err(Error::InsufficientSteps {
            given: steps,
            required,
        });
    }
    let times = grid(0.0, s.period(), steps);
    let h = s.period() / steps as f64;
    let f =
        |t: f64, y: &[Complex64; 2]| nh_rhs(&p, s, t, &AmplitudePair::from_array(*y)).to_array();
    let mut states = Vec::with_capacity(steps + 1);
    let mut y = c0.to_array();
    states.push(c0);
    for &t in &times[..steps] {
        y = rk4_step(&f, t, &y, h);
        states.push(AmplitudePair::from_array(y));
    }
    Ok(NhTrajectory { times, states })
}

/// Adiabatic branch of the rotating-frame Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Lower real part; carries the β₋ phase.
    Minus,
    Plus,
}

/// H_φ from the module docs.
pub fn rotating_frame_hamiltonian(p: &NhParams, phi: f64) -> ComplexMatrix2 {
    let v = Complex64::from_polar(p.v0, phi);
    ComplexMatrix2::new(
        Complex64::new(0.5 * p.detuning, -0.5 * p.gamma_a),
        v.conj(),
        v,
        Complex64::new(-0.5 * p.detuning, -0.5 * p.gamma_b),
    )
}

/// Instantaneous eigenvalue of one branch.
pub fn branch_eigenvalue(p: &NhParams, branch: Branch) -> Complex64 {
    let [lo, hi] = rotating_frame_hamiltonian(p, 0.0).eigenvalues();
    match branch {
        Branch::Minus => lo,
        Branch::Plus => hi,
    }
}

/// Normalized eigenvector of H_φ at φ = 0 for `branch`.
///
/// At t = 0 the rotating frame and the lab frame coincide, so this is also a
/// valid initial amplitude pair.
pub fn adiabatic_state(p: &NhParams, branch: Branch) -> AmplitudePair {
    let h = rotating_frame_hamiltonian(p, 0.0);
    let e = branch_eigenvalue(p, branch);
    let v = if p.v0 != 0.0 {
        [Complex64::new(p.v0, 0.0), e - h.get(0, 0)]
    } else if (e - h.get(0, 0)).norm() <= (e - h.get(1, 1)).norm() {
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
    } else {
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
    };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    AmplitudePair::new(v[0] / n, v[1] / n)
}

/// Complex Berry phase of the adiabatic cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GwPhase {
    pub cos_theta0: Complex64,
    pub theta0: Complex64,
    pub beta_minus: Complex64,
    /// e^(−2 Im β₋)
    pub geometric_decay: f64,
}

/// β₋ on the principal square-root branch (Re √ ≥ 0).
pub fn gw_phase(p: &NhParams) -> Result<GwPhase> {
    let (z, r) = mixing(p)?;
    Ok(phase_from(z / r))
}

/// β₋ with the square-root sign chosen to stay continuous with `prev`,
/// for walking along a parameter sweep.
pub fn gw_phase_continued(p: &NhParams, prev: &GwPhase) -> Result<GwPhase> {
    let (z, r) = mixing(p)?;
    let c = z / r;
    let c = if (c - prev.cos_theta0).norm() <= (-c - prev.cos_theta0).norm() {
        c
    } else {
        -c
    };
    Ok(phase_from(c))
}

fn mixing(p: &NhParams) -> Result<(Complex64, Complex64)> {
    let z = Complex64::new(p.detuning, -p.delta());
    if p.v0 == 0.0 && z.norm() == 0.0 {
        return Err(Error::Undefined(
            "mixing angle: V0 = 0 and Delta = delta = 0".into(),
        ));
    }
    let r = (z * z + 4.0 * p.v0 * p.v0).sqrt();
    if r.norm() == 0.0 {
        return Err(Error::Undefined(
            "mixing angle: exceptional point (4V0^2 = -(Delta - i delta)^2)".into(),
        ));
    }
    Ok((z, r))
}

fn phase_from(cos_theta0: Complex64) -> GwPhase {
    let beta_minus = (Complex64::new(1.0, 0.0) - cos_theta0) * PI;
    GwPhase {
        cos_theta0,
        theta0: cos_theta0.acos(),
        beta_minus,
        geometric_decay: (-2.0 * beta_minus.im).exp(),
    }
}

/// Log-magnitude decomposition of the adiabatic survival |C(T)|²/|C(0)|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalComponents {
    /// 2 Im ∫₀ᵀ E₋ dt, proportional to T.
    pub dynamical: f64,
    /// −2 Im β₋, independent of T.
    pub geometric: f64,
    /// 2 Im E₋: dynamical log-magnitude per unit time.
    pub rate: f64,
}

/// Splits the β₋-branch survival into its T-proportional and T-independent
/// parts. The dynamical part integrates the instantaneous eigenvalue of
/// H_φ(t) around the cycle.
pub fn gw_survival_components(p: &NhParams, period: f64) -> Result<SurvivalComponents> {
    let geometric = -2.0 * gw_phase(p)?.beta_minus.im;
    let scale = p.detuning.abs() + p.v0.abs() + p.gamma_a + p.gamma_b;
    let n = 256;
    let times = grid(0.0, period, n);
    let mut prev: Option<Complex64> = None;
    let mut integral = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let [lo, hi] = rotating_frame_hamiltonian(p, TAU * t / period).eigenvalues();
        if (hi - lo).norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Undefined(format!(
                "eigenvalue branches cross at t = {t}"
            )));
        }
        // follow the branch continuously rather than by ordering
        let e = match prev {
            None => lo,
            Some(pe) if (lo - pe).norm() <= (hi - pe).norm() => lo,
            Some(_) => hi,
        };
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        integral += w * e.im * period / n as f64;
        prev = Some(e);
    }
    Ok(SurvivalComponents {
        dynamical: 2.0 * integral,
        geometric,
        rate: 2.0 * integral / period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_decoupled_decay() {
        let p = NhParams::new(0.3, 0.1, 0.0, 0.2);
        let s = DriveSchedule::linear(10.0);
        let d = nh_rhs(&p, &s, 1.7, &AmplitudePair::upper());
        assert_eq!(d.c_a, Complex64::new(-0.15, 0.0));
        assert_eq!(d.c_b, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pure_exponential_decay() {
        let p = NhParams::new(0.1, 0.0, 0.0, 0.0);
        let s = DriveSchedule::linear(50.0);
        let tr = nh_evolve(&p, &s, AmplitudePair::upper(), 5000).unwrap();
        assert!((tr.last().population_a() - (-5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn half_rabi_flop() {
        // Linear φ with ΔT = 2π makes V e^{-iΔt} exactly static: the resonant
        // static-coupling case.
        let t = 100.0;
        let p = NhParams::new(0.0, 0.0, PI / (2.0 * t), TAU / t);
        let s = DriveSchedule::linear(t);
        let tr = nh_evolve(&p, &s, AmplitudePair::upper(), 2000).unwrap();
        assert!(tr.last().population_a() < 1e-6);
        // |C_a(t)| = |cos(V₀ t)| along the way
        for (tt, c) in tr.times.iter().zip(&tr.states).step_by(97) {
            assert!((c.c_a.norm() - (p.v0 * tt).cos().abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn rhs_matches_finite_difference() {
        let p = NhParams::new(0.1, 0.02, 0.2, 0.03);
        let s = DriveSchedule::smooth_sine(40.0);
        let steps = 8000;
        let tr = nh_evolve(&p, &s, AmplitudePair::upper(), steps).unwrap();
        let h = 40.0 / steps as f64;
        let err = |k: usize, stride: usize| {
            let fd_a =
                (tr.states[k + stride].c_a - tr.states[k - stride].c_a) / (2.0 * stride as f64 * h);
            (fd_a - nh_rhs(&p, &s, tr.times[k], &tr.states[k]).c_a).norm()
        };
        let (e1, e2) = (err(4000, 8), err(4000, 4));
        assert!(e1 < 1e-4);
        let ratio = e1 / e2;
        assert!(
            (ratio - 4.0).abs() < 0.3,
            "finite-difference order ratio {ratio}"
        );
    }

    #[test]
    fn rejects_too_few_steps() {
        let p = NhParams::new(0.1, 0.0, 0.2, 0.0);
        let s = DriveSchedule::linear(50.0);
        assert!(matches!(
            nh_evolve(&p, &s, AmplitudePair::upper(), 999),
            Err(Error::InsufficientSteps { required: 1000, .. })
        ));
    }

    #[test]
    fn step_halving_converges() {
        let t = 200.0;
        let p = NhParams::new(0.1, 0.0, 0.2, TAU / t);
        let s = DriveSchedule::linear(t);
        let a = nh_evolve(&p, &s, AmplitudePair::upper(), 4000).unwrap();
        let b = nh_evolve(&p, &s, AmplitudePair::upper(), 8000).unwrap();
        let c = nh_evolve(&p, &s, AmplitudePair::upper(), 16000).unwrap();
        let (pa, pb, pc) = (
            a.last().population_a(),
            b.last().population_a(),
            c.last().population_a(),
        );
        assert!((pb - pc).abs() < 1e-8);
        // Richardson estimate of the fine result stays within 1e-8 too
        let rich = pc + (pc - pb) / 15.0;
        assert!((rich - pc).abs() < 1e-9 && (pa - pc).abs() < 16.0 * (pb - pc).abs() + 1e-12);
    }

    #[test]
    fn norm_is_non_increasing() {
        let p = NhParams::new(0.1, 0.03, 0.25, 0.05);
        let s = DriveSchedule::smooth_sine(80.0);
        let tr = nh_evolve(&p, &s, AmplitudePair::upper(), 4000).unwrap();
        assert!(tr.max_norm_increase() <= 1e-15);
    }

    #[test]
    fn global_phase_changes_no_magnitude() {
        let p = NhParams::new(0.1, 0.0, 0.2, 0.01);
        let s = DriveSchedule::linear(60.0);
        let c0 = AmplitudePair::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let a = nh_evolve(&p, &s, c0, 3000).unwrap();
        let b = nh_evolve(&p, &s, c0.scale(Complex64::from_polar(1.0, 1.234)), 3000).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!((x.c_a.norm() - y.c_a.norm()).abs() < 1e-13);
            assert!((x.c_b.norm() - y.c_b.norm()).abs() < 1e-13);
        }
    }

    #[test]
    fn gw_phase_examples() {
        let b = gw_phase(&NhParams::new(0.0, 0.0, 1.0, 0.0)).unwrap();
        assert_eq!(b.beta_minus, Complex64::new(PI, 0.0));
        let b = gw_phase(&NhParams::new(0.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!(b.beta_minus, Complex64::new(0.0, 0.0));
        let b = gw_phase(&NhParams::new(0.0, 0.0, 0.5, 1.0)).unwrap();
        assert!((b.beta_minus.re - PI * (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((b.beta_minus.re - 0.920151).abs() < 1e-6);
        assert!(matches!(
            gw_phase(&NhParams::new(0.0, 0.0, 0.0, 0.0)),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn equal_widths_give_real_phase() {
        for (g, v, d) in [(0.3, 0.2, 0.1), (1.0, 0.05, -0.4), (0.0, 1.0, 2.0)] {
            let b = gw_phase(&NhParams::new(g, g, v, d)).unwrap();
            assert_eq!(b.beta_minus.im, 0.0);
        }
    }

    #[test]
    fn uncoupled_limit_is_adiabatically_connected() {
        let b = gw_phase(&NhParams::new(0.1, 0.0, 0.2, 1e6)).unwrap();
        assert!(b.beta_minus.norm() < 1e-6);
    }

    #[test]
    fn continuation_follows_sign() {
        let prev = gw_phase(&NhParams::new(0.1, 0.0, 0.2, 0.01)).unwrap();
        let flipped = GwPhase {
            cos_theta0: -prev.cos_theta0,
            ..prev
        };
        let next = gw_phase_continued(&NhParams::new(0.1, 0.0, 0.2, 0.011), &flipped).unwrap();
        assert!((next.cos_theta0 + prev.cos_theta0).norm() < 0.01);
    }

    #[test]
    fn survival_components_limits() {
        let c = gw_survival_components(&NhParams::new(0.1, 0.1, 0.2, 0.01), 100.0).unwrap();
        assert_eq!(c.geometric, 0.0);
        let c = gw_survival_components(&NhParams::new(0.1, 0.0, 0.0, 0.5), 100.0).unwrap();
        assert!(c.geometric.abs() < 1e-14);
        // the β₋ branch at V₀ = 0, Δ > 0 is |b⟩ (width γ_b = 0), the other |a⟩
        assert!(c.dynamical.abs() < 1e-12);
        let p = NhParams::new(0.1, 0.0, 0.0, -0.5);
        let c = gw_survival_components(&p, 100.0).unwrap();
        assert!((c.dynamical + 0.1 * 100.0).abs() < 1e-12);
    }

    #[test]
    fn adiabatic_state_is_eigenvector() {
        let p = NhParams::new(0.1, 0.0, 0.2, 0.005);
        for br in [Branch::Minus, Branch::Plus] {
            let v = adiabatic_state(&p, br);
            let hv = rotating_frame_hamiltonian(&p, 0.0).apply(v.to_array());
            let e = branch_eigenvalue(&p, br);
            assert!((hv[0] - e * v.c_a).norm() < 1e-14 && (hv[1] - e * v.c_b).norm() < 1e-14);
            assert!((v.norm_sqr() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exceptional_point_is_reported() {
        // Δ = 0, δ = 2V₀
        let p = NhParams::new(0.4, 0.0, 0.1, 0.0);
        assert!(matches!(gw_phase(&p), Err(Error::Undefined(_))));
        assert!(gw_survival_components(&p, 10.0).is_err());
    }
}
