//! Density-matrix track.
//!
//! Three generators share one integrator:
//!
//! * `Full`: the operator form
//!   dρ/dt = −i[(ω₀+Ω₊)σ_z, ρ] + i(μE)[σ_x, Λ⁰] + γ(2σ₋ρσ₊ − {σ₊σ₋, ρ})
//!   + μE(−2Aρ + 2Aσ_xρσ_x + B[[σ_y, ρ], σ_x]), with Λ⁰_ij = e^{−i(E_i−E_j)t} ρ_ij(0).
//! * `Reduced`: the two scalar equations for ρ_aa and ρ_ab written with G(t).
//! * `Scaled`: the rotating-frame equations for ρ̃_ij = e^{i(E_i−E_j)t} ρ_ij in
//!   s = t/T, with counter-rotating terms dropped and G replaced by G̃.
//!
//! The drive quadratures ride along as auxiliary ODE state in every form.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::drive::{
    field_projection, quadrature_rates, resonant_rate, DriveSchedule, QuadratureState,
};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix2, I, ZERO};
use crate::numerics::{grid, rk4_step};
use crate::params::{omega_plus, ModelParams};
use crate::state::DensityMatrix;

/// Default eigenvalue tolerance of the physicality monitor.
pub const PHYSICALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeForm {
    Full,
    Reduced,
    Scaled,
}

impl MeForm {
    pub fn name(self) -> &'static str {
        match self {
            MeForm::Full => "full",
            MeForm::Reduced => "reduced",
            MeForm::Scaled => "scaled",
        }
    }
}

impl std::str::FromStr for MeForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MeForm::Full),
            "reduced" => Ok(MeForm::Reduced),
            "scaled" => Ok(MeForm::Scaled),
            other => Err(Error::InvalidParams(vec![format!(
                "form must be full, reduced or scaled, got {other:?}"
            )])),
        }
    }
}

/// Validated inputs of one master-equation run.
#[derive(Debug, Clone)]
pub struct MasterModel {
    pub params: ModelParams,
    pub schedule: DriveSchedule,
    pub rho0: DensityMatrix,
    pub omega_plus: f64,
}

impl MasterModel {
    pub fn new(p: &ModelParams, s: &DriveSchedule, rho0: DensityMatrix) -> Result<Self> {
        let params = p.validate()?;
        if (s.period() - params.period).abs() > 1e-12 * params.period {
            return Err(Error::InvalidSchedule(format!(
                "schedule period {} differs from T = {}",
                s.period(),
                params.period
            )));
        }
        let rho0 = DensityMatrix::physical(rho0.rho_aa, rho0.rho_ab, PHYSICALITY_TOL)?;
        Ok(Self {
            params,
            schedule: s.clone(),
            rho0,
            omega_plus: omega_plus(&params)?,
        })
    }

    /// Λ⁰(t)
    fn lambda0(&self, t: f64) -> ComplexMatrix2 {
        let w = self.params.omega();
        let ab = self.rho0.rho_ab * Complex64::from_polar(1.0, -w * t);
        ComplexMatrix2::new(
            Complex64::new(self.rho0.rho_aa, 0.0),
            ab,
            ab.conj(),
            Complex64::new(self.rho0.rho_bb(), 0.0),
        )
    }

    /// Operator-form generator applied to an arbitrary 2×2 matrix.
    pub fn rhs_full(&self, t: f64, rho: &ComplexMatrix2, q: &QuadratureState) -> ComplexMatrix2 {
        let p = &self.params;
        let e = field_projection(p, &self.schedule, t);
        let (sx, sy, sz) = (
            ComplexMatrix2::sigma_x(),
            ComplexMatrix2::sigma_y(),
            ComplexMatrix2::sigma_z(),
        );
        let (sp, sm) = (ComplexMatrix2::sigma_plus(), ComplexMatrix2::sigma_minus());

        let free = sz
            .scale_re(p.omega0() + self.omega_plus)
            .commutator(rho)
            .scale(-I);
        let drive = sx.commutator(&self.lambda0(t)).scale(I * e);
        let decay =
            ((sm * *rho * sp).scale_re(2.0) - (sp * sm).anticommutator(rho)).scale_re(p.gamma);
        let corr = (rho.scale_re(-2.0 * q.a)
            + (sx * *rho * sx).scale_re(2.0 * q.a)
            + sy.commutator(rho).commutator(&sx).scale_re(q.b))
        .scale_re(e);
        free + drive + decay + corr
    }

    /// (dρ_aa/dt, dρ_ab/dt) from the scalar equations.
    pub fn rhs_reduced(
        &self,
        t: f64,
        rho_aa: f64,
        rho_ab: Complex64,
        q: &QuadratureState,
    ) -> (f64, Complex64) {
        let p = &self.params;
        let e = field_projection(p, &self.schedule, t);
        let rot = Complex64::from_polar(1.0, p.omega() * t);
        let x = rot * q.g;
        let d_aa = (-2.0 * p.gamma - 4.0 * e * x.re) * rho_aa
            + 2.0 * e * (rot.conj() * self.rho0.rho_ab).im
            + 2.0 * e * x.re;
        let d_ab = (Complex64::new(-p.gamma, -2.0 * (p.omega0() + self.omega_plus)) - 2.0 * e * x)
            * rho_ab
            + 2.0 * e * q.g.conj() * rot.conj() * rho_ab.conj()
            + I * e * (1.0 - 2.0 * self.rho0.rho_aa);
        (d_aa, d_ab)
    }

    /// (dρ̃_aa/ds, dρ̃_ab/ds) of the rotating-frame equations; `gt` is G̃(sT).
    pub fn rhs_scaled(
        &self,
        s: f64,
        rho_aa: f64,
        rho_ab_t: Complex64,
        gt: Complex64,
    ) -> (f64, Complex64) {
        let p = &self.params;
        let period = self.schedule.period();
        let t = s * period;
        // dG̃/dt = (mℰ₀/2) e^{iθ}, u = mℰ₀ e^{−iθ}
        let rate = resonant_rate(p, &self.schedule, t);
        let u = 2.0 * rate.conj();
        let gu = gt * u;
        let d_aa =
            (-2.0 * p.gamma - 2.0 * gu.re) * rho_aa + 2.0 * (rate * self.rho0.rho_ab).im + gu.re;
        let d_ab = -(Complex64::new(p.gamma, 2.0 * self.omega_plus) + gu) * rho_ab_t
            + u * gt.conj() * rho_ab_t.conj()
            + 0.5 * I * (1.0 - 2.0 * self.rho0.rho_aa) * u;
        (period * d_aa, period * d_ab)
    }

    /// Fewest steps `me_evolve` accepts for `form`.
    pub fn required_steps(&self, form: MeForm) -> usize {
        let p = &self.params;
        let field = (p.dipole * p.e0).abs();
        let slow = p
            .detuning()
            .abs()
            .max(p.gamma)
            .max(field)
            .max(self.omega_plus.abs());
        let rate = match form {
            MeForm::Scaled => slow,
            MeForm::Full | MeForm::Reduced => slow.max(p.omega()).max(p.nu.abs()),
        };
        ((10.0 * self.schedule.period() * rate / TAU).ceil() as usize).max(1000)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeTrajectory {
    pub form: MeForm,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DensityMatrix>,
    #[serde(skip)]
    pub quadratures: Vec<QuadratureState>,
    /// Physicality-monitor and regime warnings.
    pub warnings: Vec<String>,
    /// Smallest density-matrix eigenvalue seen.
    pub min_eigenvalue: f64,
    /// Largest anti-hermitian or trace drift removed when reassembling
    /// states of the full form (zero for the scalar forms).
    pub max_drift: f64,
}

impl MeTrajectory {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Fixed-step RK4 over one period in the requested form.
pub fn me_evolve(
    p: &ModelParams,
    s: &DriveSchedule,
    rho0: DensityMatrix,
    steps: usize,
    form: MeForm,
) -> Result<MeTrajectory> {
    let model = MasterModel::new(p, s, rho0)?;
    evolve_model(&model, steps, form)
}

pub fn evolve_model(model: &MasterModel, steps: usize, form: MeForm) -> Result<MeTrajectory> {
    let required = model.required_steps(form);
    if steps < required {
        return Err(Error::InsufficientSteps {
            given: steps,
            required,
        });
    }
    let period = model.schedule.period();
    let times = grid(0.0, period, steps);
    let mut warnings = Vec::new();
    let (states, quadratures, max_drift) = match form {
        MeForm::Full => run_full(model, &times),
        MeForm::Reduced => run_reduced(model, &times),
        MeForm::Scaled => {
            let dt = model.params.detuning() * period;
            if (dt - TAU).abs() > PI {
                warnings.push(format!(
                    "scaled form assumes Delta*T near 2pi; got Delta*T = {dt:.6}"
                ));
            }
            run_scaled(model, &times)
        }
    };
    if states
        .iter()
        .any(|r| !r.rho_aa.is_finite() || !r.rho_ab.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let mut min_eigenvalue = f64::INFINITY;
    let mut first_bad = None;
    let mut bad = 0usize;
    for (t, r) in times.iter().zip(&states) {
        let (lo, hi) = r.eigenvalues();
        min_eigenvalue = min_eigenvalue.min(lo);
        if lo < -PHYSICALITY_TOL || hi > 1.0 + PHYSICALITY_TOL {
            bad += 1;
            first_bad.get_or_insert((*t, lo));
        }
    }
    if let Some((t, lo)) = first_bad {
        warnings.push(format!(
            "physicality: {bad} of {} samples outside [-{PHYSICALITY_TOL:e}, 1+{PHYSICALITY_TOL:e}]; first at t = {t:.6} (eigenvalue {lo:.6e}); minimum eigenvalue {min_eigenvalue:.6e}",
            states.len()
        ));
    }
    Ok(MeTrajectory {
        form,
        times,
        states,
        quadratures,
        warnings,
        min_eigenvalue,
        max_drift,
    })
}

type Samples = (Vec<DensityMatrix>, Vec<QuadratureState>, f64);

fn run_full(model: &MasterModel, times: &[f64]) -> Samples {
    let (p, s) = (&model.params, &model.schedule);
    let f = |t: f64, y: &[Complex64; 8]| -> [Complex64; 8] {
        let rho = ComplexMatrix2::new(y[0], y[1], y[2], y[3]);
        let q = QuadratureState::unpack(t, &y[4..]);
        let d = model.rhs_full(t, &rho, &q);
        let r = quadrature_rates(p, s, t, &y[4..]);
        [
            d.0[0][0], d.0[0][1], d.0[1][0], d.0[1][1], r[0], r[1], r[2], r[3],
        ]
    };
    let m0 = model.rho0.to_matrix();
    let q0 = QuadratureState::at_origin().pack();
    let mut y = [
        m0.0[0][0], m0.0[0][1], m0.0[1][0], m0.0[1][1], q0[0], q0[1], q0[2], q0[3],
    ];
    let mut states = vec![model.rho0];
    let mut quads = vec![QuadratureState::at_origin()];
    let mut drift = 0.0f64;
    for w in times.windows(2) {
        y = rk4_step(&f, w[0], &y, w[1] - w[0]);
        let (d, dr) = DensityMatrix::from_matrix(&ComplexMatrix2::new(y[0], y[1], y[2], y[3]));
        drift = drift.max(dr);
        states.push(d);
        quads.push(QuadratureState::unpack(w[1], &y[4..]));
    }
    (states, quads, drift)
}

fn run_reduced(model: &MasterModel, times: &[f64]) -> Samples {
    let (p, s) = (&model.params, &model.schedule);
    let f = |t: f64, y: &[Complex64; 6]| -> [Complex64; 6] {
        let q = QuadratureState::unpack(t, &y[2..]);
        let (daa, dab) = model.rhs_reduced(t, y[0].re, y[1], &q);
        let r = quadrature_rates(p, s, t, &y[2..]);
        [Complex64::new(daa, 0.0), dab, r[0], r[1], r[2], r[3]]
    };
    let mut y = [
        Complex64::new(model.rho0.rho_aa, 0.0),
        model.rho0.rho_ab,
        ZERO,
        ZERO,
        ZERO,
        ZERO,
    ];
    let mut states = vec![model.rho0];
    let mut quads = vec![QuadratureState::at_origin()];
    for w in times.windows(2) {
        y = rk4_step(&f, w[0], &y, w[1] - w[0]);
        states.push(DensityMatrix::new(y[0].re, y[1]));
        quads.push(QuadratureState::unpack(w[1], &y[2..]));
    }
    (states, quads, 0.0)
}

fn run_scaled(model: &MasterModel, times: &[f64]) -> Samples {
    let (p, s) = (&model.params, &model.schedule);
    let period = s.period();
    let w = p.omega();
    let f = |sv: f64, y: &[Complex64; 6]| -> [Complex64; 6] {
        let (daa, dab) = model.rhs_scaled(sv, y[0].re, y[1], y[3]);
        let r = quadrature_rates(p, s, sv * period, &y[2..]);
        [
            Complex64::new(daa, 0.0),
            dab,
            r[0] * period,
            r[1] * period,
            r[2] * period,
            r[3] * period,
        ]
    };
    // ρ̃_ab(0) = ρ_ab(0)
    let mut y = [
        Complex64::new(model.rho0.rho_aa, 0.0),
        model.rho0.rho_ab,
        ZERO,
        ZERO,
        ZERO,
        ZERO,
    ];
    let n = times.len() - 1;
    let svals = grid(0.0, 1.0, n);
    let mut states = vec![model.rho0];
    let mut quads = vec![QuadratureState::at_origin()];
    for (k, sw) in svals.windows(2).enumerate() {
        y = rk4_step(&f, sw[0], &y, sw[1] - sw[0]);
        let t = times[k + 1];
        states.push(DensityMatrix::new(
            y[0].re,
            Complex64::from_polar(1.0, -w * t) * y[1],
        ));
        quads.push(QuadratureState::unpack(t, &y[2..]));
    }
    (states, quads, 0.0)
}

/// Which reading of the SU(2) coherence generator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorConvention {
    /// Components and damping exactly as printed:
    /// B_x = d|G̃|²/dt, B_y = 2(Im G̃ dRe G̃/dt − Re G̃ dIm G̃/dt),
    /// B_z = −2i(Ω₊ + d(Re G̃ Im G̃)/dt), damping γt + Re²G̃ − Im²G̃.
    #[default]
    Printed,
    /// The decomposition that reproduces the rotating-frame coherence
    /// equation: B_x = d(Re²G̃ − Im²G̃)/dt, B_y = 2 d(Re G̃ Im G̃)/dt,
    /// B_z = −2i(Ω₊ + Im G̃ dRe G̃/dt − Re G̃ dIm G̃/dt), damping γt + |G̃|².
    Consistent,
}

/// Components of B⃗(t) for the coherence propagator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BVector {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl BVector {
    /// B⃗ from G̃(t) and dG̃/dt.
    pub fn from_quadrature(
        omega_plus: f64,
        gt: Complex64,
        dgt: Complex64,
        c: GeneratorConvention,
    ) -> Self {
        let (re, im, dre, dim) = (gt.re, gt.im, dgt.re, dgt.im);
        let (x, y, z) = match c {
            GeneratorConvention::Printed => (
                2.0 * (re * dre + im * dim),
                2.0 * (im * dre - re * dim),
                omega_plus + dre * im + re * dim,
            ),
            GeneratorConvention::Consistent => (
                2.0 * (re * dre - im * dim),
                2.0 * (dre * im + re * dim),
                omega_plus + im * dre - re * dim,
            ),
        };
        Self {
            x: Complex64::new(x, 0.0),
            y: Complex64::new(y, 0.0),
            z: Complex64::new(0.0, -2.0 * z),
        }
    }

    pub fn to_array(self) -> [Complex64; 3] {
        [self.x, self.y, self.z]
    }

    /// B⃗·σ⃗
    pub fn dot_sigma(&self) -> ComplexMatrix2 {
        ComplexMatrix2::from_pauli(self.to_array())
    }
}

/// Scalar damping exponent D(t) multiplying the coherence pair.
pub fn damping_exponent(gamma: f64, t: f64, gt: Complex64, c: GeneratorConvention) -> f64 {
    match c {
        GeneratorConvention::Printed => gamma * t + gt.re * gt.re - gt.im * gt.im,
        GeneratorConvention::Consistent => gamma * t + gt.norm_sqr(),
    }
}

/// dD/dt
pub fn damping_rate(gamma: f64, gt: Complex64, dgt: Complex64, c: GeneratorConvention) -> f64 {
    match c {
        GeneratorConvention::Printed => gamma + 2.0 * (gt.re * dgt.re - gt.im * dgt.im),
        GeneratorConvention::Consistent => gamma + 2.0 * (gt.re * dgt.re + gt.im * dgt.im),
    }
}
