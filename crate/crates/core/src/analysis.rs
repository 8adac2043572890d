//! Experiments on the imaginary phases: T-sweeps with a linear
//! decomposition, reparametrization tests and cross-track comparison.

use std::fmt;

use serde::Serialize;

use crate::drive::{quadratures_to, DriveSchedule};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::me::{me_evolve, MeForm};
use crate::nh::{self, adiabatic_state, branch_eigenvalue, gw_phase, nh_evolve, Branch};
use crate::numerics::least_squares;
use crate::params::{nh_from_master_with, DecayMapping, ModelParams, NhParams};
use crate::state::{AmplitudePair, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Track {
    NonHermitian,
    Master,
}

impl Track {
    pub fn name(self) -> &'static str {
        match self {
            Track::NonHermitian => "non-hermitian",
            Track::Master => "master",
        }
    }
}

impl std::str::FromStr for Track {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-hermitian" | "nh" => Ok(Track::NonHermitian),
            "master" | "me" => Ok(Track::Master),
            other => Err(Error::InvalidParams(vec![format!(
                "track must be non-hermitian or master, got {other:?}"
            )])),
        }
    }
}

/// How Δ follows the period across a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningMode {
    /// Δ stays at its reference value for every T.
    #[default]
    Fixed,
    /// Δ = (Δ·T)_ref / T_k, so Δ·T is the same at every point.
    PerT,
}

/// Initial amplitudes of the non-hermitian track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NhInitial {
    /// Pure state from rho_aa0, rho_ab0.
    State,
    /// Eigenvector of the β₋ branch at t = 0.
    #[default]
    AdiabaticMinus,
    AdiabaticPlus,
}

impl NhInitial {
    fn amplitudes(self, p: &NhParams, rho0: &DensityMatrix) -> Result<AmplitudePair> {
        match self {
            NhInitial::State => AmplitudePair::from_pure(rho0, 1e-9),
            NhInitial::AdiabaticMinus => Ok(adiabatic_state(p, Branch::Minus)),
            NhInitial::AdiabaticPlus => Ok(adiabatic_state(p, Branch::Plus)),
        }
    }
}

/// Least-squares line through (T, log-magnitude) samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation from the line.
    pub residual: f64,
}

pub fn fit_decay(samples: &[(f64, f64)]) -> Result<Fit> {
    let mut ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 distinct T values, got {}",
            ts.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let (slope, intercept) =
        least_squares(&x, &y).ok_or_else(|| Error::Fit("degenerate T values".into()))?;
    let residual = samples
        .iter()
        .map(|(t, v)| (v - (slope * t + intercept)).abs())
        .fold(0.0, f64::max);
    Ok(Fit {
        slope,
        intercept,
        residual,
    })
}

/// Intercepts of the lines through successive samples (sorted by T).
pub fn pair_intercepts(samples: &[(f64, f64)]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    s.windows(2)
        .map(|w| {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            w[0].1 - slope * w[0].0
        })
        .collect()
}

/// Whether pairwise intercepts have settled on a nonzero constant: the last
/// two agree within 10% and the last is non-negligible (above 1% of
/// |slope|·min T).
pub fn intercept_converging(pairs: &[f64], slope: f64, t_min: f64) -> bool {
    match pairs {
        [.., prev, last] => {
            (last - prev).abs() <= 0.1 * last.abs() && last.abs() > 0.01 * slope.abs() * t_min
        }
        _ => false,
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub track: Track,
    /// Reference parameters; `period` is the reference T for `Fixed`
    /// detuning and for step scaling.
    pub params: ModelParams,
    pub decay: DecayMapping,
    /// Schedule shape; rescaled to each T.
    pub schedule: DriveSchedule,
    pub t_list: Vec<f64>,
    pub detuning_mode: DetuningMode,
    /// Steps for the reference period; each point uses the same step size.
    pub steps: usize,
    pub rho0: DensityMatrix,
    pub form: MeForm,
    pub nh_initial: NhInitial,
    pub exec: Exec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSample {
    pub period: f64,
    pub detuning: f64,
    pub steps: usize,
    /// log(|C_a(T)|²/|C_a(0)|²) or log(ρ_aa(T)/ρ_aa(0)).
    pub log_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    pub track: Track,
    pub fitted_slope: f64,
    pub fitted_intercept: f64,
    pub fit_residual: f64,
    /// −2 Im β₋ at the reference parameters (non-hermitian track).
    pub gw_prediction: Option<f64>,
    /// 2 Im E of the followed adiabatic branch (non-hermitian track).
    pub predicted_slope: Option<f64>,
    pub pair_intercepts: Vec<f64>,
    pub intercept_converging: bool,
    pub per_t_samples: Vec<SweepSample>,
    pub warnings: Vec<String>,
}

impl SweepSpec {
    fn point_params(&self, period: f64) -> ModelParams {
        let p = self.params;
        let detuning = match self.detuning_mode {
            DetuningMode::Fixed => p.detuning(),
            DetuningMode::PerT => p.detuning() * p.period / period,
        };
        p.with_period(period).with_detuning(detuning)
    }

    fn point_steps(&self, period: f64) -> usize {
        (self.steps as f64 * period / self.params.period).ceil() as usize
    }

    fn run_point(&self, period: f64) -> Result<(SweepSample, Vec<String>)> {
        let p = self.point_params(period);
        let s = self.schedule.with_period(period);
        let (log_magnitude, steps, warnings) = match self.track {
            Track::NonHermitian => {
                let nhp = nh_from_master_with(&p, self.decay).validate()?;
                let c0 = self.nh_initial.amplitudes(&nhp, &self.rho0)?;
                let steps = self
                    .point_steps(period)
                    .max(nh::required_steps(&nhp, period));
                let tr = nh_evolve(&nhp, &s, c0, steps)?;
                (
                    log_ratio(tr.last().population_a(), c0.population_a(), period)?,
                    steps,
                    Vec::new(),
                )
            }
            Track::Master => {
                let m = crate::me::MasterModel::new(&p, &s, self.rho0)?;
                let steps = self.point_steps(period).max(m.required_steps(self.form));
                let tr = crate::me::evolve_model(&m, steps, self.form)?;
                let w = tr
                    .warnings
                    .iter()
                    .map(|w| format!("T={period}: {w}"))
                    .collect();
                (
                    log_ratio(tr.last().rho_aa, self.rho0.rho_aa, period)?,
                    steps,
                    w,
                )
            }
        };
        Ok((
            SweepSample {
                period,
                detuning: p.detuning(),
                steps,
                log_magnitude,
            },
            warnings,
        ))
    }
}

fn log_ratio(end: f64, start: f64, period: f64) -> Result<f64> {
    if !(end > 0.0) || !(start > 0.0) {
        return Err(Error::Undefined(format!(
            "log-magnitude at T={period}: population {end} (initial {start}) is not positive"
        )));
    }
    Ok((end / start).ln())
}

/// Runs the track at every T and fits log-magnitude = slope·T + intercept.
pub fn sweep_t(spec: &SweepSpec) -> Result<PhaseReport> {
    let mut t_list = spec.t_list.clone();
    t_list.sort_by(f64::total_cmp);
    let results = spec.exec.map(&t_list, |&t| spec.run_point(t));
    let mut samples = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for r in results {
        let (s, w) = r?;
        samples.push(s);
        warnings.extend(w);
    }
    let xy: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.period, s.log_magnitude))
        .collect();
    let fit = fit_decay(&xy)?;
    let pairs = pair_intercepts(&xy);
    let (gw_prediction, predicted_slope) = match spec.track {
        Track::NonHermitian => {
            let nhp = nh_from_master_with(&spec.params, spec.decay);
            let gw = -2.0 * gw_phase(&nhp)?.beta_minus.im;
            let slope = match spec.nh_initial {
                NhInitial::AdiabaticMinus => Some(2.0 * branch_eigenvalue(&nhp, Branch::Minus).im),
                NhInitial::AdiabaticPlus => Some(2.0 * branch_eigenvalue(&nhp, Branch::Plus).im),
                NhInitial::State => None,
            };
            (Some(gw), slope)
        }
        Track::Master => (None, None),
    };
    Ok(PhaseReport {
        track: spec.track,
        fitted_slope: fit.slope,
        fitted_intercept: fit.intercept,
        fit_residual: fit.residual,
        gw_prediction,
        predicted_slope,
        intercept_converging: intercept_converging(&pairs, fit.slope, t_list[0]),
        pair_intercepts: pairs,
        per_t_samples: samples,
        warnings,
    })
}

/// Scalar compared across two schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Im β₋ (analytic, schedule-free).
    ImBetaMinus,
    /// |G̃(T)| (quadrature).
    GTildeAbs,
    /// log(ρ_aa(T)/ρ_aa(0)) on the master track.
    LogRhoAa,
    /// log(|C_a(T)|²/|C_a(0)|²) on the non-hermitian track.
    LogCaSquared,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::ImBetaMinus => "im_beta_minus",
            Observable::GTildeAbs => "g_tilde_abs",
            Observable::LogRhoAa => "log_rho_aa",
            Observable::LogCaSquared => "log_ca_squared",
        }
    }

    /// Analytic observables default to an absolute 1e-6 tolerance, simulated
    /// ones to 1e-3 relative.
    pub fn default_tolerance(self) -> Tolerance {
        match self {
            Observable::ImBetaMinus | Observable::GTildeAbs => Tolerance::Absolute(1e-6),
            Observable::LogRhoAa | Observable::LogCaSquared => Tolerance::Relative(1e-3),
        }
    }
}

impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "im_beta_minus" => Ok(Observable::ImBetaMinus),
            "g_tilde_abs" => Ok(Observable::GTildeAbs),
            "log_rho_aa" => Ok(Observable::LogRhoAa),
            "log_ca_squared" => Ok(Observable::LogCaSquared),
            other => Err(Error::InvalidParams(vec![format!(
                "observable must be im_beta_minus, g_tilde_abs, log_rho_aa or log_ca_squared, got {other:?}"
            )])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    Relative(f64),
}

impl Tolerance {
    pub fn accepts(self, a: f64, b: f64) -> bool {
        let d = (a - b).abs();
        match self {
            Tolerance::Absolute(tol) => d <= tol,
            Tolerance::Relative(tol) => d <= tol * a.abs().max(b.abs()),
        }
    }

    /// Same kind, new magnitude.
    pub fn with_value(self, v: f64) -> Self {
        match self {
            Tolerance::Absolute(_) => Tolerance::Absolute(v),
            Tolerance::Relative(_) => Tolerance::Relative(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ParametrizationInvariant,
    ParametrizationDependent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ParametrizationInvariant => "parametrization-invariant",
            Verdict::ParametrizationDependent => "parametrization-dependent",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReparamSpec {
    pub params: ModelParams,
    pub decay: DecayMapping,
    pub schedule_a: DriveSchedule,
    pub schedule_b: DriveSchedule,
    pub observable: Observable,
    pub rho0: DensityMatrix,
    pub form: MeForm,
    pub steps: usize,
    pub nh_initial: NhInitial,
    pub tolerance: Option<f64>,
    pub exec: Exec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReparamReport {
    pub schedule_a: String,
    pub schedule_b: String,
    pub observable: Observable,
    pub value_a: f64,
    pub value_b: f64,
    pub difference: f64,
    pub tolerance: Tolerance,
    pub verdict: Verdict,
}

/// Evaluates the observable under both schedules and compares.
pub fn reparam_test(spec: &ReparamSpec) -> Result<ReparamReport> {
    let (a, b) = (&spec.schedule_a, &spec.schedule_b);
    if (a.period() - b.period()).abs() > 1e-12 * a.period().max(b.period()) {
        return Err(Error::InvalidSchedule(format!(
            "reparametrization arms need the same period, got {} and {}",
            a.period(),
            b.period()
        )));
    }
    let arms = [a.clone(), b.clone()];
    let values = spec.exec.map(&arms, |s| observe(spec, s));
    let value_a = values[0].clone()?;
    let value_b = values[1].clone()?;
    let tolerance = match spec.tolerance {
        Some(v) => spec.observable.default_tolerance().with_value(v),
        None => spec.observable.default_tolerance(),
    };
    let verdict = if tolerance.accepts(value_a, value_b) {
        Verdict::ParametrizationInvariant
    } else {
        Verdict::ParametrizationDependent
    };
    Ok(ReparamReport {
        schedule_a: a.to_string(),
        schedule_b: b.to_string(),
        observable: spec.observable,
        value_a,
        value_b,
        difference: value_a - value_b,
        tolerance,
        verdict,
    })
}

fn observe(spec: &ReparamSpec, s: &DriveSchedule) -> Result<f64> {
    let p = spec.params.with_period(s.period());
    match spec.observable {
        Observable::ImBetaMinus => Ok(gw_phase(&nh_from_master_with(&p, spec.decay))?
            .beta_minus
            .im),
        Observable::GTildeAbs => Ok(quadratures_to(&p, s, s.period(), 64)?.gt.norm()),
        Observable::LogRhoAa => {
            let tr = me_evolve(&p, s, spec.rho0, spec.steps, spec.form)?;
            log_ratio(tr.last().rho_aa, spec.rho0.rho_aa, s.period())
        }
        Observable::LogCaSquared => {
            let nhp = nh_from_master_with(&p, spec.decay).validate()?;
            let c0 = spec.nh_initial.amplitudes(&nhp, &spec.rho0)?;
            let tr = nh_evolve(&nhp, s, c0, spec.steps)?;
            log_ratio(tr.last().population_a(), c0.population_a(), s.period())
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub params: ModelParams,
    pub decay: DecayMapping,
    pub schedule: DriveSchedule,
    pub rho0: DensityMatrix,
    pub form: MeForm,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub rho_aa: Vec<f64>,
    #[serde(skip)]
    pub ca_squared: Vec<f64>,
    #[serde(skip)]
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub steps: usize,
    pub warnings: Vec<String>,
}

/// |ρ_aa(t) − |C_a(t)|²| on a shared grid, NH parameters from the decay
/// mapping and amplitudes from the (pure) initial density matrix.
pub fn compare_tracks(spec: &CompareSpec) -> Result<CompareReport> {
    let me = me_evolve(
        &spec.params,
        &spec.schedule,
        spec.rho0,
        spec.steps,
        spec.form,
    )?;
    let nhp = nh_from_master_with(&spec.params, spec.decay);
    let c0 = AmplitudePair::from_pure(&spec.rho0, 1e-9)?;
    let nh = nh_evolve(&nhp, &spec.schedule, c0, spec.steps)?;
    let rho_aa: Vec<f64> = me.states.iter().map(|r| r.rho_aa).collect();
    let ca_squared: Vec<f64> = nh.states.iter().map(|c| c.population_a()).collect();
    let deviation: Vec<f64> = rho_aa
        .iter()
        .zip(&ca_squared)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let max_deviation = deviation.iter().copied().fold(0.0, f64::max);
    let mean_deviation = deviation.iter().sum::<f64>() / deviation.len() as f64;
    Ok(CompareReport {
        times: me.times,
        rho_aa,
        ca_squared,
        deviation,
        max_deviation,
        mean_deviation,
        steps: spec.steps,
        warnings: me.warnings,
    })
}
