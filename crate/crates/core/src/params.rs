//! Physical inputs, in natural units (ħ = c = 1).
//!
//! Energies and rates share one unit. The default scale is E_a − E_b = 2,
//! so the half transition frequency ω₀ is 1.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Scalar inputs of the master-equation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Upper level energy.
    pub e_a: f64,
    /// Lower level energy.
    pub e_b: f64,
    /// Drive carrier frequency ν.
    pub nu: f64,
    /// Vacuum decay constant γ.
    pub gamma: f64,
    /// Dipole-approximation cutoff ω_c.
    pub omega_c: f64,
    /// Dipole projection m = μ_ab·e (real).
    pub dipole: f64,
    /// Drive amplitude ℰ₀.
    pub e0: f64,
    /// Drive period T.
    pub period: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            e_a: 1.0,
            e_b: -1.0,
            nu: 2.0,
            gamma: 0.05,
            omega_c: 3.0,
            dipole: 1.0,
            e0: 0.1,
            period: 100.0,
        }
    }
}

impl ModelParams {
    /// Transition frequency ω = E_a − E_b.
    pub fn omega(&self) -> f64 {
        self.e_a - self.e_b
    }

    /// ω₀ = ω/2.
    pub fn omega0(&self) -> f64 {
        0.5 * self.omega()
    }

    /// Detuning Δ = ω − ν.
    pub fn detuning(&self) -> f64 {
        self.omega() - self.nu
    }

    /// m ℰ₀ / 2, the resonant Rabi coupling V₀.
    pub fn half_rabi(&self) -> f64 {
        0.5 * self.dipole * self.e0
    }

    /// Sets ν so that Δ·T equals `dt` for the current period.
    pub fn with_detuning_times_period(mut self, dt: f64) -> Self {
        self.nu = self.omega() - dt / self.period;
        self
    }

    /// Sets ν so that Δ equals `detuning`.
    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.nu = self.omega() - detuning;
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = period;
        self
    }

    /// Returns the parameters if every invariant holds, else all violations.
    pub fn validate(self) -> Result<Self> {
        let mut bad = Vec::new();
        let fields = [
            ("E_a", self.e_a),
            ("E_b", self.e_b),
            ("nu", self.nu),
            ("gamma", self.gamma),
            ("omega_c", self.omega_c),
            ("dipole", self.dipole),
            ("E0", self.e0),
            ("T", self.period),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                bad.push(format!("{name} is not finite"));
            }
        }
        if !(self.e_a > self.e_b) {
            bad.push(format!(
                "degenerate levels: E_a ({}) must exceed E_b ({})",
                self.e_a, self.e_b
            ));
        }
        if self.gamma < 0.0 {
            bad.push(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if self.e0 < 0.0 {
            bad.push(format!("E0 must be non-negative, got {}", self.e0));
        }
        if !(self.period > 0.0) {
            bad.push(format!("T must be positive, got {}", self.period));
        }
        if !(self.omega_c > 0.0) {
            bad.push(format!("omega_c must be positive, got {}", self.omega_c));
        } else if self.e_a > self.e_b && (self.omega_c / self.omega0() - 1.0).abs() < 1e-12 {
            bad.push("omega_c equals omega0: frequency shift is singular".to_string());
        }
        if bad.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(bad))
        }
    }
}

/// Vacuum frequency shift Ω₊ = −(γ/π) ln[|ω_c/ω₀ − 1| (ω_c/ω₀ + 1)].
pub fn omega_plus(p: &ModelParams) -> Result<f64> {
    let w0 = p.omega0();
    if !(p.omega_c > 0.0) || !(w0 > 0.0) {
        return Err(Error::InvalidParams(vec![
            "omega_c and omega0 must be positive".into(),
        ]));
    }
    let r = p.omega_c / w0;
    let arg = (r - 1.0).abs() * (r + 1.0);
    if arg == 0.0 || (r - 1.0).abs() < 1e-12 {
        return Err(Error::InvalidParams(vec![
            "omega_c equals omega0: frequency shift is singular".into(),
        ]));
    }
    Ok(-(p.gamma / PI) * arg.ln())
}

/// Parameters of the non-hermitian (Bethe–Lamb) track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NhParams {
    /// Upper-level decay rate γ_a.
    pub gamma_a: f64,
    /// Lower-level decay rate γ_b.
    pub gamma_b: f64,
    /// Rabi coupling V₀ = m ℰ₀ / 2.
    pub v0: f64,
    /// Detuning Δ.
    pub detuning: f64,
}

impl NhParams {
    pub fn new(gamma_a: f64, gamma_b: f64, v0: f64, detuning: f64) -> Self {
        Self {
            gamma_a,
            gamma_b,
            v0,
            detuning,
        }
    }

    /// δ = (γ_a − γ_b)/2.
    pub fn delta(&self) -> f64 {
        0.5 * (self.gamma_a - self.gamma_b)
    }

    pub fn validate(self) -> Result<Self> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("v0", self.v0),
            ("detuning", self.detuning),
        ] {
            if !v.is_finite() {
                bad.push(format!("{name} is not finite"));
            }
        }
        if self.gamma_a < 0.0 || self.gamma_b < 0.0 {
            bad.push("decay rates must be non-negative".into());
        }
        if bad.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(bad))
        }
    }
}

/// How the master-equation γ maps onto the level widths γ_a, γ_b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayMapping {
    /// γ_a = 2γ, γ_b = 0: zero-field upper population decays as e^(−2γt)
    /// in both tracks.
    ZeroFieldMatched,
    /// Explicit widths.
    Explicit { gamma_a: f64, gamma_b: f64 },
}

pub fn nh_from_master(p: &ModelParams) -> NhParams {
    nh_from_master_with(p, DecayMapping::ZeroFieldMatched)
}

pub fn nh_from_master_with(p: &ModelParams, mapping: DecayMapping) -> NhParams {
    let (gamma_a, gamma_b) = match mapping {
        DecayMapping::ZeroFieldMatched => (2.0 * p.gamma, 0.0),
        DecayMapping::Explicit { gamma_a, gamma_b } => (gamma_a, gamma_b),
    };
    NhParams::new(gamma_a, gamma_b, p.half_rabi(), p.detuning())
}
