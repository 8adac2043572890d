//! The classical drive: phase schedules φ(t) over one period, the projected
//! field m ℰ₀ cos(νt + φ(t)), and the cumulative quadratures G, G̃, A, B.
//!
//! Every schedule traces the same closed path φ: 0 → 2π; they differ only
//! in how that path is parametrized in time.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{simpson_converged, QUAD_TOL, STEP_CAP};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// φ = 2πt/T
    Linear,
    /// φ = 2π sin²(πt/2T); zero slope at both ends.
    SmoothSine,
    /// Piecewise-linear through (t_i, φ_i).
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSchedule {
    period: f64,
    kind: ScheduleKind,
}

impl DriveSchedule {
    pub fn linear(period: f64) -> Self {
        Self {
            period,
            kind: ScheduleKind::Linear,
        }
    }

    pub fn smooth_sine(period: f64) -> Self {
        Self {
            period,
            kind: ScheduleKind::SmoothSine,
        }
    }

    /// Table schedule; the period is the last sample time.
    pub fn table(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidSchedule(
                "table needs at least two samples".into(),
            ));
        }
        if points.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidSchedule("non-finite table entry".into()));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::InvalidSchedule("table must start at (0, 0)".into()));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidSchedule(format!(
                    "time column not strictly increasing at t = {}",
                    w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidSchedule(format!(
                    "phase decreases at t = {}",
                    w[1].0
                )));
            }
        }
        let last = points.last_mut().unwrap();
        if (last.1 - TAU).abs() > 1e-9 {
            return Err(Error::InvalidSchedule(format!(
                "table must end at phase 2π, got {}",
                last.1
            )));
        }
        last.1 = TAU;
        let period = last.0;
        Ok(Self {
            period,
            kind: ScheduleKind::Table(points),
        })
    }

    /// Parses whitespace-separated `time phase` rows. Blank lines and `#`
    /// comments are skipped.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut pts = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: "expected two columns".into(),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    reason: format!("{s}: {e}"),
                })
            };
            pts.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::table(pts)
    }

    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse_table(&text)
    }

    /// Same path and shape, new period. Table times are rescaled.
    pub fn with_period(&self, period: f64) -> Self {
        let kind = match &self.kind {
            ScheduleKind::Table(pts) => {
                let s = period / self.period;
                let mut pts: Vec<_> = pts.iter().map(|&(t, p)| (t * s, p)).collect();
                pts.last_mut().unwrap().0 = period;
                ScheduleKind::Table(pts)
            }
            k => k.clone(),
        };
        Self { period, kind }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ScheduleKind::Linear => "linear",
            ScheduleKind::SmoothSine => "smooth-sine",
            ScheduleKind::Table(_) => "table",
        }
    }

    /// φ(t) for t in [0, T].
    pub fn phase_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.period).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                period: self.period,
            });
        }
        Ok(self.phase(t))
    }

    /// φ(t) with t clamped into [0, T]. Integrators land a few ulps past T.
    pub(crate) fn phase(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.period);
        let x = t / self.period;
        match &self.kind {
            ScheduleKind::Linear => TAU * x,
            ScheduleKind::SmoothSine => TAU * (0.5 * PI * x).sin().powi(2),
            ScheduleKind::Table(pts) => {
                let k = pts.partition_point(|&(ti, _)| ti <= t);
                if k == 0 {
                    return pts[0].1;
                }
                if k == pts.len() {
                    return pts[k - 1].1;
                }
                let (t0, p0) = pts[k - 1];
                let (t1, p1) = pts[k];
                p0 + (p1 - p0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

impl fmt::Display for DriveSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(T={})", self.name(), self.period)
    }
}

/// μ_ab·E_clas(t) = m ℰ₀ cos(νt + φ(t)).
pub fn field_projection(p: &ModelParams, s: &DriveSchedule, t: f64) -> f64 {
    p.dipole * p.e0 * (p.nu * t + s.phase(t)).cos()
}

/// dG̃/dt = (m ℰ₀/2) e^{i(φ(t) − Δt)}.
#[inline]
pub fn resonant_rate(p: &ModelParams, s: &DriveSchedule, t: f64) -> Complex64 {
    Complex64::from_polar(p.half_rabi(), s.phase(t) - p.detuning() * t)
}

/// Running values of the drive quadratures at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct QuadratureState {
    pub t: f64,
    /// G(t) = ∫₀ᵗ (μ·E)(t′) e^{−iωt′} dt′
    pub g: Complex64,
    /// G̃(t) = (m ℰ₀/2) ∫₀ᵗ e^{i(φ(t′) − Δt′)} dt′, the resonant part of G e^{iωt}.
    pub gt: Complex64,
    /// A(t) = ∫₀ᵗ (μ·E)(t′) cos(ω(t − t′)) dt′
    pub a: f64,
    /// B(t) = ∫₀ᵗ (μ·E)(t′) sin(ω(t − t′)) dt′
    pub b: f64,
}

impl QuadratureState {
    pub fn at_origin() -> Self {
        Self::default()
    }

    /// Packs (G, G̃, A, B) for use as auxiliary ODE state.
    pub(crate) fn pack(&self) -> [Complex64; 4] {
        [
            self.g,
            self.gt,
            Complex64::new(self.a, 0.0),
            Complex64::new(self.b, 0.0),
        ]
    }

    pub(crate) fn unpack(t: f64, v: &[Complex64]) -> Self {
        Self {
            t,
            g: v[0],
            gt: v[1],
            a: v[2].re,
            b: v[3].re,
        }
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        [
            (self.g - o.g).norm(),
            (self.gt - o.gt).norm(),
            (self.a - o.a).abs(),
            (self.b - o.b).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Time derivative of the packed quadratures (G, G̃, A, B):
/// dG/dt = μE e^{−iωt}, dG̃/dt = (mℰ₀/2)e^{i(φ−Δt)}, dA/dt = μE − ωB, dB/dt = ωA.
#[inline]
pub(crate) fn quadrature_rates(
    p: &ModelParams,
    s: &DriveSchedule,
    t: f64,
    q: &[Complex64],
) -> [Complex64; 4] {
    let e = field_projection(p, s, t);
    let w = p.omega();
    [
        Complex64::from_polar(e, -w * t),
        resonant_rate(p, s, t),
        Complex64::new(e - w * q[3].re, 0.0),
        Complex64::new(w * q[2].re, 0.0),
    ]
}

/// Quadratures at `t` by composite Simpson, doubling from `steps` intervals
/// until the relative change drops below 1e-10 or 2²² intervals.
pub fn quadratures_to(
    p: &ModelParams,
    s: &DriveSchedule,
    t: f64,
    steps: usize,
) -> Result<QuadratureState> {
    quadratures_to_with(p, s, t, steps, QUAD_TOL, STEP_CAP)
}

pub fn quadratures_to_with(
    p: &ModelParams,
    s: &DriveSchedule,
    t: f64,
    steps: usize,
    tol: f64,
    cap: usize,
) -> Result<QuadratureState> {
    if steps < 2 {
        return Err(Error::InsufficientSteps {
            given: steps,
            required: 2,
        });
    }
    if !(0.0..=s.period()).contains(&t) {
        return Err(Error::OutOfRange {
            t,
            period: s.period(),
        });
    }
    let w = p.omega();
    let integrand = |tp: f64| {
        let e = field_projection(p, s, tp);
        [
            Complex64::from_polar(e, -w * tp),
            resonant_rate(p, s, tp),
            Complex64::new(e * (w * (t - tp)).cos(), 0.0),
            Complex64::new(e * (w * (t - tp)).sin(), 0.0),
        ]
    };
    let scale = (p.dipole * p.e0).abs() * t;
    let (v, _) = simpson_converged(
        &integrand,
        0.0,
        t,
        steps,
        tol,
        scale,
        cap,
        "drive quadrature",
    )?;
    Ok(QuadratureState {
        t,
        g: v[0],
        gt: v[1],
        a: v[2].re,
        b: v[3].re,
    })
}
