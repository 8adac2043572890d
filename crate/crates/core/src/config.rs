//! Flat `key = value` experiment files.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Numbers
//! may be written as multiples of π: `pi`, `2pi`, `100*pi`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::analysis::{
    CompareSpec, DetuningMode, NhInitial, Observable, ReparamSpec, SweepSpec, Track,
};
use crate::drive::DriveSchedule;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::me::{MasterModel, MeForm};
use crate::nh;
use crate::params::{nh_from_master_with, DecayMapping, ModelParams, NhParams};
use crate::state::DensityMatrix;

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "E_a",
    "E_b",
    "nu",
    "delta_times_T",
    "gamma",
    "gamma_a",
    "gamma_b",
    "omega_c",
    "dipole",
    "E0",
    "T",
    "T_list",
    "steps",
    "schedule",
    "schedule_table",
    "rho_aa0",
    "re_rho_ab0",
    "im_rho_ab0",
    "track",
    "form",
    "tolerance",
    "detuning_mode",
    "nh_initial",
    "schedule_b",
    "observable",
];

/// Default steps per unit time when `steps` is absent.
pub const DEFAULT_STEPS_PER_TIME: f64 = 20.0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, (usize, String)>,
    /// Directory that relative paths resolve against.
    base: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                reason: format!("expected key = value, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::UnknownKey(key.to_string()));
            }
            if value.is_empty() {
                return Err(Error::Parse {
                    line,
                    reason: format!("empty value for {key}"),
                });
            }
            if entries
                .insert(key.to_string(), (line, value.to_string()))
                .is_some()
            {
                return Err(Error::Parse {
                    line,
                    reason: format!("duplicate key {key}"),
                });
            }
        }
        Ok(Self {
            entries,
            base: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Overrides (or adds) a key, as the command line does.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), (0, value.to_string()));
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|(line, v)| {
                parse_number(v).ok_or_else(|| Error::Parse {
                    line: *line,
                    reason: format!("{key}: not a number: {v:?}"),
                })
            })
            .transpose()
    }

    fn require_all(&self, keys: &[&str]) -> Result<()> {
        let missing: Vec<&str> = keys.iter().copied().filter(|k| !self.has(k)).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingKey(missing.join(", ")))
        }
    }

    fn req(&self, key: &str) -> Result<f64> {
        self.number(key)?
            .ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn parsed<T: std::str::FromStr<Err = Error>>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|(_, v)| v.parse::<T>()).transpose()
    }

    /// Master-track parameters. Requires E_a, E_b, gamma, omega_c, dipole,
    /// E0, T and one of nu / delta_times_T.
    pub fn model_params(&self) -> Result<ModelParams> {
        self.require_all(&["E_a", "E_b", "gamma", "omega_c", "dipole", "E0", "T"])?;
        let p = self.base_params(self.req("gamma")?, self.req("omega_c")?)?;
        p.validate()
    }

    fn base_params(&self, gamma: f64, omega_c: f64) -> Result<ModelParams> {
        let mut p = ModelParams {
            e_a: self.req("E_a")?,
            e_b: self.req("E_b")?,
            nu: 0.0,
            gamma,
            omega_c,
            dipole: self.req("dipole")?,
            e0: self.req("E0")?,
            period: self.req("T")?,
        };
        match (self.number("nu")?, self.number("delta_times_T")?) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParams(vec![
                    "give only one of nu and delta_times_T".into(),
                ]))
            }
            (Some(nu), None) => p.nu = nu,
            (None, Some(dt)) => p = p.with_detuning_times_period(dt),
            (None, None) => return Err(Error::MissingKey("nu or delta_times_T".into())),
        }
        Ok(p)
    }

    pub fn decay_mapping(&self) -> Result<DecayMapping> {
        match (self.number("gamma_a")?, self.number("gamma_b")?) {
            (Some(gamma_a), Some(gamma_b)) => Ok(DecayMapping::Explicit { gamma_a, gamma_b }),
            (None, None) => Ok(DecayMapping::ZeroFieldMatched),
            (Some(_), None) => Err(Error::MissingKey("gamma_b".into())),
            (None, Some(_)) => Err(Error::MissingKey("gamma_a".into())),
        }
    }

    /// Non-hermitian parameters. omega_c is not needed; gamma may be
    /// replaced by explicit gamma_a and gamma_b.
    pub fn nh_params(&self) -> Result<NhParams> {
        self.require_all(&["E_a", "E_b", "dipole", "E0", "T"])?;
        let mapping = self.decay_mapping()?;
        let gamma = match mapping {
            DecayMapping::Explicit { .. } => self.number("gamma")?.unwrap_or(0.0),
            DecayMapping::ZeroFieldMatched => self.req("gamma")?,
        };
        let p = self.base_params(gamma, self.number("omega_c")?.unwrap_or(f64::INFINITY))?;
        let mut bad = Vec::new();
        if !(p.e_a > p.e_b) {
            bad.push(format!(
                "degenerate levels: E_a ({}) must exceed E_b ({})",
                p.e_a, p.e_b
            ));
        }
        if !(p.period > 0.0) {
            bad.push(format!("T must be positive, got {}", p.period));
        }
        if p.e0 < 0.0 || gamma < 0.0 {
            bad.push("E0 and gamma must be non-negative".into());
        }
        if !bad.is_empty() {
            return Err(Error::InvalidParams(bad));
        }
        nh_from_master_with(&p, mapping).validate()
    }

    /// The `schedule` key (default linear) at period T.
    pub fn schedule(&self) -> Result<DriveSchedule> {
        let period = self.req("T")?;
        let kind = self
            .raw("schedule")
            .map(|(_, v)| v.as_str())
            .unwrap_or("linear");
        self.schedule_named(kind, period)
    }

    fn schedule_named(&self, kind: &str, period: f64) -> Result<DriveSchedule> {
        if !(period > 0.0) {
            return Err(Error::InvalidParams(vec![format!(
                "T must be positive, got {period}"
            )]));
        }
        match kind {
            "linear" => Ok(DriveSchedule::linear(period)),
            "smooth-sine" => Ok(DriveSchedule::smooth_sine(period)),
            "table" => {
                let (_, path) = self
                    .raw("schedule_table")
                    .ok_or_else(|| Error::MissingKey("schedule_table".into()))?;
                let path = match &self.base {
                    Some(b) if Path::new(path).is_relative() => b.join(path),
                    _ => PathBuf::from(path),
                };
                let s = DriveSchedule::load_table(&path)?;
                if (s.period() - period).abs() > 1e-9 * period {
                    return Err(Error::InvalidSchedule(format!(
                        "table ends at t = {} but T = {period}",
                        s.period()
                    )));
                }
                Ok(s.with_period(period))
            }
            other => Err(Error::InvalidSchedule(format!(
                "schedule must be linear, smooth-sine or table, got {other:?}"
            ))),
        }
    }

    /// Second reparametrization arm: `schedule_b`, defaulting to whichever
    /// of linear / smooth-sine `schedule` is not.
    pub fn schedule_b(&self) -> Result<DriveSchedule> {
        let period = self.req("T")?;
        let kind = match self.raw("schedule_b") {
            Some((_, v)) => v.as_str(),
            None => match self.raw("schedule").map(|(_, v)| v.as_str()) {
                Some("smooth-sine") => "linear",
                _ => "smooth-sine",
            },
        };
        self.schedule_named(kind, period)
    }

    pub fn rho0(&self) -> Result<DensityMatrix> {
        let aa = self.number("rho_aa0")?.unwrap_or(1.0);
        let re = self.number("re_rho_ab0")?.unwrap_or(0.0);
        let im = self.number("im_rho_ab0")?.unwrap_or(0.0);
        DensityMatrix::physical(aa, Complex64::new(re, im), crate::me::PHYSICALITY_TOL)
    }

    /// `steps`, or 20 per unit time.
    pub fn steps(&self) -> Result<usize> {
        match self.raw("steps") {
            Some((line, v)) => v.parse::<usize>().map_err(|_| Error::Parse {
                line: *line,
                reason: format!("steps: not a positive integer: {v:?}"),
            }),
            None => Ok((DEFAULT_STEPS_PER_TIME * self.req("T")?).ceil() as usize),
        }
    }

    /// Steps for a master-track run: `steps` if given, else the default
    /// raised to the solver minimum.
    pub fn me_steps(&self, model: &MasterModel, form: MeForm) -> Result<usize> {
        if self.has("steps") {
            self.steps()
        } else {
            Ok(self.steps()?.max(model.required_steps(form)))
        }
    }

    pub fn nh_steps(&self, p: &NhParams, period: f64) -> Result<usize> {
        if self.has("steps") {
            self.steps()
        } else {
            Ok(self.steps()?.max(nh::required_steps(p, period)))
        }
    }

    pub fn t_list(&self) -> Result<Vec<f64>> {
        let (line, v) = self
            .raw("T_list")
            .ok_or_else(|| Error::MissingKey("T_list".into()))?;
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                parse_number(s).ok_or_else(|| Error::Parse {
                    line: *line,
                    reason: format!("T_list: not a number: {s:?}"),
                })
            })
            .collect()
    }

    pub fn track(&self) -> Result<Track> {
        Ok(self.parsed("track")?.unwrap_or(Track::Master))
    }

    pub fn form(&self) -> Result<MeForm> {
        Ok(self.parsed("form")?.unwrap_or(MeForm::Reduced))
    }

    pub fn tolerance(&self) -> Result<Option<f64>> {
        self.number("tolerance")
    }

    pub fn detuning_mode(&self) -> Result<DetuningMode> {
        match self.raw("detuning_mode").map(|(_, v)| v.as_str()) {
            None | Some("fixed") => Ok(DetuningMode::Fixed),
            Some("per_t") => Ok(DetuningMode::PerT),
            Some(other) => Err(Error::InvalidParams(vec![format!(
                "detuning_mode must be fixed or per_t, got {other:?}"
            )])),
        }
    }

    /// `nh_initial`, or `default` when absent.
    pub fn nh_initial(&self, default: NhInitial) -> Result<NhInitial> {
        match self.raw("nh_initial").map(|(_, v)| v.as_str()) {
            None => Ok(default),
            Some("state") => Ok(NhInitial::State),
            Some("adiabatic_minus") => Ok(NhInitial::AdiabaticMinus),
            Some("adiabatic_plus") => Ok(NhInitial::AdiabaticPlus),
            Some(other) => Err(Error::InvalidParams(vec![format!(
                "nh_initial must be state, adiabatic_minus or adiabatic_plus, got {other:?}"
            )])),
        }
    }

    pub fn observable(&self) -> Result<Observable> {
        Ok(self.parsed("observable")?.unwrap_or(Observable::LogRhoAa))
    }

    /// Parameters for either track: the non-hermitian track does not need
    /// omega_c.
    fn track_params(&self, track: Track) -> Result<ModelParams> {
        match track {
            Track::Master => self.model_params(),
            Track::NonHermitian => {
                self.nh_params()?;
                let gamma = self.number("gamma")?.unwrap_or(0.0);
                let omega_c = self.number("omega_c")?.unwrap_or(f64::INFINITY);
                self.base_params(gamma, omega_c)
            }
        }
    }

    pub fn sweep_spec(&self, exec: Exec) -> Result<SweepSpec> {
        let track = self.track()?;
        let params = self.track_params(track)?;
        Ok(SweepSpec {
            track,
            params,
            decay: self.decay_mapping()?,
            schedule: self.schedule()?,
            t_list: self.t_list()?,
            detuning_mode: self.detuning_mode()?,
            steps: self.steps()?,
            rho0: self.rho0()?,
            form: self.form()?,
            nh_initial: self.nh_initial(NhInitial::AdiabaticMinus)?,
            exec,
        })
    }

    pub fn reparam_spec(&self, exec: Exec) -> Result<ReparamSpec> {
        let observable = self.observable()?;
        let track = match observable {
            Observable::LogRhoAa | Observable::GTildeAbs => Track::Master,
            Observable::ImBetaMinus | Observable::LogCaSquared => Track::NonHermitian,
        };
        let params = self.track_params(track)?;
        let form = self.form()?;
        let rho0 = self.rho0()?;
        let schedule_a = self.schedule()?;
        let decay = self.decay_mapping()?;
        let steps = match (observable, self.has("steps")) {
            (_, true) => self.steps()?,
            (Observable::LogRhoAa, false) => self
                .steps()?
                .max(MasterModel::new(&params, &schedule_a, rho0)?.required_steps(form)),
            (_, false) => {
                let nhp = nh_from_master_with(&params, decay);
                self.steps()?.max(nh::required_steps(&nhp, params.period))
            }
        };
        Ok(ReparamSpec {
            params,
            decay,
            schedule_b: self.schedule_b()?,
            schedule_a,
            observable,
            rho0,
            form,
            steps,
            nh_initial: self.nh_initial(NhInitial::State)?,
            tolerance: self.tolerance()?,
            exec,
        })
    }

    pub fn compare_spec(&self) -> Result<CompareSpec> {
        let params = self.model_params()?;
        let schedule = self.schedule()?;
        let rho0 = self.rho0()?;
        let form = self.form()?;
        let decay = self.decay_mapping()?;
        let steps = if self.has("steps") {
            self.steps()?
        } else {
            let nhp = nh_from_master_with(&params, decay);
            self.steps()?
                .max(MasterModel::new(&params, &schedule, rho0)?.required_steps(form))
                .max(nh::required_steps(&nhp, params.period))
        };
        Ok(CompareSpec {
            params,
            decay,
            schedule,
            rho0,
            form,
            steps,
        })
    }
}

/// A float, optionally a multiple of π (`pi`, `2pi`, `2*pi`, `-0.5*pi`).
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.strip_suffix("pi") {
        Some(head) => {
            let head = head.trim_end().trim_end_matches('*').trim_end();
            let k = match head {
                "" | "+" => 1.0,
                "-" => -1.0,
                h => h.parse::<f64>().ok()?,
            };
            k * PI
        }
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}
