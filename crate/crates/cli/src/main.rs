//! `twolevel`: run two-level atom experiments from a flat config file.
//!
//! Every subcommand writes a CSV table to `--out` (standard output when
//! omitted) and, with `--summary`, a JSON run summary. Exit status is 0 on
//! success, 1 for configuration or validation errors and 2 for numerical
//! failures. Errors are reported on standard error as a single line
//! `error kind=<kind> reason=<message>`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use twolevel_core::closed::{closed_rho_aa, closed_rho_ab};
use twolevel_core::me::{evolve_model, GeneratorConvention, MasterModel, MeForm};
use twolevel_core::nh::{gw_survival_components, nh_evolve};
use twolevel_core::report::{Cell, Table};
use twolevel_core::{
    compare_tracks, gw_phase, reparam_test, sweep_t, Error, Exec, ExperimentConfig, Result,
};

#[derive(Parser)]
#[command(
    name = "twolevel",
    version,
    about = "Driven dissipative two-level atom experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Amplitudes under the non-hermitian Hamiltonian.
    NhEvolve(Common),
    /// Density matrix under the master equation.
    MeEvolve(Common),
    /// Complex adiabatic phase of the decaying branch.
    GwPhase(Common),
    /// Closed-form ρ(T) against direct integration.
    ClosedForm(Common),
    /// Log-magnitude over a list of periods, with a linear fit in T.
    SweepT(Common),
    /// One observable under two schedules with the same endpoints.
    Reparam(Common),
    /// |ρ_aa(t) − |C_a(t)|²| between the two tracks.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// CSV destination; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// JSON run summary destination.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    /// non-hermitian | master
    #[arg(long)]
    track: Option<String>,
    /// linear | smooth-sine | table
    #[arg(long)]
    schedule: Option<String>,
    /// Run sweep points and schedule arms one after another.
    #[arg(long)]
    sequential: bool,
}

struct Output {
    table: Table,
    summary: Value,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error kind=usage reason={first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error kind={} reason={}",
                e.kind(),
                one_line(&e.to_string())
            );
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<()> {
    let (name, common) = match &cli.command {
        Command::NhEvolve(c) => ("nh-evolve", c),
        Command::MeEvolve(c) => ("me-evolve", c),
        Command::GwPhase(c) => ("gw-phase", c),
        Command::ClosedForm(c) => ("closed-form", c),
        Command::SweepT(c) => ("sweep-t", c),
        Command::Reparam(c) => ("reparam", c),
        Command::Compare(c) => ("compare", c),
    };
    let cfg = load(common)?;
    let exec = if common.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let out = match cli.command {
        Command::NhEvolve(_) => nh_evolve_cmd(&cfg)?,
        Command::MeEvolve(_) => me_evolve_cmd(&cfg)?,
        Command::GwPhase(_) => gw_phase_cmd(&cfg)?,
        Command::ClosedForm(_) => closed_form_cmd(&cfg)?,
        Command::SweepT(_) => sweep_cmd(&cfg, exec)?,
        Command::Reparam(_) => reparam_cmd(&cfg, exec)?,
        Command::Compare(_) => compare_cmd(&cfg)?,
    };
    write_out(common.out.as_deref(), out.table.to_csv().as_bytes())?;
    if let Some(path) = &common.summary {
        let mut summary = json!({
            "command": name,
            "version": env!("CARGO_PKG_VERSION"),
            "config": common.config.display().to_string(),
        });
        if let (Value::Object(m), Value::Object(extra)) = (&mut summary, out.summary) {
            m.extend(extra);
        }
        let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn load(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(n) = c.steps {
        cfg.set("steps", &n.to_string())?;
    }
    if let Some(t) = &c.track {
        cfg.set("track", t)?;
    }
    if let Some(s) = &c.schedule {
        cfg.set("schedule", s)?;
    }
    Ok(cfg)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn nh_evolve_cmd(cfg: &ExperimentConfig) -> Result<Output> {
    let p = cfg.nh_params()?;
    let s = cfg.schedule()?;
    let c0 = twolevel_core::AmplitudePair::from_pure(&cfg.rho0()?, 1e-9)?;
    let steps = cfg.nh_steps(&p, s.period())?;
    let tr = nh_evolve(&p, &s, c0, steps)?;
    let mut table = Table::new(["t", "re_c_a", "im_c_a", "re_c_b", "im_c_b", "norm"]);
    for (t, c) in tr.times.iter().zip(&tr.states) {
        table.push(vec![
            (*t).into(),
            c.c_a.re.into(),
            c.c_a.im.into(),
            c.c_b.re.into(),
            c.c_b.im.into(),
            c.norm_sqr().into(),
        ]);
    }
    let last = tr.last();
    let summary = json!({
        "params": to_value(&p),
        "schedule": s.to_string(),
        "steps": steps,
        "final_population_a": last.population_a(),
        "final_norm": last.norm_sqr(),
        "max_norm_increase": tr.max_norm_increase(),
        "warnings": [],
    });
    Ok(Output { table, summary })
}

fn me_evolve_cmd(cfg: &ExperimentConfig) -> Result<Output> {
    let p = cfg.model_params()?;
    let s = cfg.schedule()?;
    let form = cfg.form()?;
    let model = MasterModel::new(&p, &s, cfg.rho0()?)?;
    let steps = cfg.me_steps(&model, form)?;
    let tr = evolve_model(&model, steps, form)?;
    let mut table = Table::new(["t", "rho_aa", "rho_bb", "re_rho_ab", "im_rho_ab"]);
    for (t, r) in tr.times.iter().zip(&tr.states) {
        table.push(vec![
            (*t).into(),
            r.rho_aa.into(),
            r.rho_bb().into(),
            r.rho_ab.re.into(),
            r.rho_ab.im.into(),
        ]);
    }
    let summary = json!({
        "params": to_value(&p),
        "omega_plus": model.omega_plus,
        "schedule": s.to_string(),
        "form": form.name(),
        "steps": steps,
        "final": to_value(tr.last()),
        "min_eigenvalue": tr.min_eigenvalue,
        "max_drift": tr.max_drift,
        "warnings": tr.warnings,
    });
    Ok(Output { table, summary })
}

fn gw_phase_cmd(cfg: &ExperimentConfig) -> Result<Output> {
    let p = cfg.nh_params()?;
    let g = gw_phase(&p)?;
    let mut table = Table::new([
        "re_beta_minus",
        "im_beta_minus",
        "re_cos_theta0",
        "im_cos_theta0",
        "geometric_decay",
    ]);
    table.push(vec![
        g.beta_minus.re.into(),
        g.beta_minus.im.into(),
        g.cos_theta0.re.into(),
        g.cos_theta0.im.into(),
        g.geometric_decay.into(),
    ]);
    let period = cfg
        .model_params()
        .map(|m| m.period)
        .or_else(|_| cfg.schedule().map(|s| s.period()));
    let survival = match period {
        Ok(t) => gw_survival_components(&p, t)
            .map(|c| to_value(&c))
            .unwrap_or(Value::Null),
        Err(_) => Value::Null,
    };
    let summary = json!({
        "params": to_value(&p),
        "gw_phase": to_value(&g),
        "survival_components": survival,
        "warnings": [],
    });
    Ok(Output { table, summary })
}

fn closed_form_cmd(cfg: &ExperimentConfig) -> Result<Output> {
    let p = cfg.model_params()?;
    let s = cfg.schedule()?;
    let rho0 = cfg.rho0()?;
    let model = MasterModel::new(&p, &s, rho0)?;
    let steps = cfg.me_steps(&model, MeForm::Scaled)?;
    let quad_steps = cfg.steps()?.clamp(16, 4096);
    let direct = evolve_model(&model, steps, MeForm::Scaled)?;
    let d = *direct.last();
    let aa = closed_rho_aa(&p, &s, rho0, quad_steps)?;
    let mut table = Table::new([
        "quantity",
        "convention",
        "re_closed",
        "im_closed",
        "re_direct",
        "im_direct",
        "deviation",
        "refinement_delta",
    ]);
    table.push(vec![
        "rho_aa".into(),
        "-".into(),
        aa.value.into(),
        0.0.into(),
        d.rho_aa.into(),
        0.0.into(),
        (aa.value - d.rho_aa).abs().into(),
        aa.delta.into(),
    ]);
    let mut conventions = serde_json::Map::new();
    for (label, conv) in [
        ("printed", GeneratorConvention::Printed),
        ("consistent", GeneratorConvention::Consistent),
    ] {
        let c = closed_rho_ab(&p, &s, rho0, conv, quad_steps)?;
        let dev = (c.value.rho_ab - d.rho_ab).norm();
        table.push(vec![
            "rho_ab".into(),
            label.into(),
            c.value.rho_ab.re.into(),
            c.value.rho_ab.im.into(),
            d.rho_ab.re.into(),
            d.rho_ab.im.into(),
            dev.into(),
            c.delta.into(),
        ]);
        conventions.insert(
            label.into(),
            json!({ "rho_ab": to_value(&c.value.rho_ab), "deviation": dev, "delta": c.delta, "steps": c.steps }),
        );
    }
    let summary = json!({
        "params": to_value(&p),
        "schedule": s.to_string(),
        "direct_steps": steps,
        "rho_aa": { "closed": aa.value, "direct": d.rho_aa, "deviation": (aa.value - d.rho_aa).abs(), "delta": aa.delta, "steps": aa.steps },
        "rho_ab": conventions,
        "warnings": direct.warnings,
    });
    Ok(Output { table, summary })
}

fn sweep_cmd(cfg: &ExperimentConfig, exec: Exec) -> Result<Output> {
    let spec = cfg.sweep_spec(exec)?;
    let r = sweep_t(&spec)?;
    let mut table = Table::new(["T", "log_magnitude", "detuning", "steps"]);
    for s in &r.per_t_samples {
        table.push(vec![
            s.period.into(),
            s.log_magnitude.into(),
            s.detuning.into(),
            Cell::from(s.steps),
        ]);
    }
    let summary = json!({
        "params": to_value(&spec.params),
        "schedule": spec.schedule.name(),
        "form": spec.form.name(),
        "report": to_value(&r),
        "warnings": r.warnings,
    });
    Ok(Output { table, summary })
}

fn reparam_cmd(cfg: &ExperimentConfig, exec: Exec) -> Result<Output> {
    let spec = cfg.reparam_spec(exec)?;
    let r = reparam_test(&spec)?;
    let mut table = Table::new(["schedule", "observable", "value"]);
    table.push(vec![
        r.schedule_a.as_str().into(),
        r.observable.name().into(),
        r.value_a.into(),
    ]);
    table.push(vec![
        r.schedule_b.as_str().into(),
        r.observable.name().into(),
        r.value_b.into(),
    ]);
    let summary = json!({
        "params": to_value(&spec.params),
        "steps": spec.steps,
        "report": to_value(&r),
        "verdict": r.verdict.to_string(),
        "warnings": [],
    });
    Ok(Output { table, summary })
}

fn compare_cmd(cfg: &ExperimentConfig) -> Result<Output> {
    let spec = cfg.compare_spec()?;
    let r = compare_tracks(&spec)?;
    let mut table = Table::new(["t", "rho_aa", "c_a_squared", "deviation"]);
    for i in 0..r.times.len() {
        table.push(vec![
            r.times[i].into(),
            r.rho_aa[i].into(),
            r.ca_squared[i].into(),
            r.deviation[i].into(),
        ]);
    }
    let summary = json!({
        "params": to_value(&spec.params),
        "form": spec.form.name(),
        "report": to_value(&r),
        "warnings": r.warnings,
    });
    Ok(Output { table, summary })
}
