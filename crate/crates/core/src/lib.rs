//! Driven, dissipative two-level atom.
//!
//! Two descriptions of the same atom are provided. The non-hermitian track
//! evolves amplitudes under a complex effective Hamiltonian; the master
//! track evolves the density matrix with a vacuum bath. On top of both sit
//! closed-form evaluators, a time-ordered SU(2) propagator and the phase
//! experiments in [`analysis`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analysis;
pub mod closed;
pub mod config;
pub mod drive;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod me;
pub mod nh;
pub mod numerics;
pub mod params;
pub mod propagator;
pub mod report;
pub mod state;

pub use analysis::{
    compare_tracks, reparam_test, sweep_t, CompareReport, CompareSpec, Observable, PhaseReport,
    ReparamReport, ReparamSpec, SweepSpec, Track, Verdict,
};
pub use config::ExperimentConfig;
pub use drive::{DriveSchedule, QuadratureState};
pub use error::{Error, Result};
pub use exec::Exec;
pub use me::{me_evolve, MeForm, MeTrajectory};
pub use nh::{gw_phase, nh_evolve, GwPhase, NhTrajectory};
pub use params::{DecayMapping, ModelParams, NhParams};
pub use state::{AmplitudePair, DensityMatrix};
