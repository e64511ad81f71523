//! Simulation of a one-dimensional particle passing through two clusters of
//! two-level spin detectors.
//!
//! The particle couples to each detector through a point interaction that can
//! flip that detector's spin. The joint state is a stack of `2^N` particle
//! wavefunctions, one per spin configuration, evolved with a Crank-Nicolson
//! scheme. The quantities of interest are the probabilities of the spin
//! configurations at the final time, grouped into no flip, one flip, a track
//! of flips on one side, and flips on both sides.
//!
//! ```
//! use cloudchamber::{BoundaryMode, Preset, RunOptions, Simulation, SolveConfig};
//!
//! let mut scenario = Preset::new(0.1, 2).with_rho(100.0).scenario()?;
//! // A shortened run keeps the example quick.
//! scenario.time = cloudchamber::TimeGrid::new(0.005, 20)?;
//! let sim = Simulation::new(scenario, BoundaryMode::Verbatim, SolveConfig::default())?;
//! let record = sim.run(RunOptions::default(), &mut [])?;
//! assert!((record.final_classes().total - 1.0).abs() < 1e-9);
//! # Ok::<(), cloudchamber::Error>(())
//! ```

pub mod assembly;
pub mod error;
mod linalg;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod simulation;
pub mod solver;
pub mod spinspace;
pub mod state;
pub mod validation;

pub use assembly::{
    apply_h, assemble_cn, assemble_hamiltonian, BoundaryMode, CnSystem, Coupling,
    DiscreteHamiltonian,
};
pub use error::{Error, Result};
pub use model::{
    build_grid, initial_state, place_detectors, preset_from_epsilon, validate_regime,
    CouplingFactor, DetectorLayout, Geometry, Grid, LayoutRule, PhysicalParams, Preset,
    RegimeWarning, Scenario, TimeGrid,
};
pub use observables::{
    arrival_time, channel_probs, class_probs, energy, ChannelProbabilities, ClassProbabilities,
};
pub use simulation::Simulation;
pub use solver::{
    run, solve_linear, step, Observer, Propagator, RunOptions, RunRecord, SolveConfig, SolveMethod,
    SolveStats, StepRecord,
};
pub use spinspace::{ConfigClass, Side, SideAssignment, SpinConfig};
pub use state::StateVector;
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spin_space.md")]
    mod spin_space {}
    #[doc = include_str!("../../../book/src/discretization.md")]
    mod discretization {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducing.md")]
    mod reproducing {}
}

pub use validation::{
    oracle_agreement, oracle_instance, run_validation, CheckResult, OracleAgreement,
    OracleInstance, Report, ValidationOptions, ORACLE_EPSILON,
};
