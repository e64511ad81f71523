//! Wires a [`Scenario`] into a ready-to-run propagator.

use std::sync::Arc;

use crate::assembly::{assemble_cn, assemble_hamiltonian, BoundaryMode, DiscreteHamiltonian};
use crate::error::Result;
use crate::model::{validate_regime, DetectorLayout, Scenario};
use crate::solver::{run, Observer, Propagator, RunOptions, RunRecord, SolveConfig};

pub struct Simulation {
    scenario: Scenario,
    layout: DetectorLayout,
    hamiltonian: Arc<DiscreteHamiltonian>,
    propagator: Propagator,
}

impl Simulation {
    /// Places detectors, assembles `H` and the step operators, and factors
    /// the left operator.
    pub fn new(scenario: Scenario, boundary: BoundaryMode, solve: SolveConfig) -> Result<Self> {
        scenario.params.validate()?;
        let layout = scenario.layout()?;
        let hamiltonian = Arc::new(assemble_hamiltonian(
            &scenario.params,
            &scenario.grid,
            &layout,
            boundary,
        )?);
        let system = assemble_cn(
            Arc::clone(&hamiltonian),
            scenario.time.dt(),
            scenario.params.hbar,
        )?;
        let propagator = Propagator::new(system, solve)?;
        Ok(Simulation {
            scenario,
            layout,
            hamiltonian,
            propagator,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn layout(&self) -> &DetectorLayout {
        &self.layout
    }

    pub fn hamiltonian(&self) -> &DiscreteHamiltonian {
        &self.hamiltonian
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// Regime, layout-symmetry and step-size warnings, as messages.
    pub fn warnings(&self) -> Vec<String> {
        let mut out: Vec<String> = validate_regime(&self.scenario.params, &self.scenario.geometry)
            .iter()
            .map(ToString::to_string)
            .collect();
        if !self.layout.is_mirror_symmetric(self.scenario.grid.nx()) {
            out.push("detector layout is not mirror symmetric after snapping to the grid".into());
        }
        out.extend(self.propagator.accuracy_warning());
        out
    }

    /// Runs from the scenario's initial state to its final time.
    pub fn run(
        &self,
        options: RunOptions,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunRecord> {
        run(
            &self.propagator,
            self.layout.sides(),
            self.scenario.initial_state()?,
            self.scenario.time.steps(),
            options,
            observers,
        )
    }
}
