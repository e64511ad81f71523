//! Time stepping: solves `A psi_next = B psi` once per step.
//!
//! `A` is a block-diagonal matrix of `M` tridiagonal channel blocks plus
//! cross-channel entries confined to detector sites. Both strategies
//! eliminate the tridiagonal blocks with the Thomas algorithm and reduce each
//! solve to an interface system on the `M * N` detector-site unknowns:
//!
//! ```text
//! (I + G U) z = (T^{-1} b)|_sites,    x = T^{-1} (b - U z)
//! ```
//!
//! where `T` is the block-diagonal part, `U` the cross-channel part and `G`
//! the restriction of `T^{-1}` to detector sites. Blocks differ only by the
//! spin energy shift, so `T` has just `N + 1` distinct blocks, one per number
//! of flipped spins.
//!
//! [`SolveMethod::Direct`] factors the interface matrix once per run.
//! [`SolveMethod::Iterative`] runs GMRES on it instead, which is the
//! block-Jacobi (tridiagonal) preconditioned Krylov method restricted to the
//! interface and scales to larger detector counts.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::assembly::CnSystem;
use crate::error::{Error, Result};
use crate::linalg::{gmres, norm, DenseLu, Tridiagonal};
use crate::observables::{
    channel_probs, class_probs, energy, ChannelProbabilities, ClassProbabilities,
};
use crate::spinspace::SideAssignment;
use crate::state::StateVector;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SolveMethod {
    #[default]
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub method: SolveMethod,
    /// Bound on `|A x - b| / |b|`.
    pub tolerance: f64,
    /// Iteration budget per linear solve (GMRES iterations for the iterative
    /// method, refinement sweeps for the direct one).
    pub max_iterations: usize,
    /// Largest interface size the direct method will factor densely.
    pub direct_limit: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            method: SolveMethod::Direct,
            tolerance: 1e-12,
            max_iterations: 200,
            direct_limit: 4096,
        }
    }
}

impl SolveConfig {
    pub fn iterative() -> Self {
        SolveConfig {
            method: SolveMethod::Iterative,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::parameter(
                "tolerance",
                format!("{} must lie in (0, 1e-6]", self.tolerance),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::parameter("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

const GMRES_RESTART: usize = 40;

enum InterfaceSolver {
    /// No cross-channel entries: `A` is block diagonal.
    None,
    Dense(DenseLu),
    Krylov,
}

/// A Crank-Nicolson system prepared for repeated solves.
pub struct Propagator {
    system: CnSystem,
    config: SolveConfig,
    /// One factored block per number of flipped spins.
    blocks: Vec<Tridiagonal>,
    /// `green[c][k * n + j]`: entry at site `k` of `T_c^{-1} e_{site j}`.
    green: Vec<Vec<C>>,
    /// Scale of the cross-channel entries of `A`: `A[(s,i_j),(s^j,i_j)] = coupling * spin_j(s)`.
    coupling: f64,
    interface: InterfaceSolver,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("dim", &self.system.dim())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

/// Diagnostics of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

impl Propagator {
    pub fn new(system: CnSystem, config: SolveConfig) -> Result<Self> {
        config.validate()?;
        let h = system.hamiltonian();
        let n = h.num_spins();
        let nx = h.nx();
        let sites = h.sites().to_vec();
        let z = C::new(0.0, system.tau());
        let (lower, diag, upper) = h.shared_bands();
        let lower: Vec<C> = lower.iter().map(|&v| z * v).collect();
        let upper: Vec<C> = upper.iter().map(|&v| z * v).collect();

        let mut blocks = Vec::with_capacity(n + 1);
        let mut green = Vec::with_capacity(n + 1);
        for flips in 0..=n {
            // any channel with `flips` up spins has the same shift
            let shift = h.channel_shift((1usize << flips) - 1);
            let d: Vec<C> = diag
                .iter()
                .map(|&v| C::new(1.0, 0.0) + z * (v + shift))
                .collect();
            let t = Tridiagonal::factor(&lower, &d, &upper)?;
            let mut g = vec![ZERO; n * n];
            let mut col = vec![ZERO; nx];
            for (j, &sj) in sites.iter().enumerate() {
                col.iter_mut().for_each(|v| *v = ZERO);
                col[sj] = C::new(1.0, 0.0);
                t.solve_in_place(&mut col);
                for (k, &sk) in sites.iter().enumerate() {
                    g[k * n + j] = col[sk];
                }
            }
            blocks.push(t);
            green.push(g);
        }

        // i tau * (-i spin f) = tau f spin
        let coupling = system.tau() * h.flip_strength();
        let mut prop = Propagator {
            system,
            config,
            blocks,
            green,
            coupling,
            interface: InterfaceSolver::None,
        };
        if coupling != 0.0 && n > 0 {
            prop.interface = match config.method {
                SolveMethod::Direct => {
                    let size = prop.interface_len();
                    if size > config.direct_limit {
                        return Err(Error::Configuration(format!(
                            "interface system of size {size} exceeds the direct-solver limit {}; use the iterative method",
                            config.direct_limit
                        )));
                    }
                    InterfaceSolver::Dense(DenseLu::factor(size, prop.dense_interface())?)
                }
                SolveMethod::Iterative => InterfaceSolver::Krylov,
            };
        }
        Ok(prop)
    }

    pub fn system(&self) -> &CnSystem {
        &self.system
    }

    pub fn config(&self) -> &SolveConfig {
        &self.config
    }

    fn num_spins(&self) -> usize {
        self.system.hamiltonian().num_spins()
    }

    fn channels(&self) -> usize {
        self.system.hamiltonian().channels()
    }

    fn interface_len(&self) -> usize {
        self.channels() * self.num_spins()
    }

    /// True when `dt` exceeds `2 hbar / |H|` (Gershgorin estimate). The
    /// scheme stays stable, but the phase error is large.
    pub fn accuracy_warning(&self) -> Option<String> {
        let h = self.system.hamiltonian();
        let (lower, diag, upper) = h.shared_bands();
        let shift = h.channel_shift(self.channels() - 1).abs();
        let band = (0..h.nx())
            .map(|i| diag[i].abs() + lower[i].abs() + upper[i].abs())
            .fold(0.0, f64::max);
        let bound = band + shift + h.flip_strength();
        let limit = 2.0 * self.system.hbar() / bound;
        (self.system.dt().abs() > limit).then(|| {
            format!(
                "time step {:.3e} exceeds 2*hbar/|H| ~ {:.3e}; Crank-Nicolson stays stable but loses accuracy",
                self.system.dt(),
                limit
            )
        })
    }

    fn flips(channel: usize) -> usize {
        channel.count_ones() as usize
    }

    /// Cross-channel entry of `A` from `(channel, site j)` to `(channel ^ 1<<j, site j)`.
    fn cross(&self, channel: usize, j: usize) -> f64 {
        if channel >> j & 1 == 1 {
            self.coupling
        } else {
            -self.coupling
        }
    }

    fn dense_interface(&self) -> Vec<C> {
        let n = self.num_spins();
        let size = self.interface_len();
        let mut r = vec![ZERO; size * size];
        for s in 0..self.channels() {
            let g = &self.green[Self::flips(s)];
            for k in 0..n {
                let row = s * n + k;
                r[row * size + row] += C::new(1.0, 0.0);
                for j in 0..n {
                    let col = (s ^ 1 << j) * n + j;
                    r[row * size + col] += g[k * n + j] * self.cross(s, j);
                }
            }
        }
        r
    }

    /// `(I + G U) z`.
    fn apply_interface(&self, z: &[C], out: &mut [C]) {
        let n = self.num_spins();
        out.par_chunks_mut(n).enumerate().for_each(|(s, out_s)| {
            let g = &self.green[Self::flips(s)];
            let uz: Vec<C> = (0..n)
                .map(|j| z[(s ^ 1 << j) * n + j] * self.cross(s, j))
                .collect();
            for k in 0..n {
                let gk = &g[k * n..(k + 1) * n];
                out_s[k] = z[s * n + k] + gk.iter().zip(&uz).map(|(a, b)| a * b).sum::<C>();
            }
        });
    }

    fn block_solve(&self, x: &mut [C]) {
        let nx = self.system.hamiltonian().nx();
        x.par_chunks_mut(nx).enumerate().for_each(|(s, xs)| {
            self.blocks[Self::flips(s)].solve_in_place(xs);
        });
    }

    /// One pass of the interface reduction; returns the interface iterations.
    fn reduced_solve(&self, b: &[C], x: &mut [C]) -> Result<usize> {
        x.copy_from_slice(b);
        self.block_solve(x);
        let h = self.system.hamiltonian();
        let nx = h.nx();
        let n = h.num_spins();
        let sites = h.sites();
        let (z, iterations) = match &self.interface {
            InterfaceSolver::None => return Ok(0),
            InterfaceSolver::Dense(lu) => {
                let g: Vec<C> = (0..self.interface_len())
                    .map(|q| x[(q / n) * nx + sites[q % n]])
                    .collect();
                (lu.solve(&g), 0)
            }
            InterfaceSolver::Krylov => {
                let g: Vec<C> = (0..self.interface_len())
                    .map(|q| x[(q / n) * nx + sites[q % n]])
                    .collect();
                let mut z = g.clone();
                let conv = gmres(
                    |v, out| self.apply_interface(v, out),
                    &g,
                    &mut z,
                    self.config.tolerance * 0.1,
                    GMRES_RESTART,
                    self.config.max_iterations,
                );
                if !conv.converged {
                    return Err(Error::SolverFailure {
                        iterations: conv.iterations,
                        residual: conv.residual,
                    });
                }
                (z, conv.iterations)
            }
        };
        x.copy_from_slice(b);
        for s in 0..self.channels() {
            for (j, &site) in sites.iter().enumerate() {
                x[s * nx + site] -= z[(s ^ 1 << j) * n + j] * self.cross(s, j);
            }
        }
        self.block_solve(x);
        Ok(iterations)
    }

    /// Solves `A x = b` to the configured relative residual.
    pub fn solve(&self, b: &[C]) -> Result<(Vec<C>, SolveStats)> {
        let dim = self.system.dim();
        if b.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        let bnorm = norm(b);
        let mut x = vec![ZERO; dim];
        if bnorm == 0.0 {
            return Ok((
                x,
                SolveStats {
                    iterations: 0,
                    residual: 0.0,
                },
            ));
        }
        let mut iterations = self.reduced_solve(b, &mut x)?;
        let mut ax = vec![ZERO; dim];
        let mut correction = vec![ZERO; dim];
        let mut sweeps = 0;
        loop {
            self.system.apply_shifted(1.0, &x, &mut ax);
            let r: Vec<C> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let residual = norm(&r) / bnorm;
            if !residual.is_finite() {
                return Err(Error::NonFinite("solution".into()));
            }
            if residual <= self.config.tolerance {
                return Ok((
                    x,
                    SolveStats {
                        iterations,
                        residual,
                    },
                ));
            }
            sweeps += 1;
            if sweeps > self.config.max_iterations.min(8) {
                return Err(Error::SolverFailure {
                    iterations: iterations + sweeps,
                    residual,
                });
            }
            iterations += self.reduced_solve(&r, &mut correction)?;
            x.iter_mut().zip(&correction).for_each(|(x, c)| *x += c);
        }
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &StateVector) -> Result<StateVector> {
        self.system.hamiltonian().check_state(state)?;
        if !state.is_finite() {
            return Err(Error::NonFinite("input state".into()));
        }
        let mut rhs = vec![ZERO; state.len()];
        self.system.apply_shifted(-1.0, state.values(), &mut rhs);
        let (x, _) = self.solve(&rhs)?;
        let next = state.with_values(x)?;
        if !next.is_finite() {
            return Err(Error::NonFinite("advanced state".into()));
        }
        Ok(next)
    }
}

/// Solves `A x = rhs` for the left operator of `system`. Prepares a fresh
/// [`Propagator`]; reuse one for repeated solves.
pub fn solve_linear(system: &CnSystem, rhs: &[C], config: &SolveConfig) -> Result<Vec<C>> {
    Propagator::new(system.clone(), *config)?
        .solve(rhs)
        .map(|(x, _)| x)
}

/// One Crank-Nicolson step. Prepares a fresh [`Propagator`].
pub fn step(system: &CnSystem, state: &StateVector, config: &SolveConfig) -> Result<StateVector> {
    Propagator::new(system.clone(), *config)?.step(state)
}

/// Receives the state after every step. Must not retain the reference.
pub trait Observer {
    fn observe(&mut self, step: usize, t: f64, state: &StateVector);
}

impl<F> Observer for F
where
    F: FnMut(usize, f64, &StateVector),
{
    fn observe(&mut self, step: usize, t: f64, state: &StateVector) {
        self(step, t, state)
    }
}

/// Scalars recorded at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub norm2: f64,
    pub energy: f64,
    pub classes: ClassProbabilities,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// One entry per time level, `t_0` included.
    pub series: Vec<StepRecord>,
    pub final_state: StateVector,
    pub final_channels: ChannelProbabilities,
    /// `(step, t, state)`; always holds `t_0` and the final time.
    pub snapshots: Vec<(usize, f64, StateVector)>,
}

impl RunRecord {
    pub fn final_classes(&self) -> &ClassProbabilities {
        &self.series.last().expect("series holds t_0").classes
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.series[0].norm2;
        self.series
            .iter()
            .map(|r| (r.norm2 - n0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.series[0].energy;
        self.series
            .iter()
            .map(|r| (r.energy - e0).abs() / e0.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep the full state every `stride` steps in addition to the ends.
    pub snapshot_stride: Option<usize>,
}

/// Applies `steps` Crank-Nicolson steps to `initial`, recording norm, energy
/// and class probabilities at every time level.
pub fn run(
    propagator: &Propagator,
    sides: &SideAssignment,
    initial: StateVector,
    steps: usize,
    options: RunOptions,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord> {
    if steps == 0 {
        return Err(Error::parameter("steps", "must be at least 1"));
    }
    let h = propagator.system().hamiltonian();
    let dt = propagator.system().dt();
    let record = |k: usize, t: f64, state: &StateVector| -> Result<StepRecord> {
        Ok(StepRecord {
            step: k,
            t,
            norm2: state.norm2(),
            energy: energy(state, h)?,
            classes: class_probs(&channel_probs(state, t), sides),
        })
    };
    let mut series = Vec::with_capacity(steps + 1);
    series.push(record(0, 0.0, &initial)?);
    let mut snapshots = vec![(0, 0.0, initial.clone())];
    let mut state = initial;
    for k in 1..=steps {
        state = propagator.step(&state).map_err(|e| Error::Step {
            step: k,
            source: Box::new(e),
        })?;
        let t = k as f64 * dt;
        for obs in observers.iter_mut() {
            obs.observe(k, t, &state);
        }
        series.push(record(k, t, &state)?);
        let keep = options.snapshot_stride.is_some_and(|s| s > 0 && k % s == 0);
        if keep || k == steps {
            snapshots.push((k, t, state.clone()));
        }
    }
    let t_final = steps as f64 * dt;
    Ok(RunRecord {
        series,
        final_channels: channel_probs(&state, t_final),
        final_state: state,
        snapshots,
    })
}
