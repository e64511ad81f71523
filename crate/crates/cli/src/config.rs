//! JSON run and sweep configuration, flag overrides, and resolution into a
//! [`Scenario`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cloudchamber::{
    build_grid, BoundaryMode, CouplingFactor, Geometry, LayoutRule, PhysicalParams, Preset,
    Scenario, SolveConfig, SolveMethod, TimeGrid,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Verbatim,
    Symmetrized,
}

impl From<Boundary> for BoundaryMode {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Verbatim => BoundaryMode::Verbatim,
            Boundary::Symmetrized => BoundaryMode::Symmetrized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    #[default]
    Alternating,
    Centered,
}

impl From<Layout> for LayoutRule {
    fn from(l: Layout) -> Self {
        match l {
            Layout::Alternating => LayoutRule::Alternating,
            Layout::Centered => LayoutRule::Centered,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub method: Method,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let d = SolveConfig::default();
        SolverOptions {
            method: Method::Direct,
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
        }
    }
}

impl SolverOptions {
    pub fn to_solve_config(self) -> SolveConfig {
        SolveConfig {
            method: match self.method {
                Method::Direct => SolveMethod::Direct,
                Method::Iterative => SolveMethod::Iterative,
            },
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            ..SolveConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetConfig {
    pub epsilon: f64,
    pub num_spins: usize,
    /// Replaces the default `epsilon^-2`.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub kappa: Option<u8>,
    #[serde(default)]
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    pub hbar: f64,
    pub mass: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub p0: f64,
    pub sigma: f64,
    pub trunc_a: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "one")]
    pub kappa: u8,
}

fn one() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitConfig {
    pub params: ExplicitParams,
    pub half_length: f64,
    pub cluster_distance: f64,
    pub spacing: f64,
    pub num_spins: usize,
    #[serde(default)]
    pub layout: Layout,
    pub nx: usize,
    pub t_star: f64,
    pub steps: usize,
}

/// Contents of a `run` / `info` configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<PresetConfig>,
    #[serde(default)]
    pub explicit: Option<ExplicitConfig>,
    #[serde(default)]
    pub boundary_mode: Boundary,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub snapshot_stride: Option<usize>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub rho: Option<f64>,
    pub num_spins: Option<usize>,
    pub kappa: Option<u8>,
    pub boundary_mode: Option<Boundary>,
    pub solver: Option<Method>,
    pub out_dir: Option<PathBuf>,
}

/// Parses JSON, reporting the path of the offending key on error.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Config(inner.to_string())
        } else {
            CliError::Config(format!("at `{path}`: {inner}"))
        }
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_json(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn kappa(k: u8) -> Result<CouplingFactor> {
    CouplingFactor::from_value(k).map_err(CliError::from)
}

/// A fully resolved single run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub scenario: Scenario,
    pub epsilon: Option<f64>,
    pub boundary: Boundary,
    pub solver: SolverOptions,
    pub out_dir: PathBuf,
    pub snapshot_stride: Option<usize>,
}

impl RunConfig {
    pub fn resolve(mut self, o: &Overrides) -> Result<ResolvedRun> {
        let (scenario, epsilon) = match (&mut self.preset, &mut self.explicit) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "exactly one of `preset` and `explicit` may be given, found both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "exactly one of `preset` and `explicit` must be given, found neither".into(),
                ))
            }
            (Some(p), None) => {
                let mut preset = Preset::new(p.epsilon, o.num_spins.unwrap_or(p.num_spins))
                    .with_layout(p.layout.into());
                preset.rho = o.rho.or(p.rho);
                if let Some(k) = o.kappa.or(p.kappa) {
                    preset = preset.with_kappa(kappa(k)?);
                }
                (preset.scenario()?, Some(p.epsilon))
            }
            (None, Some(e)) => {
                let p = &e.params;
                let params = PhysicalParams {
                    hbar: p.hbar,
                    mass: p.mass,
                    alpha: p.alpha,
                    beta: p.beta,
                    rho: o.rho.unwrap_or(p.rho),
                    p0: p.p0,
                    sigma: p.sigma,
                    trunc_a: p.trunc_a,
                    x0: p.x0,
                    kappa: kappa(o.kappa.unwrap_or(p.kappa))?,
                };
                params.validate()?;
                let geometry = Geometry {
                    half_length: e.half_length,
                    cluster_distance: e.cluster_distance,
                    spacing: e.spacing,
                    num_spins: o.num_spins.unwrap_or(e.num_spins),
                    layout: e.layout.into(),
                };
                geometry.validate()?;
                let scenario = Scenario {
                    params,
                    geometry,
                    grid: build_grid(e.half_length, e.nx)?,
                    time: TimeGrid::new(e.t_star, e.steps)?,
                };
                (scenario, None)
            }
        };
        // Surface layout problems (collisions, boundary placement) now.
        scenario.layout()?;
        let mut solver = self.solver;
        if let Some(m) = o.solver {
            solver.method = m;
        }
        solver.to_solve_config().validate()?;
        if self.snapshot_stride == Some(0) {
            return Err(CliError::Config(
                "`snapshot_stride` must be at least 1".into(),
            ));
        }
        Ok(ResolvedRun {
            scenario,
            epsilon,
            boundary: o.boundary_mode.unwrap_or(self.boundary_mode),
            solver,
            out_dir: o.out_dir.clone().unwrap_or(self.out_dir),
            snapshot_stride: self.snapshot_stride,
        })
    }
}

/// Contents of a `sweep` configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilon: f64,
    pub num_spins: Vec<usize>,
    pub rho: Vec<f64>,
    #[serde(default)]
    pub kappa: Option<u8>,
    #[serde(default)]
    pub layout: Layout,
    #[serde(default)]
    pub boundary_mode: Boundary,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Worker threads; defaults to the number of available cores.
    #[serde(default)]
    pub parallelism: Option<usize>,
    /// Unchanged-probability drop that defines the arrival time.
    #[serde(default = "default_drop")]
    pub arrival_drop: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_drop() -> f64 {
    0.01
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_spins.is_empty() {
            return Err(CliError::Config("`num_spins` list is empty".into()));
        }
        if self.rho.is_empty() {
            return Err(CliError::Config("`rho` list is empty".into()));
        }
        if let Some(n) = self.num_spins.iter().find(|&&n| n == 0 || n % 2 != 0) {
            return Err(CliError::Config(format!(
                "`num_spins` entries must be even and positive, found {n}"
            )));
        }
        if let Some(r) = self.rho.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(CliError::Config(format!(
                "`rho` entries must be finite and >= 0, found {r}"
            )));
        }
        if self.parallelism == Some(0) {
            return Err(CliError::Config("`parallelism` must be at least 1".into()));
        }
        if !(self.arrival_drop > 0.0 && self.arrival_drop < 1.0) {
            return Err(CliError::Config(format!(
                "`arrival_drop` must lie in (0, 1), found {}",
                self.arrival_drop
            )));
        }
        self.solver.to_solve_config().validate()?;
        Ok(())
    }

    /// The single-run configuration for one `(N, rho)` point.
    pub fn point(&self, n: usize, rho: f64, out_dir: PathBuf) -> RunConfig {
        RunConfig {
            preset: Some(PresetConfig {
                epsilon: self.epsilon,
                num_spins: n,
                rho: Some(rho),
                kappa: self.kappa,
                layout: self.layout,
            }),
            explicit: None,
            boundary_mode: self.boundary_mode,
            solver: self.solver,
            out_dir,
            snapshot_stride: None,
        }
    }
}
