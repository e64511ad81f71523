//! The resolved-parameter record shared by `info --json` and `summary.json`,
//! and the CSV/JSON artifact writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use cloudchamber::{assemble_hamiltonian, ClassProbabilities, RunRecord, SpinConfig};

use crate::config::{Boundary, Layout, ResolvedRun, SolverOptions};
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// State-sized vectors alive during a step: the state, right-hand side,
/// solution, residual, correction, `A x`, `H psi` and the recorded copy.
pub const WORKING_SET_VECTORS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryEstimate {
    pub bytes_per_vector: u64,
    pub working_set_vectors: usize,
    pub interface_bytes: u64,
    pub total_bytes: u64,
}

/// Everything a run is determined by, plus derived grid quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub source: &'static str,
    pub epsilon: Option<f64>,
    pub hbar: f64,
    pub mass: f64,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub kappa: u8,
    pub p0: f64,
    pub sigma: f64,
    pub trunc_a: f64,
    pub x0: f64,
    pub half_length: f64,
    pub cluster_distance: f64,
    pub spacing: f64,
    pub num_spins: usize,
    pub channels: usize,
    pub layout: Layout,
    pub nx: usize,
    pub dx: f64,
    pub t_star: f64,
    pub steps: usize,
    pub dt: f64,
    pub boundary_mode: Boundary,
    pub solver: SolverOptions,
    pub detector_indices: Vec<usize>,
    pub detector_positions: Vec<f64>,
    pub predicted_arrival: f64,
    pub nnz: usize,
    pub memory: MemoryEstimate,
}

impl Resolved {
    pub fn new(run: &ResolvedRun) -> Result<Self> {
        let sc = &run.scenario;
        let p = &sc.params;
        let g = &sc.geometry;
        let layout = sc.layout()?;
        let h = assemble_hamiltonian(p, &sc.grid, &layout, run.boundary.into())?;
        let channels = sc.channels();
        let bytes_per_vector = (channels * sc.grid.nx() * 16) as u64;
        let interface = (channels * g.num_spins) as u64;
        let interface_bytes = if p.rho == 0.0 {
            0
        } else {
            match run.solver.method {
                crate::config::Method::Direct => interface * interface * 16,
                // restarted Krylov basis on the interface unknowns
                crate::config::Method::Iterative => 41 * interface * 16,
            }
        };
        Ok(Resolved {
            source: if run.epsilon.is_some() {
                "preset"
            } else {
                "explicit"
            },
            epsilon: run.epsilon,
            hbar: p.hbar,
            mass: p.mass,
            alpha: p.alpha,
            beta: p.beta,
            rho: p.rho,
            kappa: p.kappa.value() as u8,
            p0: p.p0,
            sigma: p.sigma,
            trunc_a: p.trunc_a,
            x0: p.x0,
            half_length: g.half_length,
            cluster_distance: g.cluster_distance,
            spacing: g.spacing,
            num_spins: g.num_spins,
            channels,
            layout: match g.layout {
                cloudchamber::LayoutRule::Alternating => Layout::Alternating,
                cloudchamber::LayoutRule::Centered => Layout::Centered,
            },
            nx: sc.grid.nx(),
            dx: sc.grid.dx(),
            t_star: sc.time.t_star(),
            steps: sc.time.steps(),
            dt: sc.time.dt(),
            boundary_mode: run.boundary,
            solver: run.solver,
            detector_indices: layout.indices().to_vec(),
            detector_positions: layout.positions().to_vec(),
            predicted_arrival: sc.predicted_arrival(),
            nnz: h.nnz(),
            memory: MemoryEstimate {
                bytes_per_vector,
                working_set_vectors: WORKING_SET_VECTORS,
                interface_bytes,
                total_bytes: bytes_per_vector * WORKING_SET_VECTORS as u64 + interface_bytes,
            },
        })
    }

    /// Human-readable listing, numbers to 12 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k:<22} {v}\n"));
        line("source", self.source.into());
        if let Some(e) = self.epsilon {
            line("epsilon", num(e));
        }
        for (k, v) in [
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("rho", self.rho),
        ] {
            line(k, num(v));
        }
        line("kappa", self.kappa.to_string());
        for (k, v) in [
            ("p0", self.p0),
            ("sigma", self.sigma),
            ("trunc_a", self.trunc_a),
            ("x0", self.x0),
            ("half_length", self.half_length),
            ("cluster_distance", self.cluster_distance),
            ("spacing", self.spacing),
        ] {
            line(k, num(v));
        }
        line("num_spins", self.num_spins.to_string());
        line("channels", self.channels.to_string());
        line("layout", format!("{:?}", self.layout).to_lowercase());
        line("nx", self.nx.to_string());
        line("dx", num(self.dx));
        line("t_star", num(self.t_star));
        line("steps", self.steps.to_string());
        line("dt", num(self.dt));
        line(
            "boundary_mode",
            format!("{:?}", self.boundary_mode).to_lowercase(),
        );
        line(
            "solver",
            format!(
                "{:?}, tolerance {}, max_iterations {}",
                self.solver.method,
                num(self.solver.tolerance),
                self.solver.max_iterations
            )
            .to_lowercase(),
        );
        let pos: Vec<String> = self
            .detector_indices
            .iter()
            .zip(&self.detector_positions)
            .map(|(i, x)| format!("{}@{i}", num(*x)))
            .collect();
        line("detectors", pos.join(" "));
        line("predicted_arrival", num(self.predicted_arrival));
        line("nnz", self.nnz.to_string());
        line(
            "memory_estimate",
            format!(
                "{} B ({} B per vector x {} + {} B interface)",
                self.memory.total_bytes,
                self.memory.bytes_per_vector,
                self.memory.working_set_vectors,
                self.memory.interface_bytes
            ),
        );
        s
    }
}

/// 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalProbabilities {
    pub t: f64,
    #[serde(rename = "UC")]
    pub unchanged: f64,
    #[serde(rename = "OS")]
    pub one_spin: f64,
    #[serde(rename = "LRC_left")]
    pub lrc_left: f64,
    #[serde(rename = "LRC_right")]
    pub lrc_right: f64,
    #[serde(rename = "LRC_one_side")]
    pub lrc_one_side: f64,
    #[serde(rename = "two_LRC")]
    pub two_lrc: f64,
    #[serde(rename = "MT")]
    pub multiple_tracks: f64,
    pub row_sum: f64,
}

impl From<&ClassProbabilities> for FinalProbabilities {
    fn from(c: &ClassProbabilities) -> Self {
        FinalProbabilities {
            t: c.t,
            unchanged: c.unchanged,
            one_spin: c.one_spin,
            lrc_left: c.lrc_left,
            lrc_right: c.lrc_right,
            lrc_one_side: c.lrc_one_side(),
            two_lrc: c.two_lrc(),
            multiple_tracks: c.multiple_tracks,
            row_sum: c.row_sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_norm_drift: f64,
    pub max_relative_energy_drift: f64,
    pub arrival_time: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub started_at: String,
    pub finished_at: String,
    pub wall_seconds: f64,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub resolved: Resolved,
    #[serde(rename = "final")]
    pub final_probabilities: FinalProbabilities,
    pub diagnostics: Diagnostics,
    pub metadata: Metadata,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, e.into())
}

pub fn write_timeseries(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "t",
        "norm2",
        "energy",
        "UC",
        "OS",
        "LRC_left",
        "LRC_right",
        "MT",
    ])
    .map_err(|e| csv_err(path, e))?;
    for s in &record.series {
        let c = &s.classes;
        w.write_record(
            [
                s.t,
                s.norm2,
                s.energy,
                c.unchanged,
                c.one_spin,
                c.lrc_left,
                c.lrc_right,
                c.multiple_tracks,
            ]
            .map(num),
        )
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_channels(path: &Path, record: &RunRecord, num_spins: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["mask", "probability"])
        .map_err(|e| csv_err(path, e))?;
    for (mask, &p) in record.final_channels.p.iter().enumerate() {
        let c = SpinConfig::new(mask as u32, num_spins)?;
        w.write_record([c.to_detector_string(num_spins), num(p)])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| CliError::io(path, e.into()))?;
    writeln!(f)
        .and_then(|_| f.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
