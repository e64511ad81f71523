//! The four subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use rayon::prelude::*;

use cloudchamber::{
    arrival_time, channel_probs, run_validation, Report, RunOptions, Simulation, ValidationOptions,
};

use crate::config::{read_json, Overrides, ResolvedRun, RunConfig, SweepConfig};
use crate::error::{CliError, Result};
use crate::report::{
    ensure_dir, num, write_channels, write_json, write_timeseries, Diagnostics, Metadata, Resolved,
    Summary, SCHEMA_VERSION,
};

/// Drop in the unchanged probability used for the reported arrival time.
pub const DEFAULT_ARRIVAL_DROP: f64 = 0.01;

pub fn load_run(config: &Path, overrides: &Overrides) -> Result<ResolvedRun> {
    read_json::<RunConfig>(config)?.resolve(overrides)
}

/// Runs one resolved configuration and writes its artifacts to `out_dir`.
pub fn execute(run: &ResolvedRun, arrival_drop: f64) -> Result<Summary> {
    let started_at = Utc::now().to_rfc3339();
    let clock = Instant::now();
    let resolved = Resolved::new(run)?;
    ensure_dir(&run.out_dir)?;
    let sim = Simulation::new(
        run.scenario.clone(),
        run.boundary.into(),
        run.solver.to_solve_config(),
    )?;
    let warnings = sim.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let options = RunOptions {
        snapshot_stride: run.snapshot_stride,
    };
    let record = sim.run(options, &mut [])?;

    let dir = &run.out_dir;
    write_timeseries(&dir.join("timeseries.csv"), &record)?;
    write_channels(&dir.join("channels_final.csv"), &record, resolved.num_spins)?;
    if run.snapshot_stride.is_some() {
        write_snapshots(&dir.join("snapshots.csv"), &record, resolved.num_spins)?;
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        final_probabilities: record.final_classes().into(),
        diagnostics: Diagnostics {
            max_norm_drift: record.max_norm_drift(),
            max_relative_energy_drift: record.max_relative_energy_drift(),
            arrival_time: arrival_time(&record, arrival_drop)?,
            warnings,
        },
        metadata: Metadata {
            started_at,
            finished_at: Utc::now().to_rfc3339(),
            wall_seconds: clock.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION"),
        },
        resolved,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_snapshots(path: &Path, record: &cloudchamber::RunRecord, n: usize) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let err = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(["step", "t", "mask", "probability"])
        .map_err(err)?;
    for (step, t, state) in &record.snapshots {
        for (mask, p) in channel_probs(state, *t).p.into_iter().enumerate() {
            let c = cloudchamber::SpinConfig::new(mask as u32, n)?;
            w.write_record([step.to_string(), num(*t), c.to_detector_string(n), num(p)])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn cmd_run(config: &Path, overrides: &Overrides) -> Result<Summary> {
    let run = load_run(config, overrides)?;
    let summary = execute(&run, DEFAULT_ARRIVAL_DROP)?;
    let f = &summary.final_probabilities;
    println!("wrote {}", run.out_dir.display());
    println!(
        "UC {}  OS {}  LRC {}  MT {}  row {}",
        num(f.unchanged),
        num(f.one_spin),
        num(f.lrc_one_side),
        num(f.multiple_tracks),
        num(f.row_sum)
    );
    Ok(summary)
}

pub fn cmd_info(config: &Path, overrides: &Overrides, json: bool) -> Result<Resolved> {
    let run = load_run(config, overrides)?;
    let resolved = Resolved::new(&run)?;
    if json {
        let text =
            serde_json::to_string_pretty(&resolved).map_err(|e| CliError::Config(e.to_string()))?;
        println!("{text}");
    } else {
        print!("{}", resolved.to_text());
    }
    Ok(resolved)
}

pub fn cmd_validate(perturb_oracle_kappa: bool) -> Result<Report> {
    let report = run_validation(&ValidationOptions {
        perturb_oracle_kappa,
    });
    for c in &report.checks {
        println!("{c}");
    }
    println!(
        "{} checks, {} failed",
        report.checks.len(),
        report.failures().count()
    );
    match report.worst() {
        None => Ok(report),
        Some(w) => {
            println!("worst offender: {w}");
            Err(CliError::Validation(format!(
                "{} ({} > {})",
                w.name,
                num(w.measured),
                num(w.limit)
            )))
        }
    }
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub num_spins: usize,
    pub rho: f64,
    pub outcome: std::result::Result<Summary, String>,
    pub wall_seconds: f64,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "N",
    "rho",
    "LRC_one_side",
    "two_LRC",
    "OS",
    "UC",
    "MT",
    "row_sum",
    "arrival_time",
    "wall_seconds",
    "status",
];

impl SweepRow {
    fn fields(&self) -> Vec<String> {
        let mut v = vec![self.num_spins.to_string(), num(self.rho)];
        match &self.outcome {
            Ok(s) => {
                let f = &s.final_probabilities;
                v.extend(
                    [
                        f.lrc_one_side,
                        f.two_lrc,
                        f.one_spin,
                        f.unchanged,
                        f.multiple_tracks,
                        f.row_sum,
                    ]
                    .map(num),
                );
                v.push(s.diagnostics.arrival_time.map(num).unwrap_or_default());
                v.push(num(self.wall_seconds));
                v.push("ok".into());
            }
            Err(msg) => {
                v.extend(std::iter::repeat_n(String::new(), 7));
                v.push(num(self.wall_seconds));
                v.push(format!("failed: {msg}"));
            }
        }
        v
    }
}

pub fn point_dir(out_dir: &Path, n: usize, rho: f64) -> PathBuf {
    out_dir.join(format!("N{n}_rho{rho}"))
}

pub fn cmd_sweep(
    config: &Path,
    out_dir: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let mut cfg: SweepConfig = read_json(config)?;
    if let Some(o) = out_dir {
        cfg.out_dir = o;
    }
    if jobs.is_some() {
        cfg.parallelism = jobs;
    }
    cfg.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let threads = cfg
        .parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let points: Vec<(usize, f64)> = cfg
        .num_spins
        .iter()
        .flat_map(|&n| cfg.rho.iter().map(move |&r| (n, r)))
        .collect();
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(n, rho)| {
                let clock = Instant::now();
                let run_cfg = cfg.point(n, rho, point_dir(&cfg.out_dir, n, rho));
                let outcome = run_cfg
                    .resolve(&Overrides::default())
                    .and_then(|r| execute(&r, cfg.arrival_drop))
                    .map_err(|e| e.to_string());
                let wall_seconds = clock.elapsed().as_secs_f64();
                match &outcome {
                    Ok(_) => eprintln!("N={n} rho={rho}: done in {wall_seconds:.1} s"),
                    Err(e) => eprintln!("N={n} rho={rho}: failed: {e}"),
                }
                SweepRow {
                    num_spins: n,
                    rho,
                    outcome,
                    wall_seconds,
                }
            })
            .collect()
    });

    let path = cfg.out_dir.join("sweep.csv");
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let err = |e: csv::Error| CliError::io(&path, e.into());
    w.write_record(SWEEP_HEADER).map_err(err)?;
    for row in &rows {
        w.write_record(row.fields()).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    println!("wrote {}", path.display());

    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        return Err(CliError::SweepFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(rows)
}
