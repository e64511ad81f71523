//! Structural and cross-implementation checks run by `cloudchamber validate`.
//!
//! Every check is small enough to finish in well under a second of dense
//! work. Each one reports the measured quantity and the limit it is held to.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::assembly::{assemble_cn, assemble_hamiltonian, BoundaryMode, DiscreteHamiltonian};
use crate::error::Result;
use crate::model::{
    build_grid, initial_state, preset_from_epsilon, CouplingFactor, DetectorLayout, Grid,
    PhysicalParams,
};
use crate::observables::channel_probs;
use crate::oracle::{compare, DenseSystem};
use crate::solver::{run, Propagator, RunOptions, SolveConfig};
use crate::spinspace::{
    all_configs, channel_count, classify, flip_partner, ConfigClass, SideAssignment,
};
use crate::state::StateVector;

/// Outcome of one check. `passed` iff `measured <= limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, measured: f64, limit: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            passed: measured <= limit,
            measured,
            limit,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, limit: f64, r: Result<(f64, String)>) -> Self {
        match r {
            Ok((m, detail)) => CheckResult::new(name, m, limit, detail),
            Err(e) => CheckResult {
                name: name.into(),
                passed: false,
                measured: f64::INFINITY,
                limit,
                detail: format!("error: {e}"),
            },
        }
    }

    /// `measured / limit`, infinite for a failed zero-limit check.
    pub fn severity(&self) -> f64 {
        if self.limit > 0.0 {
            self.measured / self.limit
        } else if self.measured > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<34} {:.3e} <= {:.1e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.limit,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Build the oracle with the other coupling factor. Every coupled oracle
    /// comparison must then fail.
    pub perturb_oracle_kappa: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// The failed check furthest beyond its limit.
    pub fn worst(&self) -> Option<&CheckResult> {
        self.failures()
            .max_by(|a, b| a.severity().total_cmp(&b.severity()))
    }
}

/// Disagreement between the production propagator and the dense oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleAgreement {
    pub state_max_abs: f64,
    pub prob_max_abs: f64,
}

/// Runs `steps` steps with both implementations from the same initial state.
/// `oracle_params` lets a caller build the oracle from different parameters.
pub fn oracle_agreement(
    params: &PhysicalParams,
    oracle_params: &PhysicalParams,
    grid: &Grid,
    layout: &DetectorLayout,
    dt: f64,
    steps: usize,
    boundary: BoundaryMode,
) -> Result<OracleAgreement> {
    let h = assemble_hamiltonian(params, grid, layout, boundary)?;
    let initial = initial_state(params, grid, h.channels())?;
    let prop = Propagator::new(
        assemble_cn(Arc::new(h), dt, params.hbar)?,
        SolveConfig::default(),
    )?;
    let mut state = initial.clone();
    for _ in 0..steps {
        state = prop.step(&state)?;
    }
    let dense =
        DenseSystem::new(oracle_params, grid, layout, dt, boundary)?.run(&initial, steps)?;
    let cmp = compare(&state, &dense)?;
    let p = channel_probs(&state, 0.0).p;
    let q = channel_probs(&dense, 0.0).p;
    let prob_max_abs = p
        .iter()
        .zip(&q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(OracleAgreement {
        state_max_abs: cmp.max_abs_diff,
        prob_max_abs,
    })
}

/// Small instance for cross-checking against the dense oracle: N=2 on a
/// 100-point grid of [-1.5, 1.5], detectors snapped to +-0.5, 50 steps.
/// The preset is scaled to `ORACLE_EPSILON`, with t* scaled alongside, so
/// the packet is resolved on this grid and reaches the detectors.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub params: PhysicalParams,
    pub grid: Grid,
    pub layout: DetectorLayout,
    pub dt: f64,
    pub steps: usize,
}

pub const ORACLE_EPSILON: f64 = 0.4;

pub fn oracle_instance(rho: f64) -> Result<OracleInstance> {
    let scenario = preset_from_epsilon(ORACLE_EPSILON, 2, Some(rho))?;
    let grid = build_grid(1.5, 100)?;
    let layout = DetectorLayout::from_indices(
        &grid,
        vec![grid.nearest_index(-0.5), grid.nearest_index(0.5)],
    )?;
    let steps = 50;
    let t_star = 0.065 * ORACLE_EPSILON / 0.1;
    Ok(OracleInstance {
        params: scenario.params,
        grid,
        layout,
        dt: t_star / steps as f64,
        steps,
    })
}

impl OracleInstance {
    pub fn agreement(
        &self,
        oracle_params: &PhysicalParams,
        boundary: BoundaryMode,
    ) -> Result<OracleAgreement> {
        oracle_agreement(
            &self.params,
            oracle_params,
            &self.grid,
            &self.layout,
            self.dt,
            self.steps,
            boundary,
        )
    }
}

/// Runs the whole suite.
pub fn run_validation(options: &ValidationOptions) -> Report {
    let mut checks = vec![
        check_nnz(),
        check_flip_involution(),
        check_class_partition(),
        check_partner_symmetry(),
        check_symmetrized_hermitian(),
        check_spectrum_real(),
        check_cn_sum(),
        check_inner_product_probe(),
        check_decoupling_structure(),
    ];
    checks.extend(check_oracle_matrix(options));
    checks.push(check_oracle_reference_instance(options));
    checks.extend([
        check_conservation(),
        check_time_reversal(),
        check_direct_vs_iterative(),
        check_decoupled_run(),
        check_mirror_symmetry(),
    ]);
    Report { checks }
}

fn params_eps(rho: f64) -> Result<PhysicalParams> {
    Ok(preset_from_epsilon(0.1, 2, Some(rho))?.params)
}

/// Parameters for small-grid checks: a wider, slower packet than the preset
/// so it is resolved on coarse grids and overlaps detectors near the origin.
fn coarse_params(rho: f64, beta: f64, kappa: CouplingFactor) -> Result<PhysicalParams> {
    Ok(PhysicalParams {
        beta,
        kappa,
        sigma: 0.08,
        p0: 2.0,
        trunc_a: 0.5,
        ..params_eps(rho)?
    })
}

/// Detectors placed symmetrically around the grid centre, `gap` points apart.
fn central_layout(grid: &Grid, n: usize, gap: usize) -> Result<DetectorLayout> {
    let nx = grid.nx();
    let mut idx: Vec<usize> = (0..n / 2)
        .flat_map(|k| {
            let off = gap * (k + 1);
            [nx / 2 - 1 - off, nx - (nx / 2 - 1 - off) - 1]
        })
        .collect();
    if n % 2 == 1 {
        idx.push(nx / 2);
    }
    idx.sort_unstable();
    DetectorLayout::from_indices(grid, idx)
}

fn probe_vector(len: usize, seed: f64) -> Vec<Complex64> {
    (0..len)
        .map(|k| {
            let x = k as f64 + seed;
            Complex64::new((0.731 * x).sin(), (1.37 * x + seed).cos())
        })
        .collect()
}

fn check_nnz() -> CheckResult {
    let name = "nnz matches (3Nx-2)M+NM";
    let r = (|| {
        let mut worst = 0.0_f64;
        let mut cases = Vec::new();
        for n in [2usize, 4, 6, 8] {
            for nx in [50usize, 1000] {
                let grid = build_grid(1.5, nx)?;
                let layout = central_layout(&grid, n, 2)?;
                let h = assemble_hamiltonian(
                    &params_eps(100.0)?,
                    &grid,
                    &layout,
                    BoundaryMode::Verbatim,
                )?;
                let m = channel_count(n);
                let expected = (3 * nx - 2) * m + n * m;
                // Count the emitted pattern rather than trusting nnz().
                let counted = h.triplets().len();
                worst = worst
                    .max(counted.abs_diff(expected) as f64)
                    .max(h.nnz().abs_diff(expected) as f64);
                cases.push(format!("N={n},Nx={nx}:{counted}"));
            }
        }
        Ok((worst, cases.join(" ")))
    })();
    CheckResult::from_result(name, 0.0, r)
}

fn check_flip_involution() -> CheckResult {
    let r = (|| {
        let mut bad = 0usize;
        for n in 1..=12 {
            for c in all_configs(n) {
                for j in 0..n {
                    let p = flip_partner(c, j, n)?;
                    if flip_partner(p, j, n)? != c
                        || p.spin(j) != -c.spin(j)
                        || p.flips().abs_diff(c.flips()) != 1
                    {
                        bad += 1;
                    }
                }
            }
        }
        Ok((bad as f64, "all configurations, N <= 12".into()))
    })();
    CheckResult::from_result("flip partner is an involution", 0.0, r)
}

fn check_class_partition() -> CheckResult {
    let r = (|| {
        let mut bad = 0usize;
        for n in [2usize, 4, 6, 8, 10] {
            let sides = SideAssignment::symmetric(n)?;
            let mut counts = [0usize; 5];
            for c in all_configs(n) {
                let class = classify(c, &sides);
                counts[ConfigClass::ALL
                    .iter()
                    .position(|&k| k == class)
                    .expect("listed")] += 1;
            }
            let h = n / 2;
            let track = (1usize << h) - 1 - h;
            let expected = [1, n, track, track, ((1usize << h) - 1).pow(2)];
            if counts != expected {
                bad += 1;
            }
        }
        Ok((
            bad as f64,
            "class sizes 1, N, 2^(N/2)-1-N/2 (x2), (2^(N/2)-1)^2".into(),
        ))
    })();
    CheckResult::from_result("classes partition spin space", 0.0, r)
}

fn check_partner_symmetry() -> CheckResult {
    let r = (|| {
        let grid = build_grid(1.5, 40)?;
        let layout = DetectorLayout::from_indices(&grid, vec![9, 17, 30])?;
        let h = assemble_hamiltonian(&params_eps(100.0)?, &grid, &layout, BoundaryMode::Verbatim)?;
        let nx = h.nx();
        let worst = h
            .couplings()
            .iter()
            .map(|c| {
                let row = c.channel.index() * nx + c.site;
                let col = c.partner.index() * nx + c.site;
                (h.entry(row, col) - h.entry(col, row).conj()).norm() / h.flip_strength()
            })
            .fold(0.0, f64::max);
        Ok((
            worst,
            format!("{} coupling entries, N=3", h.couplings().len()),
        ))
    })();
    CheckResult::from_result("coupling entries pair hermitian", 1e-15, r)
}

fn check_symmetrized_hermitian() -> CheckResult {
    let r = (|| {
        let grid = build_grid(1.5, 60)?;
        let layout = central_layout(&grid, 4, 3)?;
        let h = assemble_hamiltonian(
            &params_eps(100.0)?,
            &grid,
            &layout,
            BoundaryMode::Symmetrized,
        )?;
        Ok((h.hermiticity_defect(), "symmetrized boundary, N=4".into()))
    })();
    CheckResult::from_result("H hermitian (symmetrized)", 0.0, r)
}

fn check_spectrum_real() -> CheckResult {
    let r = (|| {
        let grid = build_grid(1.5, 50)?;
        let layout = DetectorLayout::from_indices(&grid, vec![20])?;
        let p = PhysicalParams {
            beta: 0.5,
            ..params_eps(100.0)?
        };
        let d = DenseSystem::new(&p, &grid, &layout, 1e-4, BoundaryMode::Symmetrized)?;
        let scale = d.hamiltonian().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let worst = d
            .eigenvalues()?
            .iter()
            .map(|e| e.im.abs())
            .fold(0.0, f64::max);
        Ok((
            worst / scale,
            "dense N=1, Nx=50, relative to max |H|".into(),
        ))
    })();
    CheckResult::from_result("eigenvalues of H are real", 1e-10, r)
}

fn check_cn_sum() -> CheckResult {
    let r = (|| {
        let grid = build_grid(1.5, 80)?;
        let layout = central_layout(&grid, 2, 5)?;
        let p = params_eps(100.0)?;
        let h = assemble_hamiltonian(&p, &grid, &layout, BoundaryMode::Verbatim)?;
        let cn = assemble_cn(Arc::new(h), 1e-4, p.hbar)?;
        let worst = cn
            .hamiltonian()
            .triplets()
            .into_iter()
            .map(|(r, c, _)| {
                let id = if r == c { 2.0 } else { 0.0 };
                (cn.lhs_entry(r, c) + cn.rhs_entry(r, c) - id).norm()
            })
            .fold(0.0, f64::max);
        Ok((worst, "over the stored pattern".into()))
    })();
    CheckResult::from_result("A + B = 2I", 1e-15, r)
}

fn check_inner_product_probe() -> CheckResult {
    let r = (|| {
        let grid = build_grid(1.5, 64)?;
        let layout = central_layout(&grid, 3, 4)?;
        let h = assemble_hamiltonian(
            &params_eps(100.0)?,
            &grid,
            &layout,
            BoundaryMode::Symmetrized,
        )?;
        let u = StateVector::from_values(probe_vector(h.dim(), 0.3), h.channels(), h.nx(), h.dx())?;
        let v = StateVector::from_values(probe_vector(h.dim(), 2.9), h.channels(), h.nx(), h.dx())?;
        let a = u.inner(&h.apply(&v)?)?;
        let b = v.inner(&h.apply(&u)?)?.conj();
        Ok((
            (a - b).norm() / a.norm(),
            "<u,Hv> vs conj <v,Hu>, N=3".into(),
        ))
    })();
    CheckResult::from_result("H symmetric in discrete inner product", 1e-13, r)
}

fn check_decoupling_structure() -> CheckResult {
    let r = (|| {
        let grid = build_grid(1.5, 50)?;
        let layout = central_layout(&grid, 4, 2)?;
        let p = params_eps(0.0)?;
        let h = assemble_hamiltonian(&p, &grid, &layout, BoundaryMode::Verbatim)?;
        let mut worst = h.couplings().len() as f64;
        let (l0, d0, u0) = h.channel_bands(0);
        for c in 1..h.channels() {
            let (l, d, u) = h.channel_bands(c);
            let shift = h.channel_shift(c) - h.channel_shift(0);
            worst = worst
                .max(band_diff(&l, &l0, 0.0))
                .max(band_diff(&u, &u0, 0.0))
                .max(band_diff(&d, &d0, shift));
        }
        Ok((
            worst,
            "rho = 0: no cross entries, blocks differ by alpha shift".into(),
        ))
    })();
    CheckResult::from_result("decoupled blocks at rho = 0", 1e-12, r)
}

fn band_diff(a: &[f64], b: &[f64], shift: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y - shift).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn check_oracle_matrix(options: &ValidationOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for n in 1..=3usize {
        let name = format!("oracle matrix N={n}");
        let r = (|| {
            let nx = if n == 3 { 64 } else { 128 };
            let grid = build_grid(1.5, nx)?;
            let layout = central_layout(&grid, n, 3)?;
            let mut worst_p = 0.0_f64;
            let mut worst_s = 0.0_f64;
            let mut count = 0;
            for rho in [0.0, 10.0, 100.0] {
                for beta in [0.0, 1e-4] {
                    for kappa in [CouplingFactor::One, CouplingFactor::Two] {
                        let p = coarse_params(rho, beta, kappa)?;
                        let q = oracle_side(&p, options);
                        let a = oracle_agreement(
                            &p,
                            &q,
                            &grid,
                            &layout,
                            2e-4,
                            25,
                            BoundaryMode::Verbatim,
                        )?;
                        worst_p = worst_p.max(a.prob_max_abs);
                        worst_s = worst_s.max(a.state_max_abs);
                        count += 1;
                    }
                }
            }
            Ok((
                worst_p,
                format!("{count} cases, Nx={nx}, worst state diff {worst_s:.2e}"),
            ))
        })();
        out.push(CheckResult::from_result(&name, 1e-12, r));
    }
    out
}

fn oracle_side(p: &PhysicalParams, options: &ValidationOptions) -> PhysicalParams {
    let mut q = *p;
    if options.perturb_oracle_kappa {
        q.kappa = match p.kappa {
            CouplingFactor::One => CouplingFactor::Two,
            CouplingFactor::Two => CouplingFactor::One,
        };
    }
    q
}

fn check_oracle_reference_instance(options: &ValidationOptions) -> CheckResult {
    let r = (|| {
        let mut worst = 0.0_f64;
        for rho in [0.0, 10.0, 100.0] {
            let inst = oracle_instance(rho)?;
            let a = inst.agreement(&oracle_side(&inst.params, options), BoundaryMode::Verbatim)?;
            worst = worst.max(a.state_max_abs);
        }
        Ok((
            worst,
            "N=2, Nx=100, K=50, rho in {0,10,100}, state max-abs".into(),
        ))
    })();
    CheckResult::from_result("oracle reference instance", 1e-10, r)
}

fn small_run(
    n: usize,
    nx: usize,
    steps: usize,
    rho: f64,
    boundary: BoundaryMode,
    config: SolveConfig,
) -> Result<crate::solver::RunRecord> {
    let grid = build_grid(1.5, nx)?;
    let layout = central_layout(&grid, n, nx / 40)?;
    let p = coarse_params(rho, 1e-4, CouplingFactor::One)?;
    let h: DiscreteHamiltonian = assemble_hamiltonian(&p, &grid, &layout, boundary)?;
    let init = initial_state(&p, &grid, h.channels())?;
    let prop = Propagator::new(assemble_cn(Arc::new(h), 2e-4, p.hbar)?, config)?;
    run(
        &prop,
        layout.sides(),
        init,
        steps,
        RunOptions::default(),
        &mut [],
    )
}

fn check_conservation() -> CheckResult {
    let r = (|| {
        let rec = small_run(
            4,
            400,
            60,
            100.0,
            BoundaryMode::Symmetrized,
            SolveConfig::default(),
        )?;
        let norm = rec.max_norm_drift();
        let energy = rec.max_relative_energy_drift();
        Ok((
            norm.max(energy),
            format!("norm {norm:.2e}, energy {energy:.2e}, N=4"),
        ))
    })();
    CheckResult::from_result("norm and energy conserved", 1e-10, r)
}

fn check_time_reversal() -> CheckResult {
    let r = (|| {
        let grid = build_grid(1.5, 300)?;
        let layout = central_layout(&grid, 2, 6)?;
        let p = coarse_params(100.0, 1e-4, CouplingFactor::One)?;
        let h = Arc::new(assemble_hamiltonian(
            &p,
            &grid,
            &layout,
            BoundaryMode::Verbatim,
        )?);
        let init = initial_state(&p, &grid, h.channels())?;
        let fwd = assemble_cn(Arc::clone(&h), 2e-4, p.hbar)?;
        let back = fwd.time_reversed();
        let fp = Propagator::new(fwd, SolveConfig::default())?;
        let bp = Propagator::new(back, SolveConfig::default())?;
        let mut s = init.clone();
        for _ in 0..20 {
            s = fp.step(&s)?;
        }
        for _ in 0..20 {
            s = bp.step(&s)?;
        }
        Ok((
            compare(&s, &init)?.max_abs_diff,
            "20 steps forward, 20 back".into(),
        ))
    })();
    CheckResult::from_result("time reversal recovers state", 1e-9, r)
}

fn check_direct_vs_iterative() -> CheckResult {
    let r = (|| {
        let a = small_run(
            4,
            200,
            15,
            100.0,
            BoundaryMode::Verbatim,
            SolveConfig::default(),
        )?;
        let b = small_run(
            4,
            200,
            15,
            100.0,
            BoundaryMode::Verbatim,
            SolveConfig::iterative(),
        )?;
        Ok((
            compare(&a.final_state, &b.final_state)?.max_abs_diff,
            "N=4, 15 steps".into(),
        ))
    })();
    CheckResult::from_result("direct and iterative solves agree", 1e-9, r)
}

fn check_decoupled_run() -> CheckResult {
    let r = (|| {
        let rec = small_run(
            4,
            200,
            40,
            0.0,
            BoundaryMode::Verbatim,
            SolveConfig::default(),
        )?;
        let uc = rec.final_classes().unchanged;
        let off: f64 = rec.final_channels.p[1..].iter().sum();
        Ok(((uc - 1.0).abs().max(off), format!("UC = {uc:.15}")))
    })();
    CheckResult::from_result("rho = 0 leaves spins unchanged", 1e-12, r)
}

fn check_mirror_symmetry() -> CheckResult {
    let r = (|| {
        let rec = small_run(
            4,
            200,
            40,
            100.0,
            BoundaryMode::Verbatim,
            SolveConfig::default(),
        )?;
        let worst = rec
            .series
            .iter()
            .map(|s| (s.classes.lrc_left - s.classes.lrc_right).abs())
            .fold(0.0, f64::max);
        let lrc = rec.final_classes().lrc_one_side();
        Ok((worst, format!("final LRC {lrc:.3e}")))
    })();
    CheckResult::from_result("LRC left equals LRC right", 1e-6, r)
}
