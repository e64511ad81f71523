//! Dense reference implementation for small systems.
//!
//! Builds the Hamiltonian entry by entry straight from the finite-difference
//! stencils, without going through [`crate::assembly`], and integrates with a
//! dense LU factorization. Only meant for cross-checking the sparse path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::assembly::BoundaryMode;
use crate::error::{Error, Result};
use crate::model::{DetectorLayout, Grid, PhysicalParams};
use crate::state::StateVector;

/// Largest dense dimension the oracle accepts.
pub const MAX_DENSE_DIM: usize = 2048;

#[derive(Debug, Clone)]
pub struct DenseSystem {
    h: DMatrix<Complex64>,
    a: DMatrix<Complex64>,
    b: DMatrix<Complex64>,
    channels: usize,
    nx: usize,
    dx: f64,
}

impl DenseSystem {
    pub fn new(
        params: &PhysicalParams,
        grid: &Grid,
        layout: &DetectorLayout,
        dt: f64,
        boundary: BoundaryMode,
    ) -> Result<Self> {
        let n = layout.num_spins();
        let channels = 1usize << n;
        let nx = grid.nx();
        let dim = channels * nx;
        if dim > MAX_DENSE_DIM {
            return Err(Error::Configuration(format!(
                "dense oracle limited to dimension {MAX_DENSE_DIM}, got {dim}"
            )));
        }
        let dx = grid.dx();
        let hb = params.hbar;
        let m = params.mass;
        let at = |s: usize, i: usize| s * nx + i;
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for s in 0..channels {
            // alpha * sum_j sigma_j
            let level: f64 = (0..n)
                .map(|j| {
                    if s & (1 << j) != 0 {
                        params.alpha
                    } else {
                        -params.alpha
                    }
                })
                .sum();
            for i in 0..nx {
                // -hbar^2/(2m) * (psi_{i+1} - 2 psi_i + psi_{i-1}) / dx^2
                let lap = -hb * hb / (2.0 * m * dx * dx);
                h[(at(s, i), at(s, i))] += Complex64::new(-2.0 * lap + level, 0.0);
                let (left, right) = match (i, boundary) {
                    // ghost psi_{-1} = psi_1
                    (0, BoundaryMode::Verbatim) => (None, Some(2.0)),
                    (0, BoundaryMode::Symmetrized) => (None, Some(1.0)),
                    (i, BoundaryMode::Verbatim) if i == nx - 1 => (Some(2.0), None),
                    (i, BoundaryMode::Symmetrized) if i == nx - 1 => (Some(1.0), None),
                    _ => (Some(1.0), Some(1.0)),
                };
                if let Some(w) = left {
                    h[(at(s, i), at(s, i - 1))] += Complex64::new(w * lap, 0.0);
                }
                if let Some(w) = right {
                    h[(at(s, i), at(s, i + 1))] += Complex64::new(w * lap, 0.0);
                }
            }
            for (j, &ij) in layout.indices().iter().enumerate() {
                // -hbar^2/(2m) [ -beta/dx psi_s + i sigma_j rho/dx psi_s' ]
                let pref = -hb * hb / (2.0 * m);
                let sigma_j = if s & (1 << j) != 0 { 1.0 } else { -1.0 };
                let partner = s ^ (1 << j);
                h[(at(s, ij), at(s, ij))] += Complex64::new(pref * (-params.beta / dx), 0.0);
                let flip = Complex64::new(0.0, sigma_j * params.kappa.value() * params.rho / dx);
                h[(at(s, ij), at(partner, ij))] += flip * pref;
            }
        }
        let id = DMatrix::<Complex64>::identity(dim, dim);
        let z = Complex64::new(0.0, dt / (2.0 * hb));
        let a = &id + &h * z;
        let b = &id - &h * z;
        Ok(DenseSystem {
            h,
            a,
            b,
            channels,
            nx,
            dx,
        })
    }

    pub fn hamiltonian(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn lhs(&self) -> &DMatrix<Complex64> {
        &self.a
    }

    pub fn rhs(&self) -> &DMatrix<Complex64> {
        &self.b
    }

    /// `max |H - H^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.h - self.h.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of `H` from a complex Schur decomposition.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let schur = nalgebra::linalg::Schur::new(self.h.clone());
        let (_, t) = schur.unpack();
        Ok(t.diagonal().iter().copied().collect())
    }

    /// Integrates `steps` Crank-Nicolson steps with one LU factorization.
    pub fn run(&self, initial: &StateVector, steps: usize) -> Result<StateVector> {
        if initial.channels() != self.channels || initial.nx() != self.nx {
            return Err(Error::Dimension {
                expected: self.channels * self.nx,
                found: initial.len(),
            });
        }
        let lu = self.a.clone().lu();
        let mut psi = DVector::from_column_slice(initial.values());
        for k in 0..steps {
            let rhs = &self.b * &psi;
            psi = lu.solve(&rhs).ok_or_else(|| Error::Step {
                step: k + 1,
                source: Box::new(Error::Singular { pivot: 0 }),
            })?;
        }
        StateVector::from_values(psi.as_slice().to_vec(), self.channels, self.nx, self.dx)
    }
}

/// Dense Crank-Nicolson evolution of `initial` over `steps` steps of `dt`.
pub fn dense_run(
    params: &PhysicalParams,
    grid: &Grid,
    layout: &DetectorLayout,
    dt: f64,
    boundary: BoundaryMode,
    initial: &StateVector,
    steps: usize,
) -> Result<StateVector> {
    DenseSystem::new(params, grid, layout, dt, boundary)?.run(initial, steps)
}

/// Componentwise and norm differences between two states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub max_abs_diff: f64,
    pub norm_diff: f64,
}

pub fn compare(a: &StateVector, b: &StateVector) -> Result<Comparison> {
    a.check_same_shape(b)?;
    let max_abs_diff = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Ok(Comparison {
        max_abs_diff,
        norm_diff: (a.norm2().sqrt() - b.norm2().sqrt()).abs(),
    })
}
