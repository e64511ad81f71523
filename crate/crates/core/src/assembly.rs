//! Sparse discrete Hamiltonian and Crank-Nicolson operators.
//!
//! Unknowns are ordered channel-major: index `mask * nx + i` holds the
//! amplitude of spin channel `mask` at grid point `i`. Each channel contributes
//! one tridiagonal block (kinetic stencil, Neumann boundary rows, spin energy
//! shift, point-interaction bumps at detector sites). A detector site `i_j`
//! of channel `s` is additionally coupled to the same site of the channel
//! with spin `j` flipped.
//!
//! All channel blocks share the same bands up to a constant diagonal shift
//! `alpha * spin_sum(s)`, so only one copy of the bands is stored.

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DetectorLayout, Grid, PhysicalParams};
use crate::spinspace::{channel_count, spin_sum, SpinConfig};
use crate::state::StateVector;

/// Treatment of the homogeneous Neumann condition at `x = +-L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoundaryMode {
    /// Ghost-point substitution `psi_0 = psi_2`: the boundary row's single
    /// off-diagonal entry is doubled. Not symmetric in the plain inner product.
    #[default]
    Verbatim,
    /// Boundary off-diagonals left at the interior value, which keeps the
    /// matrix exactly Hermitian.
    Symmetrized,
}

/// A cross-channel entry `H[(channel, site), (partner, site)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub channel: SpinConfig,
    pub detector: usize,
    pub site: usize,
    pub partner: SpinConfig,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHamiltonian {
    nx: usize,
    num_spins: usize,
    dx: f64,
    boundary: BoundaryMode,
    /// Shared diagonal without the spin energy shift.
    diag: Vec<f64>,
    /// `lower[i] = H[i, i-1]`; `lower[0]` is unused.
    lower: Vec<f64>,
    /// `upper[i] = H[i, i+1]`; `upper[nx-1]` is unused.
    upper: Vec<f64>,
    alpha: f64,
    sites: Vec<usize>,
    /// Magnitude of the flip entries; zero means no cross-channel entries.
    flip_strength: f64,
    couplings: Vec<Coupling>,
}

/// Builds the discrete Hamiltonian for the given parameters and layout.
pub fn assemble_hamiltonian(
    params: &PhysicalParams,
    grid: &Grid,
    layout: &DetectorLayout,
    boundary: BoundaryMode,
) -> Result<DiscreteHamiltonian> {
    params.validate()?;
    let nx = grid.nx();
    let dx = grid.dx();
    let sites = layout.indices().to_vec();
    if let Some(&i) = sites.iter().find(|&&i| i == 0 || i >= nx - 1) {
        return Err(Error::Configuration(format!(
            "detector at grid index {i} has no two-sided stencil"
        )));
    }
    let n = sites.len();
    let h2m = params.hbar * params.hbar / params.mass;
    let kinetic = h2m / (dx * dx);

    let mut diag = vec![kinetic; nx];
    for &i in &sites {
        diag[i] += h2m * params.beta / (2.0 * dx);
    }
    let mut lower = vec![-kinetic / 2.0; nx];
    let mut upper = vec![-kinetic / 2.0; nx];
    lower[0] = 0.0;
    upper[nx - 1] = 0.0;
    if boundary == BoundaryMode::Verbatim {
        upper[0] = -kinetic;
        lower[nx - 1] = -kinetic;
    }

    let flip_strength = params.kappa.value() * params.rho * h2m / (2.0 * dx);
    let mut couplings = Vec::new();
    if flip_strength != 0.0 {
        couplings.reserve(channel_count(n) * n);
        for mask in 0..channel_count(n) {
            let channel = SpinConfig::from_index(mask);
            for (j, &site) in sites.iter().enumerate() {
                couplings.push(Coupling {
                    channel,
                    detector: j,
                    site,
                    partner: SpinConfig::from_index(mask ^ (1 << j)),
                    value: flip_value(channel, j, flip_strength),
                });
            }
        }
    }

    Ok(DiscreteHamiltonian {
        nx,
        num_spins: n,
        dx,
        boundary,
        diag,
        lower,
        upper,
        alpha: params.alpha,
        sites,
        flip_strength,
        couplings,
    })
}

/// `-i sigma_j * strength`: Hermitian because the partner has the opposite
/// spin at `j`.
fn flip_value(channel: SpinConfig, j: usize, strength: f64) -> Complex64 {
    Complex64::new(0.0, -(channel.spin(j) as f64) * strength)
}

impl DiscreteHamiltonian {
    /// The zero operator on `channels` blocks of `nx` points.
    #[cfg(test)]
    pub(crate) fn zeros(num_spins: usize, nx: usize, dx: f64) -> Self {
        DiscreteHamiltonian {
            nx,
            num_spins,
            dx,
            boundary: BoundaryMode::Symmetrized,
            diag: vec![0.0; nx],
            lower: vec![0.0; nx],
            upper: vec![0.0; nx],
            alpha: 0.0,
            sites: Vec::new(),
            flip_strength: 0.0,
            couplings: Vec::new(),
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    pub fn channels(&self) -> usize {
        channel_count(self.num_spins)
    }

    pub fn dim(&self) -> usize {
        self.channels() * self.nx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn flip_strength(&self) -> f64 {
        self.flip_strength
    }

    /// Diagonal energy shift of `channel`.
    pub fn channel_shift(&self, channel: usize) -> f64 {
        self.alpha * spin_sum(SpinConfig::from_index(channel), self.num_spins) as f64
    }

    /// Bands `(lower, diag, upper)` of the block of `channel`.
    pub fn channel_bands(&self, channel: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let shift = self.channel_shift(channel);
        let diag = self.diag.iter().map(|d| d + shift).collect();
        (self.lower.clone(), diag, self.upper.clone())
    }

    pub(crate) fn shared_bands(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.lower, &self.diag, &self.upper)
    }

    /// Number of stored nonzero entries: `(3 nx - 2)` per block plus one flip
    /// entry per detector and channel.
    pub fn nnz(&self) -> usize {
        self.channels() * (3 * self.nx - 2) + self.couplings.len()
    }

    /// Value of a single entry, zero outside the sparsity pattern.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let (rc, ri) = (row / self.nx, row % self.nx);
        let (cc, ci) = (col / self.nx, col % self.nx);
        if rc == cc {
            let v = if ri == ci {
                self.diag[ri] + self.channel_shift(rc)
            } else if ci + 1 == ri {
                self.lower[ri]
            } else if ri + 1 == ci {
                self.upper[ri]
            } else {
                0.0
            };
            return Complex64::new(v, 0.0);
        }
        let flipped = rc ^ cc;
        if ri != ci || !flipped.is_power_of_two() || self.flip_strength == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let j = flipped.trailing_zeros() as usize;
        if self.sites.get(j) == Some(&ri) {
            flip_value(SpinConfig::from_index(rc), j, self.flip_strength)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// All stored entries as `(row, col, value)`, row-major with ascending
    /// columns inside each row.
    pub fn triplets(&self) -> Vec<(usize, usize, Complex64)> {
        let nx = self.nx;
        let n = self.num_spins;
        let mut out = Vec::with_capacity(self.nnz());
        for c in 0..self.channels() {
            let base = c * nx;
            let shift = self.channel_shift(c);
            for i in 0..nx {
                let row = base + i;
                let mut row_entries: Vec<(usize, Complex64)> = Vec::with_capacity(3 + 1);
                if i > 0 {
                    row_entries.push((row - 1, Complex64::new(self.lower[i], 0.0)));
                }
                row_entries.push((row, Complex64::new(self.diag[i] + shift, 0.0)));
                if i + 1 < nx {
                    row_entries.push((row + 1, Complex64::new(self.upper[i], 0.0)));
                }
                if self.flip_strength != 0.0 {
                    for j in (0..n).filter(|&j| self.sites[j] == i) {
                        let partner = c ^ (1 << j);
                        row_entries.push((
                            partner * nx + i,
                            flip_value(SpinConfig::from_index(c), j, self.flip_strength),
                        ));
                    }
                }
                row_entries.sort_by_key(|&(col, _)| col);
                out.extend(row_entries.into_iter().map(|(col, v)| (row, col, v)));
            }
        }
        out
    }

    /// Writes the sparsity pattern as `row col re im` lines.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Largest `|H[r,c] - conj(H[c,r])|` over the stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .into_iter()
            .map(|(r, c, v)| (v - self.entry(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `out = H v` on raw channel-major slices.
    pub(crate) fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let nx = self.nx;
        out.par_chunks_mut(nx).enumerate().for_each(|(c, out_c)| {
            self.apply_block(c, v, out_c);
        });
    }

    /// Row block `c` of `H v`.
    fn apply_block(&self, c: usize, v: &[Complex64], out_c: &mut [Complex64]) {
        let nx = self.nx;
        let vc = &v[c * nx..(c + 1) * nx];
        let shift = self.channel_shift(c);
        out_c[0] = vc[0] * (self.diag[0] + shift) + vc[1] * self.upper[0];
        for i in 1..nx - 1 {
            out_c[i] = vc[i - 1] * self.lower[i]
                + vc[i] * (self.diag[i] + shift)
                + vc[i + 1] * self.upper[i];
        }
        out_c[nx - 1] = vc[nx - 2] * self.lower[nx - 1] + vc[nx - 1] * (self.diag[nx - 1] + shift);
        if self.flip_strength != 0.0 {
            let channel = SpinConfig::from_index(c);
            for (j, &site) in self.sites.iter().enumerate() {
                let partner = c ^ (1 << j);
                out_c[site] += flip_value(channel, j, self.flip_strength) * v[partner * nx + site];
            }
        }
    }

    /// Matrix-vector product `H v`.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        self.check_state(v)?;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_into(v.values(), &mut out);
        v.with_values(out)
    }

    pub(crate) fn check_state(&self, v: &StateVector) -> Result<()> {
        if v.channels() != self.channels() || v.nx() != self.nx {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// Matrix-vector product `H v`.
pub fn apply_h(h: &DiscreteHamiltonian, v: &StateVector) -> Result<StateVector> {
    h.apply(v)
}

/// The Crank-Nicolson pair `A = I + i tau H`, `B = I - i tau H` with
/// `tau = dt / (2 hbar)`; one step solves `A psi_next = B psi`.
#[derive(Debug, Clone)]
pub struct CnSystem {
    hamiltonian: Arc<DiscreteHamiltonian>,
    dt: f64,
    hbar: f64,
}

/// Builds the Crank-Nicolson operators for time step `dt`.
pub fn assemble_cn(h: Arc<DiscreteHamiltonian>, dt: f64, hbar: f64) -> Result<CnSystem> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::parameter("dt", format!("{dt} must be positive")));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::parameter("hbar", format!("{hbar} must be positive")));
    }
    Ok(CnSystem {
        hamiltonian: h,
        dt,
        hbar,
    })
}

impl CnSystem {
    pub fn hamiltonian(&self) -> &DiscreteHamiltonian {
        &self.hamiltonian
    }

    pub fn hamiltonian_arc(&self) -> &Arc<DiscreteHamiltonian> {
        &self.hamiltonian
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// `dt / (2 hbar)`; negative for a time-reversed system.
    pub fn tau(&self) -> f64 {
        self.dt / (2.0 * self.hbar)
    }

    /// The system stepping backwards in time (`dt -> -dt`), which swaps the
    /// roles of `A` and `B`.
    pub fn time_reversed(&self) -> CnSystem {
        CnSystem {
            hamiltonian: Arc::clone(&self.hamiltonian),
            dt: -self.dt,
            hbar: self.hbar,
        }
    }

    pub fn lhs_entry(&self, row: usize, col: usize) -> Complex64 {
        let id = if row == col { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) + Complex64::i() * self.tau() * self.hamiltonian.entry(row, col)
    }

    pub fn rhs_entry(&self, row: usize, col: usize) -> Complex64 {
        let id = if row == col { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - Complex64::i() * self.tau() * self.hamiltonian.entry(row, col)
    }

    /// Entries of `A` on the pattern of `H` (which already contains the full
    /// diagonal).
    pub fn lhs_triplets(&self) -> Vec<(usize, usize, Complex64)> {
        self.scaled_triplets(1.0)
    }

    pub fn rhs_triplets(&self) -> Vec<(usize, usize, Complex64)> {
        self.scaled_triplets(-1.0)
    }

    fn scaled_triplets(&self, sign: f64) -> Vec<(usize, usize, Complex64)> {
        let z = Complex64::new(0.0, sign * self.tau());
        self.hamiltonian
            .triplets()
            .into_iter()
            .map(|(r, c, v)| {
                let id = if r == c { 1.0 } else { 0.0 };
                (r, c, Complex64::new(id, 0.0) + z * v)
            })
            .collect()
    }

    /// `out = v + i s tau H v` for `s = +1` (A) or `s = -1` (B).
    pub(crate) fn apply_shifted(&self, sign: f64, v: &[Complex64], out: &mut [Complex64]) {
        self.hamiltonian.apply_into(v, out);
        let z = Complex64::new(0.0, sign * self.tau());
        out.par_iter_mut()
            .zip(v.par_iter())
            .for_each(|(o, x)| *o = x + z * *o);
    }

    pub fn apply_lhs(&self, v: &StateVector) -> Result<StateVector> {
        self.hamiltonian.check_state(v)?;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_shifted(1.0, v.values(), &mut out);
        v.with_values(out)
    }

    pub fn apply_rhs(&self, v: &StateVector) -> Result<StateVector> {
        self.hamiltonian.check_state(v)?;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        self.apply_shifted(-1.0, v.values(), &mut out);
        v.with_values(out)
    }
}
