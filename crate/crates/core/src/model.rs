//! Physical parameters, grids, detector layout and the initial wave packet.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spinspace::{channel_count, SideAssignment, MAX_SPINS};
use crate::state::StateVector;

/// Multiplier applied to the particle-spin flip coupling.
///
/// The discrete detector stencil and the continuum jump condition differ by a
/// factor of two in the flip term. `One` follows the discrete stencil and is
/// the setting that reproduces the published probability tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CouplingFactor {
    #[default]
    One,
    Two,
}

impl CouplingFactor {
    pub fn value(self) -> f64 {
        match self {
            CouplingFactor::One => 1.0,
            CouplingFactor::Two => 2.0,
        }
    }

    pub fn from_value(k: u8) -> Result<Self> {
        match k {
            1 => Ok(CouplingFactor::One),
            2 => Ok(CouplingFactor::Two),
            other => Err(Error::parameter("kappa", format!("{other} is not 1 or 2"))),
        }
    }
}

/// Physical constants of the particle, the spins and their interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    /// Half the energy gap of a single spin.
    pub alpha: f64,
    /// Strength of the spin-independent point interaction.
    pub beta: f64,
    /// Strength of the spin-flip coupling.
    pub rho: f64,
    /// Mean momentum of each half of the initial packet.
    pub p0: f64,
    /// Gaussian width.
    pub sigma: f64,
    /// The Gaussian is cut to `|x - x0| < trunc_a`.
    pub trunc_a: f64,
    pub x0: f64,
    pub kappa: CouplingFactor,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        positive("hbar", self.hbar)?;
        positive("mass", self.mass)?;
        non_negative("alpha", self.alpha)?;
        non_negative("beta", self.beta)?;
        non_negative("rho", self.rho)?;
        finite("p0", self.p0)?;
        positive("sigma", self.sigma)?;
        positive("trunc_a", self.trunc_a)?;
        finite("x0", self.x0)?;
        Ok(())
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::parameter(name, format!("{v} is not finite")));
    }
    Ok(())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v <= 0.0 {
        return Err(Error::parameter(name, format!("{v} must be positive")));
    }
    Ok(())
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    finite(name, v)?;
    if v < 0.0 {
        return Err(Error::parameter(name, format!("{v} must be non-negative")));
    }
    Ok(())
}

/// How the `n/2` detectors of one cluster are spread around its centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LayoutRule {
    /// Offsets `-d/2, +d/2, -3d/2, +3d/2, ...` from the cluster centre
    /// (inward first), truncated to `n/2` entries.
    #[default]
    Alternating,
    /// `n/2` points with spacing `d` centred exactly on the cluster centre.
    Centered,
}

/// Domain size and detector arrangement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// The domain is `[-half_length, half_length]`.
    pub half_length: f64,
    /// Distance of each cluster centre from the origin.
    pub cluster_distance: f64,
    /// Spacing between neighbouring detectors of a cluster.
    pub spacing: f64,
    pub num_spins: usize,
    pub layout: LayoutRule,
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        positive("half_length", self.half_length)?;
        positive("cluster_distance", self.cluster_distance)?;
        positive("spacing", self.spacing)?;
        if self.cluster_distance >= self.half_length {
            return Err(Error::parameter(
                "cluster_distance",
                format!(
                    "{} must be smaller than the half length {}",
                    self.cluster_distance, self.half_length
                ),
            ));
        }
        if self.num_spins == 0 || !self.num_spins.is_multiple_of(2) {
            return Err(Error::parameter(
                "num_spins",
                format!("{} must be even and positive", self.num_spins),
            ));
        }
        if self.num_spins > MAX_SPINS {
            return Err(Error::parameter(
                "num_spins",
                format!(
                    "{} exceeds the supported maximum of {MAX_SPINS}",
                    self.num_spins
                ),
            ));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        channel_count(self.num_spins)
    }

    /// Detector positions before snapping, ascending.
    pub fn nominal_positions(&self) -> Vec<f64> {
        let per_side = self.num_spins / 2;
        let d = self.spacing;
        let offsets: Vec<f64> = match self.layout {
            LayoutRule::Alternating => (0..per_side)
                .map(|m| {
                    let k = (m / 2) as f64;
                    let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
                    sign * (2.0 * k + 1.0) * d / 2.0
                })
                .collect(),
            LayoutRule::Centered => (0..per_side)
                .map(|m| (m as f64 - (per_side as f64 - 1.0) / 2.0) * d)
                .collect(),
        };
        let mut ys: Vec<f64> = offsets
            .iter()
            .flat_map(|&o| [-(self.cluster_distance + o), self.cluster_distance + o])
            .collect();
        ys.sort_by(f64::total_cmp);
        ys
    }
}

/// Uniform spatial grid on `[-L, L]`. Indices are 0-based here: point `i`
/// sits at `-L + i * dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    half_length: f64,
    dx: f64,
    xs: Vec<f64>,
}

impl Grid {
    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Index of the grid point nearest to `y`; exact ties go to the left.
    pub fn nearest_index(&self, y: f64) -> usize {
        let f = (y + self.half_length) / self.dx;
        let last = self.nx() - 1;
        if f <= 0.0 {
            return 0;
        }
        let lo = (f.floor() as usize).min(last);
        if lo == last {
            return last;
        }
        if self.xs[lo + 1] - y < y - self.xs[lo] {
            lo + 1
        } else {
            lo
        }
    }
}

/// Builds the grid `x_i = -L + i * 2L/(nx-1)`, `i = 0..nx`.
pub fn build_grid(half_length: f64, nx: usize) -> Result<Grid> {
    positive("half_length", half_length)?;
    if nx < 3 {
        return Err(Error::parameter("nx", format!("{nx} must be at least 3")));
    }
    let intervals = (nx - 1) as f64;
    let dx = 2.0 * half_length / intervals;
    // Written so that x[i] == -x[nx-1-i] holds exactly.
    let xs = (0..nx)
        .map(|i| half_length * (2.0 * i as f64 - intervals) / intervals)
        .collect();
    Ok(Grid {
        half_length,
        dx,
        xs,
    })
}

/// Final time and number of Crank-Nicolson steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_star: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_star: f64, steps: usize) -> Result<Self> {
        positive("t_star", t_star)?;
        if steps == 0 {
            return Err(Error::parameter("steps", "must be at least 1"));
        }
        Ok(TimeGrid { t_star, steps })
    }

    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_star / self.steps as f64
    }

    /// `t_k`, exact at both ends.
    pub fn time(&self, k: usize) -> f64 {
        self.t_star * k as f64 / self.steps as f64
    }
}

/// Detector positions snapped onto the grid, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorLayout {
    nominal: Vec<f64>,
    indices: Vec<usize>,
    positions: Vec<f64>,
    sides: SideAssignment,
}

impl DetectorLayout {
    /// Builds a layout directly from grid indices; used for hand-made test
    /// configurations. Indices must be strictly increasing and interior.
    pub fn from_indices(grid: &Grid, indices: Vec<usize>) -> Result<Self> {
        let nx = grid.nx();
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Configuration(format!(
                    "detector indices must be strictly increasing, got {indices:?}"
                )));
            }
        }
        if let Some(&i) = indices.iter().find(|&&i| i == 0 || i >= nx - 1) {
            return Err(Error::Configuration(format!(
                "detector index {i} lies on the boundary of a {nx}-point grid"
            )));
        }
        let positions: Vec<f64> = indices.iter().map(|&i| grid.xs()[i]).collect();
        let sides = SideAssignment::from_positions(&positions, 0.0)?;
        Ok(DetectorLayout {
            nominal: positions.clone(),
            indices,
            positions,
            sides,
        })
    }

    pub fn num_spins(&self) -> usize {
        self.indices.len()
    }

    pub fn nominal(&self) -> &[f64] {
        &self.nominal
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn sides(&self) -> &SideAssignment {
        &self.sides
    }

    /// True when every detector index has a mirror partner `nx-1-i`.
    pub fn is_mirror_symmetric(&self, nx: usize) -> bool {
        self.indices
            .iter()
            .all(|&i| self.indices.binary_search(&(nx - 1 - i)).is_ok())
    }
}

/// Generates the nominal detector positions and snaps each to the nearest
/// grid point.
pub fn place_detectors(geom: &Geometry, grid: &Grid) -> Result<DetectorLayout> {
    geom.validate()?;
    let nominal = geom.nominal_positions();
    let l = grid.half_length();
    if let Some(&y) = nominal.iter().find(|&&y| y <= -l || y >= l) {
        return Err(Error::Configuration(format!(
            "detector at {y} lies outside the domain (-{l}, {l})"
        )));
    }
    let indices: Vec<usize> = nominal.iter().map(|&y| grid.nearest_index(y)).collect();
    for w in indices.windows(2) {
        if w[0] == w[1] {
            return Err(Error::Configuration(format!(
                "two detectors snap to grid index {} (dx = {:.4e} is too coarse for spacing {:.4e})",
                w[0],
                grid.dx(),
                geom.spacing
            )));
        }
    }
    if let Some(&i) = indices.iter().find(|&&i| i == 0 || i == grid.nx() - 1) {
        return Err(Error::Configuration(format!(
            "detector snaps to boundary index {i}"
        )));
    }
    let positions: Vec<f64> = indices.iter().map(|&i| grid.xs()[i]).collect();
    let sides = SideAssignment::from_positions(&positions, 0.0)?;
    Ok(DetectorLayout {
        nominal,
        indices,
        positions,
        sides,
    })
}

/// Initial state: all spins down, particle in a superposition of two
/// counter-propagating truncated Gaussians. Normalized in the discrete norm.
pub fn initial_state(params: &PhysicalParams, grid: &Grid, channels: usize) -> Result<StateVector> {
    params.validate()?;
    if channels == 0 {
        return Err(Error::parameter("channels", "must be at least 1"));
    }
    let mut state = StateVector::zeros(channels, grid.nx(), grid.dx());
    let k = params.p0 / params.hbar;
    let width = 4.0 * params.sigma * params.sigma;
    for (psi, &x) in state.channel_mut(0).iter_mut().zip(grid.xs()) {
        let u = x - params.x0;
        if u.abs() < params.trunc_a {
            let f = (-u * u / width).exp();
            *psi = f * (Complex64::from_polar(1.0, -k * u) + Complex64::from_polar(1.0, k * u));
        }
    }
    let norm2 = state.norm2();
    if norm2 == 0.0 {
        return Err(Error::parameter(
            "trunc_a",
            format!(
                "truncation half-width {} leaves no grid point inside the packet support",
                params.trunc_a
            ),
        ));
    }
    let c = norm2.sqrt().recip();
    state.channel_mut(0).iter_mut().for_each(|v| *v *= c);
    Ok(state)
}

/// A violated ordering among the parameter-regime assumptions. "Much less
/// than" is read as a factor of ten.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeWarning {
    BetaNotSmall { beta: f64, inverse_spacing: f64 },
    SpacingNotBelowWidth { spacing: f64, sigma: f64 },
    WidthNotSmallVsDistance { sigma: f64, distance: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RegimeWarning::BetaNotSmall {
                beta,
                inverse_spacing,
            } => write!(
                f,
                "beta << 1/d violated: beta = {beta:e}, 1/d = {inverse_spacing:e}"
            ),
            RegimeWarning::SpacingNotBelowWidth { spacing, sigma } => {
                write!(f, "d < sigma violated: d = {spacing:e}, sigma = {sigma:e}")
            }
            RegimeWarning::WidthNotSmallVsDistance { sigma, distance } => {
                write!(
                    f,
                    "sigma << D violated: sigma = {sigma:e}, D = {distance:e}"
                )
            }
        }
    }
}

const MUCH_LESS: f64 = 10.0;

/// Checks `beta << 1/d` and `d < sigma << D`. Never fails.
pub fn validate_regime(params: &PhysicalParams, geom: &Geometry) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    let inverse_spacing = 1.0 / geom.spacing;
    if params.beta * MUCH_LESS > inverse_spacing {
        out.push(RegimeWarning::BetaNotSmall {
            beta: params.beta,
            inverse_spacing,
        });
    }
    if geom.spacing >= params.sigma {
        out.push(RegimeWarning::SpacingNotBelowWidth {
            spacing: geom.spacing,
            sigma: params.sigma,
        });
    }
    if params.sigma * MUCH_LESS > geom.cluster_distance {
        out.push(RegimeWarning::WidthNotSmallVsDistance {
            sigma: params.sigma,
            distance: geom.cluster_distance,
        });
    }
    out
}

/// Everything needed to set up one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: PhysicalParams,
    pub geometry: Geometry,
    pub grid: Grid,
    pub time: TimeGrid,
}

impl Scenario {
    pub fn channels(&self) -> usize {
        self.geometry.channels()
    }

    pub fn layout(&self) -> Result<DetectorLayout> {
        place_detectors(&self.geometry, &self.grid)
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        initial_state(&self.params, &self.grid, self.channels())
    }

    /// Time for the packet centre to reach the cluster centres, `D m / p0`.
    pub fn predicted_arrival(&self) -> f64 {
        self.geometry.cluster_distance * self.params.mass / self.params.p0
    }
}

/// Reference configuration scaled by a single small parameter `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub epsilon: f64,
    pub num_spins: usize,
    pub rho: Option<f64>,
    pub kappa: CouplingFactor,
    pub layout: LayoutRule,
}

impl Preset {
    pub const HALF_LENGTH: f64 = 1.5;
    pub const T_STAR: f64 = 0.065;
    pub const NX: usize = 1000;
    pub const STEPS: usize = 350;

    pub fn new(epsilon: f64, num_spins: usize) -> Self {
        Preset {
            epsilon,
            num_spins,
            rho: None,
            kappa: CouplingFactor::default(),
            layout: LayoutRule::default(),
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn with_kappa(mut self, kappa: CouplingFactor) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_layout(mut self, layout: LayoutRule) -> Self {
        self.layout = layout;
        self
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let eps = self.epsilon;
        positive("epsilon", eps)?;
        let n = self.num_spins;
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::parameter(
                "num_spins",
                format!("{n} must be even and positive"),
            ));
        }
        let l = Self::HALF_LENGTH;
        let distance = l / 3.0;
        let eps4 = eps.powi(4);
        let params = PhysicalParams {
            hbar: eps,
            mass: 1.0,
            alpha: eps4,
            beta: eps4,
            rho: self.rho.unwrap_or(eps.powi(-2)),
            p0: 4.0 / (3.0 * eps),
            sigma: eps / 4.0,
            trunc_a: distance,
            x0: 0.0,
            kappa: self.kappa,
        };
        params.validate()?;
        let geometry = Geometry {
            half_length: l,
            cluster_distance: distance,
            spacing: eps / n as f64,
            num_spins: n,
            layout: self.layout,
        };
        geometry.validate()?;
        Ok(Scenario {
            params,
            geometry,
            grid: build_grid(l, Self::NX)?,
            time: TimeGrid::new(Self::T_STAR, Self::STEPS)?,
        })
    }
}

/// The reference configuration for `epsilon` and `num_spins`, optionally
/// with a different flip coupling.
pub fn preset_from_epsilon(epsilon: f64, num_spins: usize, rho: Option<f64>) -> Result<Scenario> {
    let mut preset = Preset::new(epsilon, num_spins);
    preset.rho = rho;
    preset.scenario()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_examples() {
        let g = build_grid(1.5, 1000).unwrap();
        assert_relative_eq!(g.dx(), 3.0 / 999.0, max_relative = 1e-15);
        assert_eq!(g.xs()[0], -1.5);
        assert_eq!(g.xs()[999], 1.5);
        let g = build_grid(1.0, 3).unwrap();
        assert_eq!(g.xs(), &[-1.0, 0.0, 1.0]);
        assert!(build_grid(1.0, 2).is_err());
        assert!(build_grid(-1.0, 10).is_err());
    }

    #[test]
    fn grid_spacing_and_symmetry_exact_to_rounding() {
        for nx in [3, 50, 999, 1000] {
            let g = build_grid(1.5, nx).unwrap();
            for w in g.xs().windows(2) {
                assert!((w[1] - w[0] - g.dx()).abs() <= 4.0 * f64::EPSILON * 1.5);
            }
            for i in 0..nx {
                assert_eq!(g.xs()[i], -g.xs()[nx - 1 - i]);
            }
        }
    }

    #[test]
    fn time_grid_derives_dt() {
        let t = TimeGrid::new(0.065, 350).unwrap();
        assert_relative_eq!(t.dt(), 0.065 / 350.0);
        assert_eq!(t.time(350), 0.065);
        assert_eq!(t.time(0), 0.0);
        assert!(TimeGrid::new(0.065, 0).is_err());
    }

    fn geom(n: usize, d: f64, layout: LayoutRule) -> Geometry {
        Geometry {
            half_length: 1.5,
            cluster_distance: 0.5,
            spacing: d,
            num_spins: n,
            layout,
        }
    }

    #[test]
    fn nominal_positions_four_detectors() {
        for rule in [LayoutRule::Alternating, LayoutRule::Centered] {
            let ys = geom(4, 0.025, rule).nominal_positions();
            let expected = [-0.5125, -0.4875, 0.4875, 0.5125];
            for (y, e) in ys.iter().zip(expected) {
                assert_relative_eq!(*y, e, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn nominal_positions_centered_two_detectors() {
        let ys = geom(2, 0.05, LayoutRule::Centered).nominal_positions();
        assert_eq!(ys, vec![-0.5, 0.5]);
    }

    #[test]
    fn nominal_positions_alternating_six_detectors() {
        let d = 0.1 / 6.0;
        let ys = geom(6, d, LayoutRule::Alternating).nominal_positions();
        let right = [0.5 - 1.5 * d, 0.5 - 0.5 * d, 0.5 + 0.5 * d];
        for (y, e) in ys[3..].iter().zip(right) {
            assert_relative_eq!(*y, e, epsilon = 1e-15);
        }
        for j in 0..3 {
            assert_eq!(ys[j], -ys[5 - j]);
        }
    }

    #[test]
    fn snapping_within_half_spacing_and_symmetric() {
        let grid = build_grid(1.5, 1000).unwrap();
        for n in [2, 4, 6, 8, 10, 12] {
            let g = geom(n, 0.1 / n as f64, LayoutRule::Alternating);
            let layout = place_detectors(&g, &grid).unwrap();
            for (y, s) in layout.nominal().iter().zip(layout.positions()) {
                assert!((y - s).abs() <= grid.dx() / 2.0 + 1e-15);
            }
            assert!(layout.is_mirror_symmetric(grid.nx()));
            assert_eq!(layout.sides().count(crate::spinspace::Side::Left), n / 2);
        }
    }

    #[test]
    fn nearest_index_ties_go_left() {
        let grid = build_grid(1.0, 3).unwrap();
        assert_eq!(grid.nearest_index(-0.5), 0);
        assert_eq!(grid.nearest_index(0.5), 1);
        assert_eq!(grid.nearest_index(0.51), 2);
    }

    #[test]
    fn coarse_grid_collision_is_an_error() {
        let grid = build_grid(1.5, 50).unwrap();
        let err = place_detectors(&geom(8, 0.0125, LayoutRule::Alternating), &grid).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }

    #[test]
    fn detector_outside_domain_is_an_error() {
        let grid = build_grid(0.6, 100).unwrap();
        let g = Geometry {
            half_length: 0.6,
            cluster_distance: 0.55,
            spacing: 0.2,
            num_spins: 4,
            layout: LayoutRule::Centered,
        };
        assert!(matches!(
            place_detectors(&g, &grid),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn initial_state_properties() {
        let sc = preset_from_epsilon(0.1, 4, None).unwrap();
        let psi = sc.initial_state().unwrap();
        assert!((psi.norm2() - 1.0).abs() <= 1e-14);
        let ch0 = psi.channel(0);
        let nx = sc.grid.nx();
        for i in 0..nx {
            assert_eq!(ch0[i], ch0[nx - 1 - i]);
        }
        for mask in 1..psi.channels() {
            assert!(psi.channel(mask).iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn initial_state_at_origin_is_twice_normalization() {
        // Odd grid so x = 0 is a grid point.
        let grid = build_grid(1.5, 1001).unwrap();
        let sc = preset_from_epsilon(0.1, 4, None).unwrap();
        let psi = initial_state(&sc.params, &grid, 1).unwrap();
        let raw_norm2: f64 = grid
            .xs()
            .iter()
            .filter(|x| x.abs() < sc.params.trunc_a)
            .map(|&x| {
                let f = (-x * x / (4.0 * sc.params.sigma.powi(2))).exp();
                let c = (sc.params.p0 * x / sc.params.hbar).cos();
                (2.0 * f * c).powi(2)
            })
            .sum::<f64>()
            * grid.dx();
        let c = raw_norm2.sqrt().recip();
        let v = psi.channel(0)[500];
        assert_relative_eq!(v.re, 2.0 * c, max_relative = 1e-13);
        assert!(v.im.abs() < 1e-13);
    }

    #[test]
    fn initial_state_empty_support_is_an_error() {
        let sc = preset_from_epsilon(0.1, 4, None).unwrap();
        let mut params = sc.params;
        params.trunc_a = 1e-4;
        let grid = build_grid(1.5, 1000).unwrap();
        assert!(initial_state(&params, &grid, 16).is_err());
    }

    #[test]
    fn preset_values() {
        let sc = preset_from_epsilon(0.1, 6, None).unwrap();
        assert_relative_eq!(sc.params.rho, 100.0, max_relative = 1e-12);
        assert_relative_eq!(sc.params.hbar, 0.1);
        assert_relative_eq!(sc.params.p0, 13.333333333333334, max_relative = 1e-12);
        assert_relative_eq!(sc.geometry.cluster_distance, 0.5);
        assert_relative_eq!(sc.predicted_arrival(), 0.0375, max_relative = 1e-12);
        let sc8 = preset_from_epsilon(0.1, 8, None).unwrap();
        assert_relative_eq!(sc8.geometry.spacing, 0.0125, max_relative = 1e-12);
        assert!(preset_from_epsilon(0.1, 5, None).is_err());
        assert_relative_eq!(
            preset_from_epsilon(0.1, 6, Some(150.0)).unwrap().params.rho,
            150.0
        );
    }

    #[test]
    fn regime_warnings() {
        let sc = preset_from_epsilon(0.1, 4, None).unwrap();
        let w = validate_regime(&sc.params, &sc.geometry);
        assert!(!w
            .iter()
            .any(|w| matches!(w, RegimeWarning::BetaNotSmall { .. })));
        assert!(!w
            .iter()
            .any(|w| matches!(w, RegimeWarning::WidthNotSmallVsDistance { .. })));

        let mut p = sc.params;
        p.sigma = 0.025;
        let mut g = sc.geometry;
        g.spacing = 0.05;
        let w = validate_regime(&p, &g);
        assert!(w
            .iter()
            .any(|w| matches!(w, RegimeWarning::SpacingNotBelowWidth { .. })));
        assert!(w[0].to_string().contains("d < sigma"));

        let mut g = sc.geometry;
        g.cluster_distance = p.sigma;
        let w = validate_regime(&p, &g);
        assert!(w
            .iter()
            .any(|w| matches!(w, RegimeWarning::WidthNotSmallVsDistance { .. })));
    }

    #[test]
    fn parameter_validation() {
        let sc = preset_from_epsilon(0.1, 4, None).unwrap();
        let mut p = sc.params;
        p.mass = 0.0;
        assert!(p.validate().is_err());
        let mut p = sc.params;
        p.rho = -1.0;
        assert!(p.validate().is_err());
        assert!(CouplingFactor::from_value(3).is_err());
        let mut g = sc.geometry;
        g.num_spins = 3;
        assert!(g.validate().is_err());
    }
}
