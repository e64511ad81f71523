//! Channel probabilities, their class aggregates, energy and arrival time.

use crate::assembly::DiscreteHamiltonian;
use crate::error::{Error, Result};
use crate::solver::RunRecord;
use crate::spinspace::{classify, ConfigClass, SideAssignment, SpinConfig};
use crate::state::StateVector;

/// `p[mask] = dx * sum_i |psi_mask(x_i)|^2` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProbabilities {
    pub t: f64,
    pub p: Vec<f64>,
}

impl ChannelProbabilities {
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Probabilities summed over [`ConfigClass`]es.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassProbabilities {
    pub t: f64,
    pub unchanged: f64,
    pub one_spin: f64,
    pub lrc_left: f64,
    pub lrc_right: f64,
    pub multiple_tracks: f64,
    pub total: f64,
}

impl ClassProbabilities {
    /// Track probability on one side, taken as the mean of both sides.
    pub fn lrc_one_side(&self) -> f64 {
        0.5 * (self.lrc_left + self.lrc_right)
    }

    /// `LRC_left + LRC_right`.
    pub fn two_lrc(&self) -> f64 {
        self.lrc_left + self.lrc_right
    }

    /// `2 LRC + OS + UC + MT`.
    pub fn row_sum(&self) -> f64 {
        self.two_lrc() + self.one_spin + self.unchanged + self.multiple_tracks
    }

    pub fn get(&self, class: ConfigClass) -> f64 {
        match class {
            ConfigClass::Unchanged => self.unchanged,
            ConfigClass::OneSpin => self.one_spin,
            ConfigClass::LeftTrack => self.lrc_left,
            ConfigClass::RightTrack => self.lrc_right,
            ConfigClass::MultipleTracks => self.multiple_tracks,
        }
    }
}

pub fn channel_probs(state: &StateVector, t: f64) -> ChannelProbabilities {
    let dx = state.dx();
    let p = (0..state.channels())
        .map(|m| dx * state.channel(m).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .collect();
    ChannelProbabilities { t, p }
}

pub fn class_probs(cp: &ChannelProbabilities, sides: &SideAssignment) -> ClassProbabilities {
    let mut out = ClassProbabilities {
        t: cp.t,
        ..Default::default()
    };
    for (mask, &p) in cp.p.iter().enumerate() {
        let slot = match classify(SpinConfig::from_index(mask), sides) {
            ConfigClass::Unchanged => &mut out.unchanged,
            ConfigClass::OneSpin => &mut out.one_spin,
            ConfigClass::LeftTrack => &mut out.lrc_left,
            ConfigClass::RightTrack => &mut out.lrc_right,
            ConfigClass::MultipleTracks => &mut out.multiple_tracks,
        };
        *slot += p;
        out.total += p;
    }
    out
}

/// `Re <psi, H psi>` in the discrete inner product.
pub fn energy(state: &StateVector, h: &DiscreteHamiltonian) -> Result<f64> {
    let hpsi = h.apply(state)?;
    Ok(state.inner(&hpsi)?.re)
}

/// First recorded time at which the unchanged probability falls below
/// `1 - drop`, or `None` if it never does.
pub fn arrival_time(record: &RunRecord, drop: f64) -> Result<Option<f64>> {
    if !(drop > 0.0 && drop < 1.0) {
        return Err(Error::parameter(
            "drop",
            format!("{drop} must lie in (0, 1)"),
        ));
    }
    if record.series.is_empty() {
        return Err(Error::parameter("record", "series is empty"));
    }
    Ok(record
        .series
        .iter()
        .find(|r| r.classes.unchanged < 1.0 - drop)
        .map(|r| r.t))
}
