//! Spin configurations of the detector array.
//!
//! A configuration of `n` two-level detectors is stored as an `n`-bit mask.
//! Bit `j` refers to the `j`-th detector in ascending position order; a set
//! bit means the spin is up (excited), a clear bit means down. The all-down
//! configuration, mask `0`, is the initial environment state and the lowest
//! energy level.

use crate::error::{Error, Result};

/// Largest supported detector count. Masks live in a `u32`; in practice the
/// state vector for `n` well below this limit already exhausts memory.
pub const MAX_SPINS: usize = 24;

/// Number of spin configurations for `n` detectors.
pub fn channel_count(n: usize) -> usize {
    1usize << n
}

/// One of the `2^n` spin configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SpinConfig(u32);

impl SpinConfig {
    /// All spins down.
    pub const GROUND: SpinConfig = SpinConfig(0);

    /// Validates that only the low `n` bits are set.
    pub fn new(mask: u32, n: usize) -> Result<Self> {
        check_spin_count(n)?;
        if n < 32 && mask >> n != 0 {
            return Err(Error::parameter(
                "mask",
                format!("{mask:#b} has bits above the {n} detector bits"),
            ));
        }
        Ok(SpinConfig(mask))
    }

    pub(crate) const fn from_index(index: usize) -> Self {
        SpinConfig(index as u32)
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    /// `+1` if spin `j` is up, `-1` if down.
    pub fn spin(self, j: usize) -> i32 {
        if self.0 >> j & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn is_up(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    /// Number of flipped (up) spins relative to the all-down state.
    pub fn flips(self) -> u32 {
        self.0.count_ones()
    }

    /// Renders the mask as `n` characters, detector 0 first.
    pub fn to_detector_string(self, n: usize) -> String {
        (0..n)
            .map(|j| if self.is_up(j) { '1' } else { '0' })
            .collect()
    }
}

fn check_spin_count(n: usize) -> Result<()> {
    if n > MAX_SPINS {
        return Err(Error::parameter(
            "num_spins",
            format!("{n} exceeds the supported maximum of {MAX_SPINS}"),
        ));
    }
    Ok(())
}

/// Iterates over all `2^n` configurations in mask order.
pub fn all_configs(n: usize) -> impl ExactSizeIterator<Item = SpinConfig> {
    (0..channel_count(n)).map(SpinConfig::from_index)
}

/// The configuration that differs from `c` only in spin `j`.
pub fn flip_partner(c: SpinConfig, j: usize, n: usize) -> Result<SpinConfig> {
    if j >= n {
        return Err(Error::DetectorIndex { index: j, count: n });
    }
    Ok(SpinConfig(c.0 ^ (1 << j)))
}

/// Sum of the spin values, `2 * popcount - n`.
pub fn spin_sum(c: SpinConfig, n: usize) -> i32 {
    2 * c.flips() as i32 - n as i32
}

/// All single-flip neighbours of `c`, ordered by detector index.
pub fn flip_neighbors(c: SpinConfig, n: usize) -> Vec<(usize, SpinConfig)> {
    (0..n).map(|j| (j, SpinConfig(c.0 ^ (1 << j)))).collect()
}

/// Bitwise complement within the low `n` bits.
pub fn complement(c: SpinConfig, n: usize) -> SpinConfig {
    SpinConfig(!c.0 & low_bits(n))
}

/// Exchanges each detector with its positional mirror image, `j <-> n-1-j`.
pub fn mirror(c: SpinConfig, n: usize) -> SpinConfig {
    let reversed = (0..n)
        .filter(|&j| c.is_up(j))
        .fold(0u32, |acc, j| acc | 1 << (n - 1 - j));
    SpinConfig(reversed)
}

fn low_bits(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Which side of the packet origin a detector sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Per-detector side labels, indexed like the mask bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideAssignment {
    sides: Vec<Side>,
    left_mask: u32,
    right_mask: u32,
}

impl SideAssignment {
    pub fn new(sides: Vec<Side>) -> Result<Self> {
        check_spin_count(sides.len())?;
        let mut left_mask = 0;
        let mut right_mask = 0;
        for (j, side) in sides.iter().enumerate() {
            match side {
                Side::Left => left_mask |= 1 << j,
                Side::Right => right_mask |= 1 << j,
            }
        }
        Ok(SideAssignment {
            sides,
            left_mask,
            right_mask,
        })
    }

    /// Labels detectors by the sign of their position relative to `origin`.
    pub fn from_positions(positions: &[f64], origin: f64) -> Result<Self> {
        let sides = positions
            .iter()
            .map(|&y| if y < origin { Side::Left } else { Side::Right })
            .collect();
        Self::new(sides)
    }

    /// First half left, second half right: the labelling of any layout that
    /// is mirror symmetric about the origin.
    pub fn symmetric(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::parameter("num_spins", format!("{n} is not even")));
        }
        Self::new(
            (0..n)
                .map(|j| if j < n / 2 { Side::Left } else { Side::Right })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    pub fn side(&self, j: usize) -> Side {
        self.sides[j]
    }

    pub fn as_slice(&self) -> &[Side] {
        &self.sides
    }

    pub fn count(&self, side: Side) -> usize {
        self.sides.iter().filter(|&&s| s == side).count()
    }
}

/// Coarse classification of a configuration by where its flips are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfigClass {
    /// No spin flipped.
    Unchanged,
    /// Exactly one spin flipped.
    OneSpin,
    /// Two or more flips, all on the left.
    LeftTrack,
    /// Two or more flips, all on the right.
    RightTrack,
    /// Flips on both sides.
    MultipleTracks,
}

impl ConfigClass {
    pub const ALL: [ConfigClass; 5] = [
        ConfigClass::Unchanged,
        ConfigClass::OneSpin,
        ConfigClass::LeftTrack,
        ConfigClass::RightTrack,
        ConfigClass::MultipleTracks,
    ];
}

/// Classifies `c` relative to the all-down initial configuration.
pub fn classify(c: SpinConfig, sides: &SideAssignment) -> ConfigClass {
    match c.flips() {
        0 => ConfigClass::Unchanged,
        1 => ConfigClass::OneSpin,
        _ => {
            let on_left = c.0 & sides.left_mask != 0;
            let on_right = c.0 & sides.right_mask != 0;
            match (on_left, on_right) {
                (true, false) => ConfigClass::LeftTrack,
                (false, true) => ConfigClass::RightTrack,
                _ => ConfigClass::MultipleTracks,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lr(n: usize) -> SideAssignment {
        SideAssignment::symmetric(n).unwrap()
    }

    #[test]
    fn flip_partner_examples() {
        assert_eq!(
            flip_partner(SpinConfig(0b0000), 2, 4).unwrap().mask(),
            0b0100
        );
        assert_eq!(
            flip_partner(SpinConfig(0b0101), 0, 4).unwrap().mask(),
            0b0100
        );
        assert_eq!(
            flip_partner(SpinConfig(0), 4, 4),
            Err(Error::DetectorIndex { index: 4, count: 4 })
        );
    }

    #[test]
    fn flip_partner_is_involution_changing_one_bit() {
        for n in 1..=12 {
            for c in all_configs(n) {
                for j in 0..n {
                    let p = flip_partner(c, j, n).unwrap();
                    assert_eq!((p.mask() ^ c.mask()).count_ones(), 1);
                    assert_eq!(flip_partner(p, j, n).unwrap(), c);
                }
            }
        }
    }

    #[test]
    fn spin_sum_examples() {
        assert_eq!(spin_sum(SpinConfig(0b0000), 4), -4);
        assert_eq!(spin_sum(SpinConfig(0b1111), 4), 4);
        assert_eq!(spin_sum(SpinConfig(0b0011), 4), 0);
    }

    #[test]
    fn mask_validation() {
        assert!(SpinConfig::new(0b1111, 4).is_ok());
        assert!(SpinConfig::new(0b10000, 4).is_err());
        assert!(SpinConfig::new(0, 25).is_err());
    }

    #[test]
    fn classify_examples() {
        let sides = lr(4);
        assert_eq!(classify(SpinConfig(0), &sides), ConfigClass::Unchanged);
        assert_eq!(classify(SpinConfig(0b0010), &sides), ConfigClass::OneSpin);
        assert_eq!(classify(SpinConfig(0b0011), &sides), ConfigClass::LeftTrack);
        assert_eq!(
            classify(SpinConfig(0b1100), &sides),
            ConfigClass::RightTrack
        );
        assert_eq!(
            classify(SpinConfig(0b0101), &sides),
            ConfigClass::MultipleTracks
        );
    }

    #[test]
    fn classify_partitions_and_counts() {
        for n in (2..=12).step_by(2) {
            let sides = lr(n);
            let h = n as u64 / 2;
            let mut counts = [0u64; 5];
            for c in all_configs(n) {
                counts[classify(c, &sides) as usize] += 1;
            }
            assert_eq!(counts.iter().sum::<u64>(), 1 << n);
            // Tracks on one side: subsets of size >= 2 of that side.
            let track = (1u64 << h) - 1 - h;
            assert_eq!(
                counts,
                [
                    1,
                    n as u64,
                    track,
                    track,
                    (1 << n) - 1 - n as u64 - 2 * track
                ]
            );
        }
    }

    #[test]
    fn mirror_swaps_track_sides() {
        for n in (2..=12).step_by(2) {
            let sides = lr(n);
            for c in all_configs(n) {
                let expected = match classify(c, &sides) {
                    ConfigClass::LeftTrack => ConfigClass::RightTrack,
                    ConfigClass::RightTrack => ConfigClass::LeftTrack,
                    other => other,
                };
                assert_eq!(classify(mirror(c, n), &sides), expected);
            }
        }
    }

    #[test]
    fn flip_neighbors_examples() {
        let v = flip_neighbors(SpinConfig(0b00), 2);
        assert_eq!(v, vec![(0, SpinConfig(0b01)), (1, SpinConfig(0b10))]);
        let v = flip_neighbors(SpinConfig(0b01), 2);
        assert_eq!(v, vec![(0, SpinConfig(0b00)), (1, SpinConfig(0b11))]);
    }

    #[test]
    fn detector_string_is_detector_ordered() {
        assert_eq!(SpinConfig(0b0001).to_detector_string(4), "1000");
        assert_eq!(SpinConfig(0b1100).to_detector_string(4), "0011");
    }

    #[test]
    fn sides_from_positions() {
        let s = SideAssignment::from_positions(&[-0.5, -0.4, 0.4, 0.5], 0.0).unwrap();
        assert_eq!(s, lr(4));
        assert_eq!(s.count(Side::Left), 2);
    }

    proptest! {
        #[test]
        fn spin_sum_antisymmetric_under_complement(n in 1usize..=24, raw in any::<u32>()) {
            let c = SpinConfig::new(raw & low_bits(n), n).unwrap();
            prop_assert_eq!(spin_sum(c, n) + spin_sum(complement(c, n), n), 0);
            let s = spin_sum(c, n);
            prop_assert!(s.abs() <= n as i32);
            prop_assert_eq!((s - n as i32).rem_euclid(2), 0);
        }

        #[test]
        fn flip_neighbors_has_n_entries(n in 1usize..=24, raw in any::<u32>()) {
            let c = SpinConfig::new(raw & low_bits(n), n).unwrap();
            let v = flip_neighbors(c, n);
            prop_assert_eq!(v.len(), n);
            for (j, p) in v {
                prop_assert_eq!(p, flip_partner(c, j, n).unwrap());
            }
        }
    }
}
