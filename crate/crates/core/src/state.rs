use num_complex::Complex64;

use crate::error::{Error, Result};

/// The full wavefunction on the grid: one complex profile per spin channel,
/// stored channel-major so that channel `mask` occupies
/// `values[mask * nx .. (mask + 1) * nx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<Complex64>,
    channels: usize,
    nx: usize,
    dx: f64,
}

impl StateVector {
    pub fn zeros(channels: usize, nx: usize, dx: f64) -> Self {
        StateVector {
            values: vec![Complex64::new(0.0, 0.0); channels * nx],
            channels,
            nx,
            dx,
        }
    }

    pub fn from_values(
        values: Vec<Complex64>,
        channels: usize,
        nx: usize,
        dx: f64,
    ) -> Result<Self> {
        if values.len() != channels * nx {
            return Err(Error::Dimension {
                expected: channels * nx,
                found: values.len(),
            });
        }
        Ok(StateVector {
            values,
            channels,
            nx,
            dx,
        })
    }

    /// A copy of `self` holding `values` instead.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::from_values(values, self.channels, self.nx, self.dx)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn channel(&self, mask: usize) -> &[Complex64] {
        &self.values[mask * self.nx..(mask + 1) * self.nx]
    }

    pub fn channel_mut(&mut self, mask: usize) -> &mut [Complex64] {
        &mut self.values[mask * self.nx..(mask + 1) * self.nx]
    }

    /// Discrete squared norm `dx * sum |psi|^2`.
    pub fn norm2(&self) -> f64 {
        self.dx * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// Discrete inner product `dx * sum conj(self) * other`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_shape(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.dx)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub(crate) fn check_same_shape(&self, other: &StateVector) -> Result<()> {
        if self.channels != other.channels || self.nx != other.nx {
            return Err(Error::Dimension {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(())
    }
}
