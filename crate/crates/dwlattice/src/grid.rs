use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform periodic grid over `length` (units of λ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid1D {
    pub n: usize,
    pub length: f64,
}

impl Default for Grid1D {
    fn default() -> Self {
        Self { n: 256, length: 1.0 }
    }
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        let g = Self { n, length };
        g.validate()?;
        Ok(g)
    }

    pub fn unit_cell(n: usize) -> Result<Self> {
        Self::new(n, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(invalid("grid.n", format!("need at least 16 samples, got {}", self.n)));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(invalid("grid.length", "must be positive"));
        }
        Ok(())
    }

    pub fn dx_step(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx_step()).collect()
    }

    /// Spatial frequency of FFT bin `k`, in cycles per λ.
    pub fn frequency(&self, k: usize) -> f64 {
        let signed = if k <= self.n / 2 { k as f64 } else { k as f64 - self.n as f64 };
        signed / self.length
    }

    /// Kinetic energy E_R·ν² of every FFT bin, in units of E_R.
    pub fn kinetic_spectrum(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.frequency(k).powi(2)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_count_is_length() {
        let g = Grid1D::new(96, 2.0).unwrap();
        assert!((g.dx_step() * g.n as f64 - g.length).abs() < 1e-15);
        assert_eq!(g.positions().len(), 96);
    }

    #[test]
    fn fft_frequencies_are_signed() {
        let g = Grid1D::unit_cell(16).unwrap();
        assert_eq!(g.frequency(1), 1.0);
        assert_eq!(g.frequency(8), 8.0);
        assert_eq!(g.frequency(15), -1.0);
        assert!(Grid1D::unit_cell(8).is_err());
    }
}
