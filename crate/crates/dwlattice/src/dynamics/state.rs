use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid1D;
use crate::stationary::{in_left_half, inner};

/// Two-component wavefunction (m_F = −1, 0) on one unit cell.
///
/// Grid functions are normalized as Σ_j |ψ_j|² summed over both components.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorState {
    pub psi_minus1: Vec<Complex64>,
    pub psi_0: Vec<Complex64>,
    pub grid: Grid1D,
    /// μs.
    pub time: f64,
}

impl SpinorState {
    pub fn new(grid: Grid1D, psi_minus1: Vec<Complex64>, psi_0: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        for comp in [&psi_minus1, &psi_0] {
            if comp.len() != grid.n {
                return Err(Error::SizeMismatch { expected: grid.n, got: comp.len() });
            }
            if comp.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(invalid("state", "non-finite amplitude"));
            }
        }
        Ok(Self { psi_minus1, psi_0, grid, time: 0.0 })
    }

    /// Places a normalized grid function in one spin component.
    pub fn from_component(grid: Grid1D, psi: Vec<Complex64>, m_f: i32) -> Result<Self> {
        let zero = vec![Complex64::new(0.0, 0.0); psi.len()];
        match m_f {
            -1 => Self::new(grid, psi, zero),
            0 => Self::new(grid, zero, psi),
            other => Err(Error::UnsupportedSpin(other)),
        }
    }

    /// Equal-weight superposition of the same spatial state in both components.
    pub fn equal_superposition(grid: Grid1D, psi: &[Complex64]) -> Result<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let comp: Vec<Complex64> = psi.iter().map(|v| v * s).collect();
        Self::new(grid, comp.clone(), comp)
    }

    pub fn component(&self, m_f: i32) -> Result<&[Complex64]> {
        match m_f {
            -1 => Ok(&self.psi_minus1),
            0 => Ok(&self.psi_0),
            other => Err(Error::UnsupportedSpin(other)),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.population(-1) + self.population(0)
    }

    /// Total weight of one spin component.
    pub fn population(&self, m_f: i32) -> f64 {
        let comp = if m_f == -1 { &self.psi_minus1 } else { &self.psi_0 };
        comp.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.psi_minus1.iter_mut().chain(self.psi_0.iter_mut()).for_each(|v| *v /= n);
        }
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &SpinorState) -> f64 {
        (inner(&self.psi_minus1, &other.psi_minus1) + inner(&self.psi_0, &other.psi_0)).norm_sqr()
    }

    pub fn conjugated(&self) -> Self {
        let conj = |v: &Vec<Complex64>| v.iter().map(|c| c.conj()).collect();
        Self { psi_minus1: conj(&self.psi_minus1), psi_0: conj(&self.psi_0), grid: self.grid, time: self.time }
    }
}

/// Left/right weights of each spin component.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SitePopulations {
    /// (P_L, P_R) of m_F = −1.
    pub minus1: (f64, f64),
    /// (P_L, P_R) of m_F = 0.
    pub zero: (f64, f64),
}

impl SitePopulations {
    pub fn total(&self) -> f64 {
        self.minus1.0 + self.minus1.1 + self.zero.0 + self.zero.1
    }

    /// Fraction of component `m_f` found in the right half-cell.
    pub fn fraction_right(&self, m_f: i32) -> f64 {
        let (l, r) = if m_f == -1 { self.minus1 } else { self.zero };
        if l + r > 0.0 {
            r / (l + r)
        } else {
            0.0
        }
    }
}

/// Ideal projective readout of the sublattice occupation per spin.
pub fn measure_site_populations(state: &SpinorState, barrier: f64) -> SitePopulations {
    let x = state.grid.positions();
    let split = |psi: &[Complex64]| {
        psi.iter().zip(&x).fold((0.0, 0.0), |(l, r), (v, &xj)| {
            if in_left_half(xj, barrier) {
                (l + v.norm_sqr(), r)
            } else {
                (l, r + v.norm_sqr())
            }
        })
    };
    SitePopulations { minus1: split(&state.psi_minus1), zero: split(&state.psi_0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(grid: &Grid1D, center: f64, width: f64) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|x| Complex64::new((-(x - center).powi(2) / (2.0 * width * width)).exp(), 0.0))
            .collect();
        let n = inner(&v, &v).re.sqrt();
        v.iter_mut().for_each(|c| *c /= n);
        v
    }

    #[test]
    fn left_well_state_reads_left() {
        let g = Grid1D::unit_cell(128).unwrap();
        let s = SpinorState::from_component(g, bump(&g, 0.25, 0.03), 0).unwrap();
        let p = measure_site_populations(&s, 0.5);
        assert!((p.zero.0 - 1.0).abs() < 1e-12 && p.zero.1 < 1e-12);
        assert_eq!(p.minus1, (0.0, 0.0));
        assert!((p.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_length() {
        let g = Grid1D::unit_cell(32).unwrap();
        assert!(SpinorState::new(g, vec![Complex64::default(); 16], vec![Complex64::default(); 32]).is_err());
        assert!(SpinorState::from_component(g, vec![Complex64::default(); 32], 1).is_err());
    }

    #[test]
    fn fidelity_of_conjugate_pair() {
        let g = Grid1D::unit_cell(64).unwrap();
        let mut psi = bump(&g, 0.4, 0.05);
        psi.iter_mut().enumerate().for_each(|(j, v)| *v *= Complex64::cis(0.1 * j as f64));
        let s = SpinorState::equal_superposition(g, &psi).unwrap();
        assert!((s.fidelity(&s) - 1.0).abs() < 1e-12);
        assert!((s.conjugated().conjugated().fidelity(&s) - 1.0).abs() < 1e-12);
        assert!((s.population(-1) - 0.5).abs() < 1e-12);
    }
}
