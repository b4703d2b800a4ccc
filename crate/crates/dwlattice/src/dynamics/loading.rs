use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::propagate::Propagator;
use super::schedule::{ControlSchedule, RampShape, Segment};
use super::state::SpinorState;
use crate::error::{invalid, Result};
use crate::field::LatticeControls;
use crate::stationary::{build_hamiltonian, ground_band_overlap, lowest_eigenpairs, EigenSolution, KineticModel};

/// Exponential switch-on of the lattice intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadingRamp {
    /// μs; zero means a sudden switch-on.
    pub duration: f64,
    /// Time constant, μs.
    pub tau: f64,
    /// μs.
    pub dt: f64,
}

impl Default for LoadingRamp {
    fn default() -> Self {
        Self { duration: 500.0, tau: 100.0, dt: 0.01 }
    }
}

#[derive(Debug, Clone)]
pub struct LoadResult {
    pub state: SpinorState,
    /// Weight on the two lowest eigenstates of the final lattice.
    pub overlap: f64,
    pub band: EigenSolution,
}

/// Ramps the lattice intensity from zero to `final_controls`, starting from
/// the uniform free-particle ground state in m_F = −1.
pub fn load_ground_state(prop: &mut Propagator, final_controls: &LatticeControls, ramp: &LoadingRamp) -> Result<LoadResult> {
    final_controls.validate()?;
    let grid = *prop.grid();
    let (v_m1, _, _) = prop.potentials(final_controls, None)?;
    let depth = v_m1.iter().copied().fold(f64::MIN, f64::max) - v_m1.iter().copied().fold(f64::MAX, f64::min);
    if depth < 10.0 * prop.constants().recoil() {
        return Err(invalid("controls", "final lattice must be at least 10 E_R deep"));
    }
    let h = build_hamiltonian(&grid, &v_m1, prop.constants(), KineticModel::Spectral)?;
    let band = lowest_eigenpairs(&h, 2, 1e-6 * depth)?;

    let amp = Complex64::new(1.0 / (grid.n as f64).sqrt(), 0.0);
    let mut state = SpinorState::from_component(grid, vec![amp; grid.n], -1)?;
    if ramp.duration > 0.0 {
        let start = LatticeControls { total_scale: 0.0, ..*final_controls };
        let seg = Segment::new(ramp.duration, start, *final_controls, RampShape::Exponential { tau: ramp.tau });
        let schedule = ControlSchedule::new(vec![seg], vec![], ramp.dt)?;
        prop.run(&mut state, &schedule)?;
    }
    let overlap = ground_band_overlap(&state.psi_minus1, &band)?;
    Ok(LoadResult { state, overlap, band })
}
