use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use super::propagate::Propagator;
use super::schedule::{ControlSchedule, RampShape, Segment};
use super::state::{measure_site_populations, SitePopulations, SpinorState};
use crate::error::{invalid, Result};
use crate::field::LatticeControls;
use crate::stationary::{barrier_position, build_hamiltonian, lowest_eigenpairs, KineticModel};

/// Two-step spin-dependent transport.
///
/// Step 1 deforms the λ-lattice at `start` into a mixed lattice with depths
/// (`step1_v_half`, `step1_v_lambda`) while dx moves to its final value.
/// Step 2 holds dx and ramps into a pure λ/2-lattice of depth `final_v_half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportProtocol {
    pub start: LatticeControls,
    /// μs.
    pub step1_duration: f64,
    pub step1_v_half: f64,
    pub step1_v_lambda: f64,
    pub step1_shape: RampShape,
    pub dx_shape: RampShape,
    /// μs.
    pub step2_duration: f64,
    pub step2_shape: RampShape,
    pub final_v_half: f64,
    /// μs.
    pub dt: f64,
}

impl Default for TransportProtocol {
    fn default() -> Self {
        Self {
            start: LatticeControls::new(0.0, 100.0, -0.62, FRAC_PI_2),
            step1_duration: 300.0,
            step1_v_half: 26.0,
            step1_v_lambda: 99.0,
            step1_shape: RampShape::MinimumJerk,
            dx_shape: RampShape::Linear,
            step2_duration: 100.0,
            step2_shape: RampShape::Linear,
            final_v_half: 40.0,
            dt: 0.01,
        }
    }
}

impl TransportProtocol {
    pub fn total_duration(&self) -> f64 {
        self.step1_duration + self.step2_duration
    }

    /// Controls at the end of step 2.
    pub fn final_controls(&self, dx_final: f64) -> LatticeControls {
        LatticeControls { v_half: self.final_v_half, v_lambda: 0.0, dx: dx_final, ..self.start }
    }

    pub fn schedule(&self, dx_final: f64) -> Result<ControlSchedule> {
        if !(-0.5..=-0.3).contains(&dx_final) {
            return Err(invalid("dx_final", format!("must lie in [-0.5, -0.3], got {dx_final}")));
        }
        let mid = LatticeControls { v_half: self.step1_v_half, v_lambda: self.step1_v_lambda, dx: dx_final, ..self.start };
        let step1 = Segment::new(self.step1_duration, self.start, mid, self.step1_shape).with_dx_shape(self.dx_shape);
        let step2 = Segment::new(self.step2_duration, mid, self.final_controls(dx_final), self.step2_shape);
        ControlSchedule::new(vec![step1, step2], vec![], self.dt)
    }

    /// Motional ground state of the starting λ-lattice for spin `m_f`.
    pub fn initial_state(&self, prop: &mut Propagator, m_f: i32) -> Result<Vec<Complex64>> {
        let (v_m1, v_0, _) = prop.potentials(&self.start, None)?;
        let v = match m_f {
            -1 => v_m1,
            0 => v_0,
            other => return Err(crate::error::Error::UnsupportedSpin(other)),
        };
        let h = build_hamiltonian(prop.grid(), &v, prop.constants(), KineticModel::Spectral)?;
        Ok(lowest_eigenpairs(&h, 1, 1e-2)?.states.remove(0))
    }
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    pub state: SpinorState,
    pub populations: SitePopulations,
}

/// Runs both transport steps ending at `dx_final`.
pub fn transport_sequence(
    prop: &mut Propagator,
    state: SpinorState,
    protocol: &TransportProtocol,
    dx_final: f64,
) -> Result<TransportResult> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(crate::error::Error::NotNormalized(norm));
    }
    let schedule = protocol.schedule(dx_final)?;
    let mut state = state;
    prop.run(&mut state, &schedule)?;
    let (_, v0, _) = prop.potentials(&protocol.final_controls(dx_final), None)?;
    let barrier = barrier_position(&prop.grid().positions(), &v0);
    let populations = measure_site_populations(&state, barrier);
    Ok(TransportResult { state, populations })
}
