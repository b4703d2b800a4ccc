//! Second-order split-operator propagation of the spinor.
//!
//! One step is `K(dt/2)·V(dt)·K(dt/2)`. The kinetic factor is diagonal in
//! momentum space and applied through FFTs. The potential factor is the exact
//! exponential of the local 2×2 matrix
//!
//! ```text
//! [[V₋₁(x) − Z,          (Ω/2)·e^{iθ}        ],
//!  [(Ω/2)·e^{−iθ},       V₀(x) − ν_frame − Z ]]
//! ```
//!
//! in the frame rotating at ν_frame. Z is the bare Zeeman energy of m_F = −1,
//! a constant removed to keep the numbers small.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::TAU;
use std::sync::Arc;

use super::schedule::{ControlSchedule, RfDrive};
use super::state::SpinorState;
use crate::constants::{BiasField, PhysicalConstants};
use crate::error::{Error, Result};
use crate::field::{controls_to_beams, CutEvaluator, LatticeControls};
use crate::grid::Grid1D;

/// Largest step relative to the inverse potential energy scale.
pub const STABILITY_FACTOR: f64 = 20.0;

pub struct Propagator {
    grid: Grid1D,
    constants: PhysicalConstants,
    bias: BiasField,
    eval: CutEvaluator,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Kinetic energy per FFT bin, Hz.
    kinetic: Vec<f64>,
    scratch: Vec<Complex64>,
    v_m1: Vec<f64>,
    v_0: Vec<f64>,
    b_eff: Vec<f64>,
    steps: u64,
}

impl Propagator {
    pub fn new(grid: Grid1D, constants: PhysicalConstants, bias: BiasField) -> Result<Self> {
        grid.validate()?;
        constants.validate()?;
        bias.validate()?;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.n);
        let ifft = planner.plan_fft_inverse(grid.n);
        let scratch_len = fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len());
        let er = constants.recoil();
        Ok(Self {
            grid,
            constants,
            bias,
            eval: CutEvaluator::new(grid.positions()),
            fft,
            ifft,
            kinetic: grid.kinetic_spectrum().into_iter().map(|e| e * er).collect(),
            scratch: vec![Complex64::default(); scratch_len],
            v_m1: vec![0.0; grid.n],
            v_0: vec![0.0; grid.n],
            b_eff: vec![0.0; grid.n],
            steps: 0,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn bias(&self) -> &BiasField {
        &self.bias
    }

    /// Total number of potential sub-steps taken so far.
    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    fn default_frame(&self) -> f64 {
        self.bias.bare_transition(&self.constants)
    }

    fn kinetic_factor(&mut self, psi: &mut [Complex64], dt: f64) {
        let n = self.grid.n as f64;
        self.fft.process_with_scratch(psi, &mut self.scratch);
        for (v, e) in psi.iter_mut().zip(&self.kinetic) {
            *v *= Complex64::cis(-TAU * e * dt * 1e-6) / n;
        }
        self.ifft.process_with_scratch(psi, &mut self.scratch);
    }

    fn kinetic(&mut self, state: &mut SpinorState, dt: f64) {
        let mut m1 = std::mem::take(&mut state.psi_minus1);
        let mut m0 = std::mem::take(&mut state.psi_0);
        self.kinetic_factor(&mut m1, dt);
        self.kinetic_factor(&mut m0, dt);
        state.psi_minus1 = m1;
        state.psi_0 = m0;
    }

    fn load_potentials(&mut self, controls: &LatticeControls, frame: f64) -> Result<()> {
        let beams = controls_to_beams(controls, &self.constants)?;
        self.eval.evaluate(&beams, &self.bias, &self.constants, &mut self.v_m1, &mut self.v_0, &mut self.b_eff);
        let z = BiasField::zeeman_energy(&self.constants, -1, self.bias.magnitude);
        self.v_m1.iter_mut().for_each(|v| *v -= z);
        self.v_0.iter_mut().for_each(|v| *v -= frame + z);
        Ok(())
    }

    /// Largest stable step (μs) for the currently loaded potentials.
    fn loaded_limit(&self, rabi: f64) -> f64 {
        let (lo, hi) = self
            .v_m1
            .iter()
            .chain(&self.v_0)
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let scale = (hi - lo) + rabi;
        if scale > 0.0 {
            1e6 / (STABILITY_FACTOR * scale)
        } else {
            f64::INFINITY
        }
    }

    /// Largest stable step (μs) for the given controls and drive.
    pub fn stable_dt(&mut self, controls: &LatticeControls, drive: Option<RfDrive>, frame: Option<f64>) -> Result<f64> {
        let frame = frame.unwrap_or_else(|| self.default_frame());
        self.load_potentials(controls, frame)?;
        Ok(self.loaded_limit(drive.map_or(0.0, |d| d.rabi)))
    }

    fn potential(
        &mut self,
        state: &mut SpinorState,
        controls: &LatticeControls,
        drive: Option<RfDrive>,
        frame: f64,
        dt: f64,
    ) -> Result<()> {
        self.load_potentials(controls, frame)?;
        let rabi = drive.map_or(0.0, |d| d.rabi);
        let limit = self.loaded_limit(rabi);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::TimeStepTooLarge { dt, limit });
        }
        let phi = TAU * dt * 1e-6;
        let coupling = drive.map_or(Complex64::default(), |d| Complex64::from_polar(d.rabi / 2.0, d.phase));
        for j in 0..self.grid.n {
            let (a, d) = (self.v_m1[j], self.v_0[j]);
            let mean = 0.5 * (a + d);
            let half = 0.5 * (a - d);
            let w = (half * half + coupling.norm_sqr()).sqrt();
            let global = Complex64::cis(-phi * mean);
            let (sn, cs) = (phi * w).sin_cos();
            let sinc = if w > 0.0 { sn / w } else { 0.0 };
            // exp(−iφ(H − mean)) = cos(φw)·1 − i·sin(φw)/w·(H − mean)
            let u11 = Complex64::new(cs, -sinc * half);
            let u22 = Complex64::new(cs, sinc * half);
            let u12 = Complex64::new(0.0, -sinc) * coupling;
            let u21 = Complex64::new(0.0, -sinc) * coupling.conj();
            let (p1, p0) = (state.psi_minus1[j], state.psi_0[j]);
            state.psi_minus1[j] = global * (u11 * p1 + u12 * p0);
            state.psi_0[j] = global * (u21 * p1 + u22 * p0);
        }
        self.steps += 1;
        Ok(())
    }

    /// One Strang step of length `dt` μs with controls and drive held fixed.
    pub fn step(
        &mut self,
        state: &mut SpinorState,
        controls: &LatticeControls,
        drive: Option<RfDrive>,
        frame: Option<f64>,
        dt: f64,
    ) -> Result<()> {
        let frame = frame.unwrap_or_else(|| self.default_frame());
        self.kinetic(state, dt / 2.0);
        self.potential(state, controls, drive, frame, dt)?;
        self.kinetic(state, dt / 2.0);
        state.time += dt;
        Ok(())
    }

    /// Propagates through the whole schedule.
    ///
    /// Each interval between segment and pulse boundaries is split into
    /// equal steps no longer than `schedule.dt`; controls and drive are
    /// sampled at step midpoints. Adjacent half kinetic steps are fused.
    pub fn run(&mut self, state: &mut SpinorState, schedule: &ControlSchedule) -> Result<()> {
        schedule.validate()?;
        let frame = schedule.frame_frequency.unwrap_or_else(|| self.default_frame());
        let t0 = state.time;
        let pts = schedule.breakpoints();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let n = ((b - a) / schedule.dt - 1e-9).ceil().max(1.0) as usize;
            let h = (b - a) / n as f64;
            self.kinetic(state, h / 2.0);
            for i in 0..n {
                let t = a + (i as f64 + 0.5) * h;
                let controls = schedule.controls_at(t);
                let drive = schedule.rf_at(t, frame);
                self.potential(state, &controls, drive, frame, h)?;
                self.kinetic(state, if i + 1 == n { h / 2.0 } else { h });
            }
        }
        state.time = t0 + schedule.total_duration();
        Ok(())
    }

    /// ⟨H⟩ in Hz for fixed controls without rf, in the frame at `frame`.
    pub fn energy(&mut self, state: &SpinorState, controls: &LatticeControls, frame: Option<f64>) -> Result<f64> {
        let frame = frame.unwrap_or_else(|| self.default_frame());
        self.load_potentials(controls, frame)?;
        let n = self.grid.n as f64;
        let mut total = 0.0;
        for (psi, v) in [(&state.psi_minus1, &self.v_m1), (&state.psi_0, &self.v_0)] {
            let mut k = psi.clone();
            self.fft.process_with_scratch(&mut k, &mut self.scratch);
            total += k.iter().zip(&self.kinetic).map(|(a, e)| a.norm_sqr() * e).sum::<f64>() / n;
            total += psi.iter().zip(v.iter()).map(|(a, v)| a.norm_sqr() * v).sum::<f64>();
        }
        Ok(total)
    }

    /// V₋₁, V₀ (Hz, frame-shifted as in the step) and B_eff contribution for `controls`.
    pub fn potentials(&mut self, controls: &LatticeControls, frame: Option<f64>) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let frame = frame.unwrap_or_else(|| self.default_frame());
        self.load_potentials(controls, frame)?;
        Ok((self.v_m1.clone(), self.v_0.clone(), self.b_eff.clone()))
    }
}
