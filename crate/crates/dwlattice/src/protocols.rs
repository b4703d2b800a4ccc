//! Experiment scripts: control calibration, sublattice spectroscopy,
//! transport scans, Rabi readout via transport and the interferometer.
//!
//! Every experiment is a pure function of its inputs. Independent scan
//! points run in parallel and are collected in scan order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::constants::{BiasField, PhysicalConstants};
use crate::dynamics::{
    measure_site_populations, momentum_distribution, transport_sequence, ControlSchedule, Propagator, RampShape,
    RfPulse, Segment, SitePopulations, SpinorState, TofProfile, TransportProtocol,
};
use crate::error::{invalid, Error, Result};
use crate::field::{measure_lattice, sample_controls, LatticeControls};
use crate::fitting::{fit_damped_sine, fit_rabi_lineshape, fit_visibility, FitResult};
use crate::grid::Grid1D;
use crate::spectroscopy::{rabi_experiment, EnsembleSize, NoiseModel};
use crate::stationary::{barrier_position, solve_spin, transitions_for, TransitionTable};

/// Constants, bias field and the spatial grid shared by all experiments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub constants: PhysicalConstants,
    pub bias: BiasField,
    pub grid: Grid1D,
}

impl Physics {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.bias.validate()?;
        self.grid.validate()?;
        if (self.grid.length - 1.0).abs() > 1e-12 {
            return Err(invalid("grid.length", "experiments run on a single lattice cell of length 1"));
        }
        Ok(())
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(self.grid, self.constants, self.bias)
    }

    /// The same physics with the vector light shift switched off.
    pub fn without_vector_shift(mut self) -> Self {
        self.constants.alpha_v = 0.0;
        self
    }

    pub fn transitions(&self, controls: &LatticeControls) -> Result<TransitionTable> {
        transitions_for(controls, &self.bias, self.grid.n, &self.constants)
    }
}

/// Evenly spaced scan values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl ScanRange {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self> {
        let s = Self { start, stop, points };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(invalid("scan.points", "scan range must not be empty"));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(invalid("scan", "bounds must be finite"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }
}

/// Target of [`calibrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationTarget {
    /// ν_R − ν_L, Hz.
    pub splitting: f64,
    /// λ/2-lattice depth, E_R.
    pub v_half: f64,
    /// λ-lattice depth, E_R.
    pub v_lambda: f64,
    /// λ-lattice position, λ.
    pub dx: f64,
    /// Splitting tolerance, Hz.
    pub tolerance: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self { splitting: 32e3, v_half: 80.0, v_lambda: 20.0, dx: -0.5, tolerance: 1.0 }
    }
}

impl CalibrationTarget {
    pub fn new(splitting: f64, v_half: f64) -> Self {
        Self { splitting, v_half, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub controls: LatticeControls,
    /// Achieved ν_R − ν_L, Hz.
    pub splitting: f64,
    pub nu_left: f64,
    pub nu_right: f64,
    /// Measured (λ/2, λ) depths, E_R.
    pub depths: (f64, f64),
    /// |achieved − target| splitting, Hz.
    pub residual: f64,
    pub converged: bool,
    /// Largest splitting of the target's sign reachable at these depths, Hz.
    pub max_splitting: f64,
}

const CALIBRATION_ITERATIONS: usize = 80;

/// Finds the polarization phase and intensity scale that give the target
/// sublattice splitting at the target depths.
///
/// The splitting changes sign with pol_phase and grows monotonically towards ±π/2,
/// so the root is bracketed on the half-range of the target's sign. Depths
/// do not depend on pol_phase, and the intensity scale is corrected from the
/// measured depth after each phase solve.
pub fn calibrate(physics: &Physics, target: &CalibrationTarget) -> Result<CalibrationResult> {
    physics.validate()?;
    if !(target.splitting.is_finite() && target.tolerance > 0.0) {
        return Err(invalid("calibration.splitting", "must be finite with a positive tolerance"));
    }
    let mut controls = LatticeControls::new(target.v_half, target.v_lambda, target.dx, 0.0);
    controls.validate()?;
    if target.v_half <= 0.0 {
        return Err(invalid("calibration.v_half", "must be positive"));
    }
    let mut last = None;
    for _ in 0..4 {
        let (phase, table, max_splitting, converged) = solve_phase(physics, &controls, target)?;
        controls.pol_phase = phase;
        let cut = sample_controls(&controls, &physics.bias, physics.grid.n, &physics.constants)?;
        let m = measure_lattice(&cut.v_m0, &physics.constants);
        let depth_error = m.v_half / target.v_half - 1.0;
        last = Some(CalibrationResult {
            controls,
            splitting: table.splitting,
            nu_left: table.nu_left,
            nu_right: table.nu_right,
            depths: (m.v_half, m.v_lambda),
            residual: (table.splitting - target.splitting).abs(),
            converged,
            max_splitting,
        });
        if depth_error.abs() < 1e-9 || !converged {
            break;
        }
        controls.total_scale /= 1.0 + depth_error;
    }
    Ok(last.expect("at least one calibration pass"))
}

/// Returns (pol_phase, transitions, bracket-edge splitting, converged).
fn solve_phase(
    physics: &Physics,
    base: &LatticeControls,
    target: &CalibrationTarget,
) -> Result<(f64, TransitionTable, f64, bool)> {
    let eval = |phase: f64| physics.transitions(&LatticeControls { pol_phase: phase, ..*base });
    let zero = eval(0.0)?;
    if (zero.splitting - target.splitting).abs() <= target.tolerance {
        return Ok((0.0, zero, zero.splitting, true));
    }
    let mut lo = (0.0, zero.splitting - target.splitting);
    let mut best = (0.0, zero);
    let mut edge = None;
    for end in [-FRAC_PI_2, FRAC_PI_2] {
        let t = eval(end)?;
        let f = t.splitting - target.splitting;
        if f.signum() != lo.1.signum() {
            edge = Some(((end, f), t));
            break;
        }
        if (t.splitting - target.splitting).abs() < (best.1.splitting - target.splitting).abs() {
            best = (end, t);
        }
    }
    let Some((mut hi, hi_table)) = edge else {
        return Ok((best.0, best.1, best.1.splitting, false));
    };
    let max_splitting = hi_table.splitting;
    // Illinois variant of regula falsi.
    let mut side = 0;
    for _ in 0..CALIBRATION_ITERATIONS {
        let x = (lo.0 * hi.1 - hi.0 * lo.1) / (hi.1 - lo.1);
        let t = eval(x)?;
        let f = t.splitting - target.splitting;
        if f.abs() <= target.tolerance || (hi.0 - lo.0).abs() < 1e-12 {
            return Ok((x, t, max_splitting, f.abs() <= target.tolerance));
        }
        if f.signum() == hi.1.signum() {
            hi = (x, f);
            if side == -1 {
                lo.1 *= 0.5;
            }
            side = -1;
        } else {
            lo = (x, f);
            if side == 1 {
                hi.1 *= 0.5;
            }
            side = 1;
        }
    }
    let x = 0.5 * (lo.0 + hi.0);
    let t = eval(x)?;
    let ok = (t.splitting - target.splitting).abs() <= target.tolerance;
    Ok((x, t, max_splitting, ok))
}

/// rf frequency scan across both sublattice resonances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AddressingSpec {
    pub controls: LatticeControls,
    /// Hz.
    pub rabi: f64,
    /// μs.
    pub pulse_duration: f64,
    /// rf offsets from the bare transition, Hz. None centers a 41-point scan
    /// on the predicted resonances.
    pub scan: Option<ScanRange>,
    /// μs.
    pub dt: f64,
}

impl Default for AddressingSpec {
    fn default() -> Self {
        Self { controls: LatticeControls::default(), rabi: 1e6 / 60.0, pulse_duration: 30.0, scan: None, dt: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AddressingSpectrum {
    /// rf offset from the bare transition, Hz.
    pub offsets: Vec<f64>,
    pub p_remain_left: Vec<f64>,
    pub p_remain_right: Vec<f64>,
    /// Stationary-state resonances, Hz.
    pub predicted: TransitionTable,
    pub bare_transition: f64,
    pub fit_left: FitResult,
    pub fit_right: FitResult,
    /// Fitted ν_R − ν_L, Hz.
    pub fitted_splitting: f64,
    /// Transfer of R atoms by a pulse at the fitted L resonance.
    pub crosstalk_on_right: f64,
    /// Transfer of L atoms by a pulse at the fitted R resonance.
    pub crosstalk_on_left: f64,
}

impl AddressingSpectrum {
    pub fn crosstalk(&self) -> f64 {
        self.crosstalk_on_right.max(self.crosstalk_on_left)
    }
}

/// Remaining |−1⟩ population after one pulse applied to `initial`.
fn pulse_survival(physics: &Physics, spec: &AddressingSpec, initial: &SpinorState, frequency: f64) -> Result<f64> {
    let mut prop = physics.propagator()?;
    let pulse = RfPulse { rabi: spec.rabi, frequency, phase: 0.0, duration: spec.pulse_duration, start: 0.0 };
    let schedule =
        ControlSchedule::new(vec![Segment::hold(spec.pulse_duration, spec.controls)], vec![pulse], spec.dt)?
            .with_frame(frequency);
    let mut state = initial.clone();
    prop.run(&mut state, &schedule)?;
    Ok(state.population(-1))
}

/// Spectroscopy of each sublattice, starting from the |−1⟩ ground state of
/// the L or R site.
pub fn exp_addressing_spectroscopy(physics: &Physics, spec: &AddressingSpec) -> Result<AddressingSpectrum> {
    physics.validate()?;
    spec.controls.validate()?;
    if !(spec.rabi > 0.0 && spec.pulse_duration > 0.0 && spec.dt > 0.0) {
        return Err(invalid("experiment.rabi", "rabi, pulse_duration and dt must be positive"));
    }
    let c = &physics.constants;
    let cut = sample_controls(&spec.controls, &physics.bias, physics.grid.n, c)?;
    let sites = solve_spin(&cut, -1, 2, c)?.sites;
    let predicted = physics.transitions(&spec.controls)?;
    let bare = physics.bias.bare_transition(c);
    let scan = match spec.scan {
        Some(s) => s,
        None => {
            let lo = predicted.nu_left.min(predicted.nu_right) - bare - 40e3;
            let hi = predicted.nu_left.max(predicted.nu_right) - bare + 40e3;
            ScanRange::new(lo, hi, 41)?
        }
    };
    scan.validate()?;
    let offsets = scan.values();
    let left = SpinorState::from_component(physics.grid, sites.left_state.clone(), -1)?;
    let right = SpinorState::from_component(physics.grid, sites.right_state.clone(), -1)?;
    let jobs: Vec<(f64, &SpinorState)> = offsets.iter().flat_map(|&o| [(o, &left), (o, &right)]).collect();
    let survival: Vec<f64> =
        jobs.par_iter().map(|(o, s)| pulse_survival(physics, spec, s, bare + o)).collect::<Result<_>>()?;
    let p_remain_left: Vec<f64> = survival.iter().step_by(2).copied().collect();
    let p_remain_right: Vec<f64> = survival.iter().skip(1).step_by(2).copied().collect();
    let fit_left = fit_rabi_lineshape(&offsets, &p_remain_left, spec.pulse_duration)?;
    let fit_right = fit_rabi_lineshape(&offsets, &p_remain_right, spec.pulse_duration)?;
    let (center_l, center_r) = (fit_left.value("center"), fit_right.value("center"));
    let crosstalk_on_right = 1.0 - pulse_survival(physics, spec, &right, bare + center_l)?;
    let crosstalk_on_left = 1.0 - pulse_survival(physics, spec, &left, bare + center_r)?;
    Ok(AddressingSpectrum {
        offsets,
        p_remain_left,
        p_remain_right,
        predicted,
        bare_transition: bare,
        fitted_splitting: center_r - center_l,
        fit_left,
        fit_right,
        crosstalk_on_right,
        crosstalk_on_left,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportScanSpec {
    pub protocol: TransportProtocol,
    /// Final λ-lattice positions, λ.
    pub dx: ScanRange,
    /// False switches the vector light shift off.
    pub vector_shift: bool,
}

impl Default for TransportScanSpec {
    fn default() -> Self {
        Self {
            protocol: TransportProtocol::default(),
            dx: ScanRange { start: -0.5, stop: -0.3, points: 21 },
            vector_shift: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportScan {
    pub dx: Vec<f64>,
    /// Fraction in R for atoms starting in |0⟩.
    pub p_right_m0: Vec<f64>,
    /// Fraction in R for atoms starting in |−1⟩.
    pub p_right_m1: Vec<f64>,
    pub best_index: usize,
    pub best_dx: f64,
    /// min(P(R | 0), P(L | −1)) at the best point.
    pub best_sorting: f64,
    /// Largest pointwise |P_R(0) − P_R(−1)|.
    pub max_spin_difference: f64,
}

impl TransportScan {
    pub fn sorting(&self, i: usize) -> f64 {
        self.p_right_m0[i].min(1.0 - self.p_right_m1[i])
    }
}

/// Single transport trial for one initial spin; returns the fraction in R.
fn transport_trial(physics: &Physics, protocol: &TransportProtocol, dx: f64, m_f: i32) -> Result<f64> {
    let mut prop = physics.propagator()?;
    let psi = protocol.initial_state(&mut prop, m_f)?;
    let state = SpinorState::from_component(physics.grid, psi, m_f)?;
    let out = transport_sequence(&mut prop, state, protocol, dx)?;
    Ok(out.populations.fraction_right(m_f))
}

/// Sweeps the final λ-lattice position, with separate trials per spin.
pub fn exp_transport_scan(physics: &Physics, spec: &TransportScanSpec) -> Result<TransportScan> {
    physics.validate()?;
    spec.dx.validate()?;
    let physics = if spec.vector_shift { *physics } else { physics.without_vector_shift() };
    let dx = spec.dx.values();
    let jobs: Vec<(f64, i32)> = dx.iter().flat_map(|&d| [(d, 0), (d, -1)]).collect();
    let p: Vec<f64> =
        jobs.par_iter().map(|&(d, m)| transport_trial(&physics, &spec.protocol, d, m)).collect::<Result<_>>()?;
    let p_right_m0: Vec<f64> = p.iter().step_by(2).copied().collect();
    let p_right_m1: Vec<f64> = p.iter().skip(1).step_by(2).copied().collect();
    let max_spin_difference =
        p_right_m0.iter().zip(&p_right_m1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut scan = TransportScan {
        dx,
        p_right_m0,
        p_right_m1,
        best_index: 0,
        best_dx: 0.0,
        best_sorting: 0.0,
        max_spin_difference,
    };
    let best = (0..scan.dx.len()).max_by(|&a, &b| scan.sorting(a).total_cmp(&scan.sorting(b))).unwrap_or(0);
    scan.best_index = best;
    scan.best_dx = scan.dx[best];
    scan.best_sorting = scan.sorting(best);
    Ok(scan)
}

/// Spin-to-site mapping probabilities of the transport readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutFidelity {
    pub p_right_given_0: f64,
    pub p_left_given_minus1: f64,
}

impl Default for ReadoutFidelity {
    fn default() -> Self {
        Self { p_right_given_0: 1.0, p_left_given_minus1: 1.0 }
    }
}

impl ReadoutFidelity {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("readout.p_right_given_0", self.p_right_given_0), ("readout.p_left_given_minus1", self.p_left_given_minus1)]
        {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Fraction found in R for a |0⟩ population `p0`.
    pub fn map(&self, p0: f64) -> f64 {
        self.p_right_given_0 * p0 + (1.0 - self.p_left_given_minus1) * (1.0 - p0)
    }

    /// Scale of the oscillation amplitude relative to perfect readout.
    pub fn contrast_scale(&self) -> f64 {
        self.p_right_given_0 + self.p_left_given_minus1 - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiSpec {
    /// Hz.
    pub rabi: f64,
    /// μs.
    pub max_duration: f64,
    pub points: usize,
    pub noise: NoiseModel,
    pub ensemble: EnsembleSize,
    pub readout: ReadoutFidelity,
}

impl Default for RabiSpec {
    fn default() -> Self {
        Self {
            rabi: 15.8e3,
            max_duration: 2000.0,
            points: 501,
            noise: NoiseModel::noiseless(),
            ensemble: EnsembleSize::default(),
            readout: ReadoutFidelity::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RabiReadout {
    /// μs.
    pub durations: Vec<f64>,
    /// |0⟩ population.
    pub p0: Vec<f64>,
    /// Fraction observed in R after transport.
    pub p_right: Vec<f64>,
    /// Damped-sine fit of `p_right` with t in μs.
    pub fit: FitResult,
    /// Hz.
    pub frequency: f64,
    /// μs.
    pub decay_time: f64,
    pub contrast_scale: f64,
}

/// Rabi flopping in the λ-lattice read out through the transport mapping.
pub fn exp_rabi_via_transport(spec: &RabiSpec) -> Result<RabiReadout> {
    spec.readout.validate()?;
    let trace = rabi_experiment(spec.rabi, spec.max_duration, spec.points, &spec.noise, &spec.ensemble)?;
    let p_right: Vec<f64> = trace.p0.iter().map(|&p| spec.readout.map(p)).collect();
    let fit = fit_damped_sine(&trace.durations, &p_right)?;
    Ok(RabiReadout {
        frequency: fit.value("frequency") * 1e6,
        decay_time: fit.value("decay_time"),
        contrast_scale: spec.readout.contrast_scale(),
        durations: trace.durations,
        p0: trace.p0,
        p_right,
        fit,
    })
}

/// Final rf pulse of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalPulse {
    /// π pulse resonant with the L sublattice only.
    LeftSelective,
    /// Short strong π pulse acting on both sublattices.
    Global,
    Omitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferometerSpec {
    /// Addressing configuration after transport. None calibrates the default
    /// 32 kHz configuration.
    pub addressing: Option<LatticeControls>,
    pub protocol: TransportProtocol,
    /// λ.
    pub dx_final: f64,
    /// Rabi frequency of the π/2, echo and L-selective pulses, Hz.
    pub rabi: f64,
    /// From the end of the π/2 pulse to the start of the echo π pulse, μs.
    pub echo_delay: f64,
    /// Transfer from the transport lattice to the addressing lattice, μs.
    pub ramp_duration: f64,
    pub final_pulse: FinalPulse,
    /// Rabi frequency of the global π pulse, Hz.
    pub global_rabi: f64,
    /// Phase of the first π/2 pulse, rad.
    pub relative_phase: f64,
    pub cells: usize,
    /// Gaussian occupation width, cells; zero for uniform.
    pub envelope_sigma: f64,
}

impl Default for InterferometerSpec {
    fn default() -> Self {
        Self {
            addressing: None,
            protocol: TransportProtocol { step1_duration: 270.0, ..TransportProtocol::default() },
            dx_final: -0.48,
            rabi: 1e6 / 60.0,
            echo_delay: 400.0,
            ramp_duration: 100.0,
            final_pulse: FinalPulse::LeftSelective,
            global_rabi: 250e3,
            relative_phase: 0.0,
            cells: 1,
            envelope_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerResult {
    pub profile: TofProfile,
    /// Cosine-modulated Gaussian fit of the profile, if it converged.
    pub fit: Option<FitResult>,
    /// Site populations right after transport.
    pub after_transport: SitePopulations,
    /// Site populations before release.
    pub before_release: SitePopulations,
    pub addressing: LatticeControls,
    pub transitions: TransitionTable,
    pub final_state: SpinorState,
}

/// π/2 → echo π → spin-dependent transport → L-selective π → release.
pub fn exp_interferometer(physics: &Physics, spec: &InterferometerSpec) -> Result<InterferometerResult> {
    physics.validate()?;
    if !(spec.rabi > 0.0 && spec.global_rabi > 0.0 && spec.echo_delay >= 0.0 && spec.ramp_duration > 0.0) {
        return Err(invalid("experiment.rabi", "pulse and ramp parameters must be positive"));
    }
    let addressing = match spec.addressing {
        Some(a) => a,
        None => {
            let cal = calibrate(physics, &CalibrationTarget::default())?;
            if !cal.converged {
                return Err(Error::NonConvergence { worst: cal.residual, tol: 1.0, residuals: vec![cal.residual] });
            }
            cal.controls
        }
    };
    addressing.validate()?;
    let transitions = physics.transitions(&addressing)?;
    let bare = physics.bias.bare_transition(&physics.constants);
    let protocol = &spec.protocol;
    let mut prop = physics.propagator()?;
    let psi = protocol.initial_state(&mut prop, -1)?;
    let mut state = SpinorState::from_component(physics.grid, psi, -1)?;

    // Spin preparation in the starting λ-lattice.
    let half = 1e6 / (4.0 * spec.rabi);
    let prep_duration = half + spec.echo_delay + 2.0 * half;
    let pulses = vec![
        RfPulse { rabi: spec.rabi, frequency: bare, phase: spec.relative_phase, duration: half, start: 0.0 },
        RfPulse { rabi: spec.rabi, frequency: bare, phase: 0.0, duration: 2.0 * half, start: half + spec.echo_delay },
    ];
    let prep = ControlSchedule::new(vec![Segment::hold(prep_duration, protocol.start)], pulses, protocol.dt)?;
    prop.run(&mut state, &prep)?;

    let transported = transport_sequence(&mut prop, state, protocol, spec.dx_final)?;
    let mut state = transported.state;

    let end = protocol.final_controls(spec.dx_final);
    let ramp = Segment::new(spec.ramp_duration, end, addressing, RampShape::MinimumJerk);
    let mut segments = vec![ramp];
    let mut pulses = vec![];
    let pulse = match spec.final_pulse {
        FinalPulse::LeftSelective => Some((spec.rabi, transitions.nu_left)),
        FinalPulse::Global => Some((spec.global_rabi, 0.5 * (transitions.nu_left + transitions.nu_right))),
        FinalPulse::Omitted => None,
    };
    if let Some((rabi, frequency)) = pulse {
        let duration = 1e6 / (2.0 * rabi);
        segments.push(Segment::hold(duration, addressing));
        pulses.push(RfPulse { rabi, frequency, phase: 0.0, duration, start: spec.ramp_duration });
    }
    let schedule = ControlSchedule::new(segments, pulses, protocol.dt)?.with_frame(transitions.nu_left);
    prop.run(&mut state, &schedule)?;

    let (_, v0, _) = prop.potentials(&addressing, None)?;
    let barrier = barrier_position(&physics.grid.positions(), &v0);
    let before_release = measure_site_populations(&state, barrier);
    let profile = momentum_distribution(&state, spec.cells.max(1), spec.envelope_sigma)?;
    let fit = fit_visibility(&profile).ok().filter(|f| f.converged);
    Ok(InterferometerResult {
        profile,
        fit,
        after_transport: transported.populations,
        before_release,
        addressing,
        transitions,
        final_state: state,
    })
}
