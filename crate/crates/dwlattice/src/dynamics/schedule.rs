use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::LatticeControls;

/// Interpolation shape of a ramp segment, evaluated on s = t/T ∈ [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RampShape {
    /// Holds the start value.
    Constant,
    Linear,
    /// (1 − e^{−t/τ})/(1 − e^{−T/τ}), τ in μs.
    Exponential { tau: f64 },
    /// 10s³ − 15s⁴ + 6s⁵.
    MinimumJerk,
}

impl RampShape {
    /// Fraction of the way from start to end at s = t/T.
    pub fn progress(&self, s: f64, duration: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match *self {
            RampShape::Constant => 0.0,
            RampShape::Linear => s,
            RampShape::Exponential { tau } => (-s * duration / tau).exp_m1() / (-duration / tau).exp_m1(),
            RampShape::MinimumJerk => s * s * s * (10.0 - 15.0 * s + 6.0 * s * s),
        }
    }

    fn validate(&self) -> Result<()> {
        if let RampShape::Exponential { tau } = self {
            if !(tau.is_finite() && *tau > 0.0) {
                return Err(invalid("schedule.shape.tau", "must be positive"));
            }
        }
        Ok(())
    }
}

/// One ramp between two control settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// μs.
    pub duration: f64,
    pub start: LatticeControls,
    pub end: LatticeControls,
    /// Shape for depths, polarization phase and intensity scale.
    pub shape: RampShape,
    /// Shape for dx; defaults to `shape`.
    #[serde(default)]
    pub dx_shape: Option<RampShape>,
}

impl Segment {
    pub fn new(duration: f64, start: LatticeControls, end: LatticeControls, shape: RampShape) -> Self {
        Self { duration, start, end, shape, dx_shape: None }
    }

    pub fn hold(duration: f64, controls: LatticeControls) -> Self {
        Self::new(duration, controls, controls, RampShape::Constant)
    }

    pub fn with_dx_shape(mut self, shape: RampShape) -> Self {
        self.dx_shape = Some(shape);
        self
    }

    /// Controls at local time `t` ∈ [0, duration].
    pub fn controls_at(&self, t: f64) -> LatticeControls {
        let s = t / self.duration;
        let p = self.shape.progress(s, self.duration);
        let pdx = self.dx_shape.unwrap_or(self.shape).progress(s, self.duration);
        let lerp = |a: f64, b: f64, p: f64| a + (b - a) * p;
        let (a, b) = (&self.start, &self.end);
        LatticeControls {
            v_half: lerp(a.v_half, b.v_half, p).max(0.0),
            v_lambda: lerp(a.v_lambda, b.v_lambda, p).max(0.0),
            dx: lerp(a.dx, b.dx, pdx),
            pol_phase: lerp(a.pol_phase, b.pol_phase, p),
            total_scale: lerp(a.total_scale, b.total_scale, p).max(0.0),
        }
    }
}

/// Resonant rf coupling between |−1⟩ and |0⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfPulse {
    /// Rabi frequency Ω, Hz.
    pub rabi: f64,
    /// ν_rf, Hz.
    pub frequency: f64,
    /// θ, rad.
    pub phase: f64,
    /// μs.
    pub duration: f64,
    /// μs from the start of the schedule.
    pub start: f64,
}

impl RfPulse {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    fn validate(&self) -> Result<()> {
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(invalid("rf.rabi", "must be finite and >= 0"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("rf.duration", "must be positive"));
        }
        if !(self.frequency.is_finite() && self.phase.is_finite() && self.start.is_finite()) {
            return Err(invalid("rf", "non-finite pulse parameter"));
        }
        Ok(())
    }
}

/// Lattice controls and rf pulses as functions of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSchedule {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub rf_events: Vec<RfPulse>,
    /// Largest time step, μs.
    pub dt: f64,
    /// Frequency of the rotating frame, Hz. Defaults to the bare transition.
    #[serde(default)]
    pub frame_frequency: Option<f64>,
    #[serde(skip)]
    mirrored: bool,
}

/// Drive seen by the atoms at one instant, expressed in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfDrive {
    pub rabi: f64,
    /// Coupling phase including any offset between pulse and frame frequency.
    pub phase: f64,
}

impl ControlSchedule {
    pub fn new(segments: Vec<Segment>, rf_events: Vec<RfPulse>, dt: f64) -> Result<Self> {
        let s = Self { segments, rf_events, dt, frame_frequency: None, mirrored: false };
        s.validate()?;
        Ok(s)
    }

    pub fn with_frame(mut self, frequency: f64) -> Self {
        self.frame_frequency = Some(frequency);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(invalid("schedule.segments", "at least one segment is required"));
        }
        for seg in &self.segments {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(invalid("schedule.segments.duration", "must be positive"));
            }
            seg.start.validate()?;
            seg.end.validate()?;
            seg.shape.validate()?;
            if let Some(s) = seg.dx_shape {
                s.validate()?;
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("schedule.dt", "must be positive"));
        }
        let total = self.total_duration();
        for p in &self.rf_events {
            p.validate()?;
            if p.start < -1e-9 || p.end() > total + 1e-9 {
                return Err(invalid("schedule.rf_events", "pulse lies outside the schedule"));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn forward_time(&self, t: f64) -> f64 {
        if self.mirrored {
            self.total_duration() - t
        } else {
            t
        }
    }

    pub fn controls_at(&self, t: f64) -> LatticeControls {
        let mut t = self.forward_time(t);
        for seg in &self.segments {
            if t <= seg.duration {
                return seg.controls_at(t.max(0.0));
            }
            t -= seg.duration;
        }
        let last = self.segments.last().expect("validated non-empty");
        last.controls_at(last.duration)
    }

    /// Active rf drive at `t`, with the frame at `frame` Hz.
    pub fn rf_at(&self, t: f64, frame: f64) -> Option<RfDrive> {
        let tf = self.forward_time(t);
        let pulse = self.rf_events.iter().find(|p| tf >= p.start && tf < p.end())?;
        // Offset between pulse and frame frequency advances the coupling phase.
        let phase = pulse.phase + std::f64::consts::TAU * (pulse.frequency - frame) * tf * 1e-6;
        Some(RfDrive { rabi: pulse.rabi, phase: if self.mirrored { -phase } else { phase } })
    }

    /// Segment and pulse boundaries, ascending, including 0 and the end.
    pub fn breakpoints(&self) -> Vec<f64> {
        let total = self.total_duration();
        let mut pts = vec![0.0, total];
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += seg.duration;
            pts.push(acc);
        }
        for p in &self.rf_events {
            pts.push(p.start);
            pts.push(p.end());
        }
        let mut pts: Vec<f64> = pts.into_iter().map(|t| self.forward_time(t).clamp(0.0, total)).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        pts
    }

    /// The same schedule run backwards in time with conjugated rf phases.
    ///
    /// Propagating the conjugate of a final state through the reversed
    /// schedule returns the conjugate of the initial state.
    pub fn reversed(&self) -> Self {
        Self { mirrored: !self.mirrored, ..self.clone() }
    }

    pub fn is_reversed(&self) -> bool {
        self.mirrored
    }
}
