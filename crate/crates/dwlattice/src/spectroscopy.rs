//! Monte Carlo two-level spectroscopy under magnetic-field noise.
//!
//! Each trajectory is a two-level atom (|−1⟩, |0⟩) with detuning
//! `δ(t) = base + shot offset + atom offset + walk(t)`. The shot offset is
//! common to all atoms of a shot, the atom offset is static per atom and the
//! walk is a Gaussian random walk shared by all atoms of a shot.
//!
//! Frequencies are in Hz and times in μs.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{invalid, Result};

/// The three magnetic-noise channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Per-shot Gaussian detuning offset, Hz.
    pub sigma_shot: f64,
    /// Random-walk diffusion of the detuning within a shot, Hz²/ms.
    pub diffusion: f64,
    /// Per-atom static Gaussian detuning, Hz.
    pub sigma_spatial: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub const fn noiseless() -> Self {
        Self { sigma_shot: 0.0, diffusion: 0.0, sigma_spatial: 0.0, seed: 0 }
    }

    /// Noise reproducing the observed decoherence times: Ramsey 100 μs
    /// (common mode) and 500 μs (inhomogeneous), echo 400 μs.
    ///
    /// With phase variance (2π)²·D·T³/12 under echo, D is fixed by a 1/e echo
    /// time of 400 μs. The shot offset then fills the remaining Ramsey phase
    /// variance at 100 μs, and the per-atom spread alone gives a 500 μs
    /// Gaussian decay.
    pub fn calibrated(seed: u64) -> Self {
        let t_echo = 400e-6_f64;
        let t_fast = 100e-6_f64;
        let t_slow = 500e-6_f64;
        let two_pi_sq: f64 = TAU * TAU;
        // Hz²/s
        let d = 24.0 / (two_pi_sq * t_echo.powi(3));
        let walk_ramsey = two_pi_sq * d * t_fast.powi(3) / 3.0;
        let sigma_shot = ((2.0 - walk_ramsey) / (two_pi_sq * t_fast * t_fast)).sqrt();
        let sigma_spatial = 2f64.sqrt() / (TAU * t_slow);
        Self { sigma_shot, diffusion: d * 1e-3, sigma_spatial, seed }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise.sigma_shot", self.sigma_shot),
            ("noise.diffusion", self.diffusion),
            ("noise.sigma_spatial", self.sigma_spatial),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One element of a pulse sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Element {
    /// Rabi frequency Ω (Hz), duration (μs), phase θ (rad).
    Pulse { rabi: f64, duration: f64, phase: f64 },
    Delay { duration: f64 },
}

impl Element {
    pub fn duration(&self) -> f64 {
        match *self {
            Element::Pulse { duration, .. } | Element::Delay { duration } => duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    pub elements: Vec<Element>,
    /// Hz.
    pub detuning_base: f64,
    /// Longest piecewise-constant detuning interval, μs.
    pub max_substep: f64,
}

/// Default cap on the piecewise-constant detuning interval, μs.
pub const MAX_SUBSTEP: f64 = 1.0;

impl PulseSequence {
    pub fn new(elements: Vec<Element>, detuning_base: f64) -> Result<Self> {
        let s = Self { elements, detuning_base, max_substep: MAX_SUBSTEP };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.elements {
            let d = e.duration();
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid("sequence.duration", format!("must be positive, got {d}")));
            }
            if let Element::Pulse { rabi, phase, .. } = e {
                if !(rabi.is_finite() && *rabi >= 0.0 && phase.is_finite()) {
                    return Err(invalid("sequence.rabi", "must be finite and >= 0"));
                }
            }
        }
        if !(self.max_substep.is_finite() && self.max_substep > 0.0) {
            return Err(invalid("sequence.max_substep", "must be positive"));
        }
        if !self.detuning_base.is_finite() {
            return Err(invalid("sequence.detuning_base", "must be finite"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.elements.iter().map(Element::duration).sum()
    }

    /// π/2 – T – π/2(θ).
    pub fn ramsey(rabi: f64, delay: f64, theta: f64) -> Self {
        let half = 1e6 / (4.0 * rabi);
        let mut elements = vec![Element::Pulse { rabi, duration: half, phase: 0.0 }];
        if delay > 0.0 {
            elements.push(Element::Delay { duration: delay });
        }
        elements.push(Element::Pulse { rabi, duration: half, phase: theta });
        Self { elements, detuning_base: 0.0, max_substep: MAX_SUBSTEP }
    }

    /// π/2 – T/2 – π – T/2 – π/2(θ).
    pub fn echo(rabi: f64, delay: f64, theta: f64) -> Self {
        let half = 1e6 / (4.0 * rabi);
        let mut elements = vec![Element::Pulse { rabi, duration: half, phase: 0.0 }];
        if delay > 0.0 {
            elements.push(Element::Delay { duration: delay / 2.0 });
        }
        elements.push(Element::Pulse { rabi, duration: 2.0 * half, phase: 0.0 });
        if delay > 0.0 {
            elements.push(Element::Delay { duration: delay / 2.0 });
        }
        elements.push(Element::Pulse { rabi, duration: half, phase: theta });
        Self { elements, detuning_base: 0.0, max_substep: MAX_SUBSTEP }
    }
}

/// Two-level amplitudes (c₋₁, c₀).
pub type Spin = [Complex64; 2];

/// exp(−2πi·H·t) for H = ½(Ω cosθ σx − Ω sinθ σy + δ σz), t in μs.
pub fn two_level_unitary(rabi: f64, phase: f64, detuning: f64, t: f64) -> [[Complex64; 2]; 2] {
    let w = (rabi * rabi + detuning * detuning).sqrt();
    let a = PI * w * t * 1e-6;
    let (s, c) = a.sin_cos();
    let k = if w > 0.0 { s / w } else { 0.0 };
    let i = Complex64::new(0.0, 1.0);
    let off = Complex64::from_polar(rabi, phase);
    [
        [Complex64::new(c, 0.0) - i * k * detuning, -i * k * off],
        [-i * k * off.conj(), Complex64::new(c, 0.0) + i * k * detuning],
    ]
}

fn apply(u: &[[Complex64; 2]; 2], s: &Spin) -> Spin {
    [u[0][0] * s[0] + u[0][1] * s[1], u[1][0] * s[0] + u[1][1] * s[1]]
}

/// Detuning of one shot, sampled per sub-step.
struct ShotNoise {
    offset: f64,
    atoms: Vec<f64>,
    /// Walk value per sub-step, one list per element.
    walk: Vec<Vec<f64>>,
    /// ∫ walk dt over each element, Hz·μs.
    walk_area: Vec<f64>,
}

fn substeps(seq: &PulseSequence, e: &Element, walking: bool) -> usize {
    if walking {
        (e.duration() / seq.max_substep - 1e-9).ceil().max(1.0) as usize
    } else {
        1
    }
}

fn shot_rng(seed: u64, shot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot as u64);
    rng
}

fn draw_shot(seq: &PulseSequence, noise: &NoiseModel, shot: usize, n_atoms: usize) -> ShotNoise {
    let mut rng = shot_rng(noise.seed, shot);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let offset = noise.sigma_shot * std_normal.sample(&mut rng);
    let atoms = (0..n_atoms).map(|_| noise.sigma_spatial * std_normal.sample(&mut rng)).collect();
    let walking = noise.diffusion > 0.0;
    let mut level = 0.0;
    let walk = seq
        .elements
        .iter()
        .map(|e| {
            let n = substeps(seq, e, walking);
            let h = e.duration() / n as f64;
            (0..n)
                .map(|_| {
                    if !walking {
                        return 0.0;
                    }
                    // Midpoint value of the walk across the sub-step.
                    let step = (noise.diffusion * h * 1e-3).sqrt();
                    let first = level + FRAC_1_SQRT_2 * step * std_normal.sample(&mut rng);
                    level = first + FRAC_1_SQRT_2 * step * std_normal.sample(&mut rng);
                    first
                })
                .collect()
        })
        .collect::<Vec<Vec<f64>>>();
    let walk_area = seq.elements.iter().zip(&walk).map(|(e, w)| w.iter().sum::<f64>() * e.duration() / w.len() as f64).collect();
    ShotNoise { offset, atoms, walk, walk_area }
}

fn evolve_atom(seq: &PulseSequence, shot: &ShotNoise, atom: usize) -> Spin {
    let mut s: Spin = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let static_detuning = seq.detuning_base + shot.offset + shot.atoms[atom];
    for ((e, walk), area) in seq.elements.iter().zip(&shot.walk).zip(&shot.walk_area) {
        let h = e.duration() / walk.len() as f64;
        match *e {
            Element::Pulse { rabi, phase, .. } => {
                for w in walk {
                    s = apply(&two_level_unitary(rabi, phase, static_detuning + w, h), &s);
                }
            }
            Element::Delay { duration } => {
                // Free evolution only accumulates relative phase.
                let integral = static_detuning * duration + area;
                let a = PI * integral * 1e-6;
                s = [s[0] * Complex64::cis(-a), s[1] * Complex64::cis(a)];
            }
        }
    }
    s
}

/// Population statistics over shots × atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    /// Mean probability of ending in |0⟩.
    pub mean_p0: f64,
    /// Mean over atoms for each shot.
    pub per_shot: Vec<f64>,
    pub n_shots: usize,
    pub n_atoms: usize,
}

fn check_counts(n_shots: usize, n_atoms: usize) -> Result<()> {
    if n_shots == 0 || n_atoms == 0 {
        return Err(invalid("n_shots", "shot and atom counts must be at least 1"));
    }
    Ok(())
}

/// Runs the sequence for every (shot, atom), starting in |−1⟩.
pub fn simulate_sequence(seq: &PulseSequence, noise: &NoiseModel, n_shots: usize, n_atoms: usize) -> Result<EnsembleResult> {
    seq.validate()?;
    noise.validate()?;
    check_counts(n_shots, n_atoms)?;
    let per_shot: Vec<f64> = (0..n_shots)
        .into_par_iter()
        .map(|shot| {
            let draws = draw_shot(seq, noise, shot, n_atoms);
            (0..n_atoms).map(|a| evolve_atom(seq, &draws, a)[1].norm_sqr()).sum::<f64>() / n_atoms as f64
        })
        .collect();
    let mean_p0 = per_shot.iter().sum::<f64>() / n_shots as f64;
    Ok(EnsembleResult { mean_p0, per_shot, n_shots, n_atoms })
}

/// Shot and atom counts plus the base detuning of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSize {
    pub n_shots: usize,
    pub n_atoms: usize,
    /// Hz.
    pub detuning_base: f64,
}

impl Default for EnsembleSize {
    fn default() -> Self {
        Self { n_shots: 100, n_atoms: 100, detuning_base: 0.0 }
    }
}

/// Mean |0⟩ population after a single pulse of each duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiTrace {
    /// μs.
    pub durations: Vec<f64>,
    pub p0: Vec<f64>,
}

/// Rabi flopping versus pulse duration, sampled at `n_points` uniform
/// durations in [0, max_duration].
///
/// Each trajectory is advanced once through the sorted durations, so the
/// walk noise is one continuous path per shot.
pub fn rabi_experiment(
    rabi: f64,
    max_duration: f64,
    n_points: usize,
    noise: &NoiseModel,
    size: &EnsembleSize,
) -> Result<RabiTrace> {
    if !(rabi.is_finite() && rabi > 0.0) {
        return Err(invalid("rabi", "must be positive"));
    }
    if !(max_duration.is_finite() && max_duration > 0.0) || n_points < 2 {
        return Err(invalid("max_duration", "need a positive duration and at least two points"));
    }
    noise.validate()?;
    check_counts(size.n_shots, size.n_atoms)?;
    let durations: Vec<f64> = (0..n_points).map(|i| max_duration * i as f64 / (n_points - 1) as f64).collect();
    let sample_dt = durations[1];
    let walking = noise.diffusion > 0.0;
    let sub = if walking { (sample_dt / MAX_SUBSTEP - 1e-9).ceil().max(1.0) as usize } else { 1 };
    let h = sample_dt / sub as f64;
    let totals: Vec<Vec<f64>> = (0..size.n_shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = shot_rng(noise.seed, shot);
            let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
            let offset = noise.sigma_shot * std_normal.sample(&mut rng);
            let atoms: Vec<f64> = (0..size.n_atoms).map(|_| noise.sigma_spatial * std_normal.sample(&mut rng)).collect();
            let mut acc = vec![0.0; n_points];
            if !walking {
                // Static detuning: closed form per atom.
                for &da in &atoms {
                    let d = size.detuning_base + offset + da;
                    for (k, &t) in durations.iter().enumerate() {
                        let u = two_level_unitary(rabi, 0.0, d, t);
                        acc[k] += u[1][0].norm_sqr();
                    }
                }
            } else {
                let step = (noise.diffusion * h * 1e-3).sqrt();
                let mut level = 0.0;
                let walk: Vec<f64> = (0..(n_points - 1) * sub)
                    .map(|_| {
                        let first = level + FRAC_1_SQRT_2 * step * std_normal.sample(&mut rng);
                        level = first + FRAC_1_SQRT_2 * step * std_normal.sample(&mut rng);
                        first
                    })
                    .collect();
                for &da in &atoms {
                    let d = size.detuning_base + offset + da;
                    let mut s: Spin = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
                    for (i, w) in walk.iter().enumerate() {
                        s = apply(&two_level_unitary(rabi, 0.0, d + w, h), &s);
                        if (i + 1) % sub == 0 {
                            acc[(i + 1) / sub] += s[1].norm_sqr();
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let norm = (size.n_shots * size.n_atoms) as f64;
    let p0 = (0..n_points).map(|k| totals.iter().map(|a| a[k]).sum::<f64>() / norm).collect();
    Ok(RabiTrace { durations, p0 })
}

/// Contrast versus delay for Ramsey or echo sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    /// μs.
    pub delays: Vec<f64>,
    /// Fringe contrast of the shot-averaged interferogram.
    pub contrast: Vec<f64>,
    /// Mean over shots of the fringe contrast within a single shot.
    pub within_shot: Vec<f64>,
    /// contrast / within_shot: the coherence lost to shot-to-shot phase noise.
    pub common_mode: Vec<f64>,
    /// Shot-averaged |0⟩ population per delay and θ.
    pub interferogram: Vec<Vec<f64>>,
    /// Per-shot |0⟩ population at the first θ, per delay.
    pub per_shot: Vec<Vec<f64>>,
    /// θ values, rad.
    pub theta: Vec<f64>,
    /// False where the sinusoid fit over θ was ill-conditioned.
    pub fit_ok: Vec<bool>,
}

/// Fits p(θ) = a + b·cosθ + c·sinθ by linear least squares and returns
/// the contrast 2√(b² + c²), or None when the θ samples do not determine it.
pub fn sinusoid_contrast(theta: &[f64], p: &[f64]) -> Option<f64> {
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for (&t, &y) in theta.iter().zip(p) {
        let row = nalgebra::Vector3::new(1.0, t.cos(), t.sin());
        ata += row * row.transpose();
        atb += row * y;
    }
    let sol = ata.try_inverse()? * atb;
    let c = 2.0 * (sol[1] * sol[1] + sol[2] * sol[2]).sqrt();
    c.is_finite().then_some(c)
}

fn interferometry(
    build: impl Fn(f64, f64) -> PulseSequence + Sync,
    delays: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    size: &EnsembleSize,
) -> Result<DecayTrace> {
    if theta.len() < 4 {
        return Err(invalid("theta", "need at least four phase points per delay"));
    }
    if delays.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(invalid("delays", "must be finite and >= 0"));
    }
    noise.validate()?;
    check_counts(size.n_shots, size.n_atoms)?;
    let mut out = DecayTrace {
        delays: delays.to_vec(),
        contrast: vec![],
        within_shot: vec![],
        common_mode: vec![],
        interferogram: vec![],
        per_shot: vec![],
        theta: theta.to_vec(),
        fit_ok: vec![],
    };
    for &delay in delays {
        // The same noise realization per shot is reused across θ, as a
        // frozen-field θ scan within one shot.
        let shots: Vec<Vec<f64>> = (0..size.n_shots)
            .into_par_iter()
            .map(|shot| {
                theta
                    .iter()
                    .map(|&th| {
                        let mut seq = build(delay, th);
                        seq.detuning_base = size.detuning_base;
                        let draws = draw_shot(&seq, noise, shot, size.n_atoms);
                        (0..size.n_atoms).map(|a| evolve_atom(&seq, &draws, a)[1].norm_sqr()).sum::<f64>()
                            / size.n_atoms as f64
                    })
                    .collect()
            })
            .collect();
        let avg: Vec<f64> = (0..theta.len()).map(|k| shots.iter().map(|s| s[k]).sum::<f64>() / size.n_shots as f64).collect();
        let overall = sinusoid_contrast(theta, &avg);
        let within: Vec<f64> = shots.iter().filter_map(|s| sinusoid_contrast(theta, s)).collect();
        let ok = overall.is_some() && within.len() == shots.len();
        let c = overall.unwrap_or(f64::NAN);
        let w = if within.is_empty() { f64::NAN } else { within.iter().sum::<f64>() / within.len() as f64 };
        out.contrast.push(c);
        out.within_shot.push(w);
        out.common_mode.push(if w > 0.0 { (c / w).min(1.0) } else { 0.0 });
        out.interferogram.push(avg);
        out.per_shot.push(shots.iter().map(|s| s[0]).collect());
        out.fit_ok.push(ok);
    }
    Ok(out)
}

/// Ramsey interferograms versus delay.
pub fn ramsey_experiment(
    rabi: f64,
    delays: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    size: &EnsembleSize,
) -> Result<DecayTrace> {
    interferometry(|d, th| PulseSequence::ramsey(rabi, d, th), delays, theta, noise, size)
}

/// Spin-echo contrast versus total free-evolution time.
pub fn echo_experiment(
    rabi: f64,
    delays: &[f64],
    theta: &[f64],
    noise: &NoiseModel,
    size: &EnsembleSize,
) -> Result<DecayTrace> {
    interferometry(|d, th| PulseSequence::echo(rabi, d, th), delays, theta, noise, size)
}

/// `n` phases evenly covering [0, 2π).
pub fn theta_scan(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_has_unit_determinant() {
        for (r, p, d, t) in [(1e4, 0.3, 2e3, 17.0), (0.0, 0.0, 5e3, 3.0), (16.7e3, -1.0, 32e3, 30.0)] {
            let u = two_level_unitary(r, p, d, t);
            let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
            assert!((det.norm() - 1.0).abs() < 1e-12);
            let col = u[0][0].norm_sqr() + u[1][0].norm_sqr();
            assert!((col - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_pi_pulse_transfers_fully() {
        let seq = PulseSequence::new(vec![Element::Pulse { rabi: 16.7e3, duration: 1e6 / (2.0 * 16.7e3), phase: 0.0 }], 0.0).unwrap();
        let r = simulate_sequence(&seq, &NoiseModel::noiseless(), 3, 2).unwrap();
        assert!((r.mean_p0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn off_resonant_transfer_matches_rabi_formula() {
        let (rabi, det): (f64, f64) = (16.7e3, 32e3);
        let w = (rabi * rabi + det * det).sqrt();
        let t = 1e6 / (2.0 * w);
        let seq = PulseSequence::new(vec![Element::Pulse { rabi, duration: t, phase: 0.0 }], det).unwrap();
        let r = simulate_sequence(&seq, &NoiseModel::noiseless(), 1, 1).unwrap();
        let max = rabi * rabi / (w * w);
        assert!((r.mean_p0 - max).abs() < 1e-12);
        assert!((max - 0.214).abs() < 0.005);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PulseSequence::new(vec![Element::Delay { duration: 0.0 }], 0.0).is_err());
        let seq = PulseSequence::ramsey(1e4, 10.0, 0.0);
        assert!(simulate_sequence(&seq, &NoiseModel::noiseless(), 0, 1).is_err());
        let bad = NoiseModel { sigma_shot: -1.0, ..NoiseModel::noiseless() };
        assert!(simulate_sequence(&seq, &bad, 1, 1).is_err());
        assert!(ramsey_experiment(1e4, &[0.0], &theta_scan(3), &NoiseModel::noiseless(), &EnsembleSize::default()).is_err());
    }

    #[test]
    fn noiseless_rabi_is_sin_squared() {
        let size = EnsembleSize { n_shots: 2, n_atoms: 2, detuning_base: 0.0 };
        let tr = rabi_experiment(15.8e3, 200.0, 101, &NoiseModel::noiseless(), &size).unwrap();
        for (t, p) in tr.durations.iter().zip(&tr.p0) {
            assert!((p - (PI * 15.8e3 * t * 1e-6).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn calibrated_noise_values() {
        let n = NoiseModel::calibrated(1);
        assert!((n.sigma_spatial - 450.16).abs() < 0.1);
        assert!((n.sigma_shot - 2179.0).abs() < 5.0, "{}", n.sigma_shot);
        assert!((n.diffusion - 9.5e6).abs() < 0.1e6, "{}", n.diffusion);
    }

    #[test]
    fn sinusoid_contrast_of_exact_fringe() {
        let th = theta_scan(8);
        let p: Vec<f64> = th.iter().map(|t| 0.5 + 0.35 * (t - 0.4).cos()).collect();
        assert!((sinusoid_contrast(&th, &p).unwrap() - 0.7).abs() < 1e-12);
        assert!(sinusoid_contrast(&[0.0; 4], &[0.5; 4]).is_none());
    }
}
