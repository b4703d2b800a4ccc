//! Lattice light field: beams, light shifts and state-dependent potentials.
//!
//! The lattice is four travelling plane waves along ±x̂ and ±ŷ. Each beam's
//! polarization is `cosθ·(in-plane) + sinθ·e^{iφ}·ẑ`. The in-plane parts make
//! an intensity lattice of period λ/2 along the y = 0 cut. The vertical parts
//! interfere into a period-λ lattice whose position is set by the phases of
//! the x-pair. Positions are in units of λ, so the wavenumber is 2π.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::constants::{BiasField, PhysicalConstants};
use crate::error::{invalid, Error, Result};

pub type CVector3 = Vector3<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A travelling plane wave.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub k_hat: Vector3<f64>,
    pub amplitude: f64,
    pub jones: CVector3,
    pub phase: f64,
}

impl Beam {
    pub fn new(k_hat: Vector3<f64>, amplitude: f64, jones: CVector3, phase: f64) -> Result<Self> {
        let beam = Self { k_hat, amplitude, jones, phase };
        beam.validate()?;
        Ok(beam)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.k_hat.norm() - 1.0).abs() > 1e-12 {
            return Err(invalid("beam.k_hat", "must be a unit vector"));
        }
        if (self.jones.norm() - 1.0).abs() > 1e-12 {
            return Err(invalid("beam.jones", "must have unit norm"));
        }
        let k = self.k_hat.map(|v| Complex64::new(v, 0.0));
        if self.jones.dot(&k).norm() > 1e-12 {
            return Err(invalid("beam.jones", "must be transverse to k_hat"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0 && self.phase.is_finite()) {
            return Err(invalid("beam.amplitude", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Complex polarization including amplitude and phase.
    fn weighted_jones(&self) -> CVector3 {
        self.jones * Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// An ordered, non-empty list of beams sharing one wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSet {
    beams: Vec<Beam>,
    /// Wavenumber in rad per λ.
    wavenumber: f64,
}

impl BeamSet {
    pub fn new(beams: Vec<Beam>) -> Result<Self> {
        if beams.is_empty() {
            return Err(Error::EmptyBeamSet);
        }
        for b in &beams {
            b.validate()?;
        }
        Ok(Self { beams, wavenumber: TAU })
    }

    pub fn beams(&self) -> &[Beam] {
        &self.beams
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// Applies the same extra phase to every beam.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let beams = self.beams.iter().map(|b| Beam { phase: b.phase + phase, ..b.clone() }).collect();
        Self { beams, wavenumber: self.wavenumber }
    }
}

/// Complex field amplitude at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub e: CVector3,
}

impl FieldPoint {
    pub fn intensity(&self) -> f64 {
        self.e.iter().map(|c| c.norm_sqr()).sum()
    }

    /// i(E*×E) evaluated as −2(Re E × Im E), which is real by construction.
    pub fn spin_density(&self) -> Vector3<f64> {
        let re = self.e.map(|c| c.re);
        let im = self.e.map(|c| c.im);
        -2.0 * re.cross(&im)
    }
}

/// E(r) = Σ_j amplitude_j·jones_j·exp(i(k·k̂_j·r + phase_j)), with r in λ.
pub fn synthesize_field(beams: &BeamSet, r: Vector3<f64>) -> FieldPoint {
    let e = beams.beams.iter().fold(CVector3::zeros(), |acc, b| {
        let arg = beams.wavenumber * b.k_hat.dot(&r) + b.phase;
        acc + b.jones * Complex64::from_polar(b.amplitude, arg)
    });
    FieldPoint { e }
}

/// Scalar light shift −α_s|E|²/4, Hz.
pub fn scalar_potential(e: &FieldPoint, c: &PhysicalConstants) -> f64 {
    -c.alpha_s * e.intensity() / 4.0
}

/// Effective magnetic field (α_v/4)·i(E*×E), in Hz of Zeeman shift per unit m_F.
pub fn effective_field(e: &FieldPoint, c: &PhysicalConstants) -> Vector3<f64> {
    let conj = e.e.map(|v| v.conj());
    let cross = conj.cross(&e.e).map(|v| v * I);
    let scale = e.intensity().max(f64::MIN_POSITIVE);
    let residue = cross.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    assert!(residue <= 1e-12 * scale, "i(E*xE) has imaginary residue {residue:e}");
    cross.map(|v| v.re) * (c.alpha_v / 4.0)
}

/// Magnitude of the total field B₀ + B_eff in tesla, with `b_eff` in Hz.
fn total_field(b_eff: &Vector3<f64>, b: &BiasField, c: &PhysicalConstants) -> f64 {
    (b.vector() + b_eff / c.gf_mub).norm()
}

/// State-dependent potential U_s + m_F·g_Fμ_B·|B_tot| + q·m_F²·|B_tot|², Hz.
pub fn spin_potential(e: &FieldPoint, b: &BiasField, m_f: i32, c: &PhysicalConstants) -> Result<f64> {
    let us = scalar_potential(e, c);
    match m_f {
        0 => Ok(us),
        -1 => {
            let btot = total_field(&effective_field(e, c), b, c);
            Ok(us + BiasField::zeeman_energy(c, -1, btot))
        }
        other => Err(Error::UnsupportedSpin(other)),
    }
}

/// The four experimental knobs of the double-well lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeControls {
    /// λ/2-lattice depth, E_R.
    pub v_half: f64,
    /// λ-lattice depth, E_R.
    pub v_lambda: f64,
    /// Position of the λ-lattice minimum, λ.
    pub dx: f64,
    /// Phase between vertical and in-plane polarization, rad.
    pub pol_phase: f64,
    /// Overall intensity factor.
    pub total_scale: f64,
}

impl Default for LatticeControls {
    fn default() -> Self {
        Self { v_half: 80.0, v_lambda: 0.0, dx: -0.5, pol_phase: 0.0, total_scale: 1.0 }
    }
}

impl LatticeControls {
    pub fn new(v_half: f64, v_lambda: f64, dx: f64, pol_phase: f64) -> Self {
        Self { v_half, v_lambda, dx, pol_phase, total_scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("controls.v_half", self.v_half),
            ("controls.v_lambda", self.v_lambda),
            ("controls.total_scale", self.total_scale),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.dx.is_finite() && (-1.0..=0.0).contains(&self.dx)) {
            return Err(invalid("controls.dx", format!("must lie in [-1, 0], got {}", self.dx)));
        }
        if !self.pol_phase.is_finite() {
            return Err(invalid("controls.pol_phase", "must be finite"));
        }
        Ok(())
    }

    /// Per-beam squared amplitude and polarization angle θ.
    fn amplitude_and_angle(&self, c: &PhysicalConstants) -> (f64, f64) {
        let a2 = (self.v_half + self.v_lambda / 4.0) * c.recoil() * self.total_scale / c.alpha_s;
        let theta = (self.v_lambda / 4.0).sqrt().atan2(self.v_half.sqrt());
        (a2, theta)
    }
}

/// Maps controls onto the four-beam set.
///
/// Along y = 0 the resulting potential is
/// `−V_h·sin²(2πx) − (V_λ/4)·(1 + cos 2π(x − dx))²` up to a constant, with
/// `V_h = v_half·E_R` and `V_λ = v_lambda·E_R` (both times `total_scale`).
pub fn controls_to_beams(controls: &LatticeControls, c: &PhysicalConstants) -> Result<BeamSet> {
    controls.validate()?;
    let (a2, theta) = controls.amplitude_and_angle(c);
    let (s, co) = theta.sin_cos();
    let a = a2.sqrt();
    let phi = controls.pol_phase;
    let shift = TAU * controls.dx;
    let vertical = |extra: f64| Complex64::from_polar(s, phi + extra);
    let beam = |k: Vector3<f64>, jones: CVector3| Beam { k_hat: k, amplitude: a, jones, phase: 0.0 };
    let beams = vec![
        beam(Vector3::x(), Vector3::new(0.0.into(), Complex64::from_polar(co, FRAC_PI_2), vertical(-shift))),
        beam(-Vector3::x(), Vector3::new(0.0.into(), Complex64::from_polar(co, -FRAC_PI_2), vertical(shift))),
        beam(Vector3::y(), Vector3::new(co.into(), 0.0.into(), vertical(0.0))),
        beam(-Vector3::y(), Vector3::new(co.into(), 0.0.into(), vertical(0.0))),
    ];
    BeamSet::new(beams)
}

/// Potentials sampled along the y = 0 cut over one unit cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinPotentialGrid {
    /// Sample positions, λ.
    pub x: Vec<f64>,
    /// U_s + U_v + Zeeman energy of m_F = −1, Hz.
    pub v_m_minus1: Vec<f64>,
    /// U_s, Hz.
    pub v_m0: Vec<f64>,
    /// Change of the linear Zeeman shift caused by B_eff, g_Fμ_B(|B_tot| − |B₀|), Hz.
    pub b_eff_proj: Vec<f64>,
    pub controls: Option<LatticeControls>,
}

impl SpinPotentialGrid {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn potential(&self, m_f: i32) -> Result<&[f64]> {
        match m_f {
            0 => Ok(&self.v_m0),
            -1 => Ok(&self.v_m_minus1),
            other => Err(Error::UnsupportedSpin(other)),
        }
    }

    /// −1 potential with the constant bias-field Zeeman energy removed.
    pub fn v_m_minus1_relative(&self, b: &BiasField, c: &PhysicalConstants) -> Vec<f64> {
        let z = BiasField::zeeman_energy(c, -1, b.magnitude);
        self.v_m_minus1.iter().map(|v| v - z).collect()
    }
}

/// Evaluates both spin potentials on a fixed set of cut positions.
///
/// Plane-wave phases for beams along ±x̂ and ±ŷ are tabulated once, which
/// makes repeated evaluation during time propagation cheap.
#[derive(Debug, Clone)]
pub struct CutEvaluator {
    x: Vec<f64>,
    phase: Vec<Complex64>,
}

impl CutEvaluator {
    pub fn new(x: Vec<f64>) -> Self {
        let phase = x.iter().map(|&xi| Complex64::cis(TAU * xi)).collect();
        Self { x, phase }
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    /// Writes V_{−1}, V_0 and the B_eff Zeeman contribution (all Hz) into the
    /// output slices.
    pub fn evaluate(
        &self,
        beams: &BeamSet,
        b: &BiasField,
        c: &PhysicalConstants,
        v_m1: &mut [f64],
        v_0: &mut [f64],
        b_eff: &mut [f64],
    ) {
        let k = beams.wavenumber;
        let b0 = b.vector();
        let b0_norm = b0.norm();
        for (j, &xj) in self.x.iter().enumerate() {
            let mut e = CVector3::zeros();
            for beam in &beams.beams {
                let kx = beam.k_hat.x;
                let wave = if kx == 1.0 && k == TAU {
                    self.phase[j]
                } else if kx == -1.0 && k == TAU {
                    self.phase[j].conj()
                } else if kx == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::cis(k * kx * xj)
                };
                e += beam.weighted_jones() * wave;
            }
            let point = FieldPoint { e };
            let us = scalar_potential(&point, c);
            let beff = point.spin_density() * (c.alpha_v / 4.0);
            let btot = (b0 + beff / c.gf_mub).norm();
            v_0[j] = us;
            v_m1[j] = us + BiasField::zeeman_energy(c, -1, btot);
            b_eff[j] = c.gf_mub * (btot - b0_norm);
        }
    }
}

/// Samples both spin potentials at `n` uniform points over x ∈ [0, 1) λ.
pub fn sample_cut(beams: &BeamSet, b: &BiasField, n: usize, c: &PhysicalConstants) -> Result<SpinPotentialGrid> {
    if n < 16 {
        return Err(invalid("grid.n", format!("need at least 16 samples, got {n}")));
    }
    let x: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let eval = CutEvaluator::new(x.clone());
    let mut v_m1 = vec![0.0; n];
    let mut v_0 = vec![0.0; n];
    let mut beff = vec![0.0; n];
    eval.evaluate(beams, b, c, &mut v_m1, &mut v_0, &mut beff);
    Ok(SpinPotentialGrid { x, v_m_minus1: v_m1, v_m0: v_0, b_eff_proj: beff, controls: None })
}

/// Samples the cut for a set of controls and records them as metadata.
pub fn sample_controls(
    controls: &LatticeControls,
    b: &BiasField,
    n: usize,
    c: &PhysicalConstants,
) -> Result<SpinPotentialGrid> {
    let beams = controls_to_beams(controls, c)?;
    let mut grid = sample_cut(&beams, b, n, c)?;
    grid.controls = Some(*controls);
    Ok(grid)
}

/// Lattice parameters read back from a sampled scalar potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredLattice {
    /// λ/2 depth including `total_scale`, E_R.
    pub v_half: f64,
    /// λ depth including `total_scale`, E_R.
    pub v_lambda: f64,
    /// λ-lattice position in [−1, 0), λ.
    pub dx: f64,
}

/// Recovers (v_half, v_lambda, dx) from the first two spatial harmonics of a
/// uniformly sampled scalar potential.
pub fn measure_lattice(v_m0: &[f64], c: &PhysicalConstants) -> MeasuredLattice {
    let n = v_m0.len() as f64;
    let harmonic = |m: f64| {
        v_m0.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, &v)| {
            acc + v * Complex64::cis(-TAU * m * j as f64 / n)
        }) / n
    };
    let (c1, c2) = (harmonic(1.0), harmonic(2.0));
    let v_lambda = 4.0 * c1.norm();
    // c1 = −(V_λ/4)·e^{−2πi·dx}
    let mut dx = -(-c1).arg() / TAU;
    if v_lambda == 0.0 {
        dx = -0.5;
    }
    while dx >= 0.0 {
        dx -= 1.0;
    }
    while dx < -1.0 {
        dx += 1.0;
    }
    // c2 = V_h/4 − (V_λ/16)·e^{−4πi·dx}
    let v_half = 4.0 * (c2 + v_lambda / 16.0 * Complex64::cis(-2.0 * TAU * dx)).re;
    let er = c.recoil();
    MeasuredLattice { v_half: v_half / er, v_lambda: v_lambda / er, dx }
}

/// Largest |V_{−1} − V_0 − Zeeman(B₀)| along the cut, Hz.
pub fn max_vector_shift(grid: &SpinPotentialGrid, b: &BiasField, c: &PhysicalConstants) -> f64 {
    let z = BiasField::zeeman_energy(c, -1, b.magnitude);
    grid.v_m_minus1
        .iter()
        .zip(&grid.v_m0)
        .map(|(m1, m0)| (m1 - m0 - z).abs())
        .fold(0.0, f64::max)
}

/// Polarization phase that maximizes the vector shift at fixed intensity.
pub const FULL_ELLIPTICITY: f64 = FRAC_PI_2;

/// Controls with unit amplitude per beam (the reference power of the
/// polarizabilities), equal in-plane and vertical components and full
/// ellipticity: the largest vector shift the beams can produce.
pub fn full_ellipticity_controls(c: &PhysicalConstants) -> LatticeControls {
    // θ = π/4 needs v_lambda/4 = v_half, and unit amplitude needs
    // (v_half + v_lambda/4)·E_R = α_s.
    let v_half = c.alpha_s / (2.0 * c.recoil());
    LatticeControls::new(v_half, 4.0 * v_half, -0.5, FULL_ELLIPTICITY)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn single_beam_has_uniform_magnitude() {
        let beam = Beam::new(Vector3::x(), 0.7, Vector3::new(0.0.into(), 1.0.into(), 0.0.into()), 0.3).unwrap();
        let set = BeamSet::new(vec![beam]).unwrap();
        for x in [0.0, 0.13, 0.5, 0.77] {
            let e = synthesize_field(&set, Vector3::new(x, 0.2, -0.1));
            assert!((e.intensity().sqrt() - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn counter_propagating_pair_is_standing_wave() {
        let y = Vector3::new(0.0.into(), 1.0.into(), 0.0.into());
        let set = BeamSet::new(vec![
            Beam::new(Vector3::x(), 1.0, y, 0.0).unwrap(),
            Beam::new(-Vector3::x(), 1.0, y, 0.0).unwrap(),
        ])
        .unwrap();
        for x in [0.0, 0.1, 0.25, 0.6] {
            let e = synthesize_field(&set, Vector3::new(x, 0.0, 0.0));
            let want = 2.0 * (TAU * x).cos();
            assert!((e.e.y - want).norm() < 1e-14);
            assert!(e.e.x.norm() < 1e-15 && e.e.z.norm() < 1e-15);
        }
    }

    #[test]
    fn empty_set_is_rejected() {
        assert_eq!(BeamSet::new(vec![]).unwrap_err(), Error::EmptyBeamSet);
    }

    #[test]
    fn non_transverse_jones_is_rejected() {
        let j = Vector3::new(1.0.into(), 0.0.into(), 0.0.into());
        assert!(Beam::new(Vector3::x(), 1.0, j, 0.0).is_err());
    }

    #[test]
    fn scalar_potential_of_standing_wave_antinode() {
        let c = consts();
        let e = FieldPoint { e: Vector3::new(0.0.into(), 2.0.into(), 0.0.into()) };
        assert!((scalar_potential(&e, &c) + c.alpha_s).abs() < 1e-9);
        assert_eq!(scalar_potential(&FieldPoint { e: CVector3::zeros() }, &c), 0.0);
    }

    #[test]
    fn linear_polarization_has_no_effective_field() {
        let c = consts();
        let g = Complex64::cis(0.83);
        let e = FieldPoint { e: Vector3::new(0.3.into(), (-1.2).into(), 0.5.into()) * g };
        assert!(effective_field(&e, &c).norm() < 1e-9);
    }

    #[test]
    fn circular_polarization_effective_field() {
        let c = consts();
        let a = 1.7;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = FieldPoint { e: Vector3::new(Complex64::new(a * s, 0.0), Complex64::new(0.0, a * s), 0.0.into()) };
        let b = effective_field(&e, &c);
        // i(E*×E) = −|a|²ẑ for (x̂ + iŷ)/√2.
        let want = Vector3::new(0.0, 0.0, -c.alpha_v * a * a / 4.0);
        assert!((b - want).norm() < 1e-9 * want.norm());
        assert!((e.spin_density() - Vector3::new(0.0, 0.0, -a * a)).norm() < 1e-14);
    }

    #[test]
    fn bare_zeeman_energy_of_minus_one() {
        let c = consts();
        let b = BiasField::default();
        let v = spin_potential(&FieldPoint { e: CVector3::zeros() }, &b, -1, &c).unwrap();
        let want = -c.gf_mub * b.magnitude + 300e3;
        assert!((v - want).abs() < 1e-6);
        assert!(spin_potential(&FieldPoint { e: CVector3::zeros() }, &b, 1, &c).is_err());
    }

    #[test]
    fn perpendicular_effective_field_is_second_order() {
        // Field with i(E*×E) along ẑ, perpendicular to B₀.
        let c = consts();
        let b = BiasField::default();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for amp in [5.0, 10.0] {
            let e = FieldPoint { e: Vector3::new(Complex64::new(amp * s, 0.0), Complex64::new(0.0, amp * s), 0.0.into()) };
            let beff = effective_field(&e, &c).norm();
            let shift = spin_potential(&e, &b, -1, &c).unwrap()
                - scalar_potential(&e, &c)
                - BiasField::zeeman_energy(&c, -1, b.magnitude);
            // |B₀ + b⊥| − |B₀| ≈ b⊥²/(2|B₀|) in Hz units.
            let b0 = c.gf_mub * b.magnitude;
            let linear = -beff * beff / (2.0 * b0);
            let quad = c.q_quad / (c.gf_mub * c.gf_mub) * beff * beff;
            assert!(((shift - (linear + quad)) / shift).abs() < 1e-2, "{shift} vs {}", linear + quad);
        }
    }

    #[test]
    fn controls_validate_ranges() {
        let mut k = LatticeControls::default();
        k.dx = 0.3;
        let err = k.validate().unwrap_err();
        assert!(err.to_string().contains("controls.dx"));
        k.dx = -0.5;
        k.v_half = -1.0;
        assert!(k.validate().is_err());
    }

    #[test]
    fn beams_from_controls_are_valid_and_four() {
        let c = consts();
        let set = controls_to_beams(&LatticeControls::new(40.0, 60.0, -0.62, 0.4), &c).unwrap();
        assert_eq!(set.beams().len(), 4);
    }

    #[test]
    fn cut_matches_closed_form() {
        let c = consts();
        let b = BiasField::default();
        let k = LatticeControls::new(37.0, 55.0, -0.41, 0.0);
        let grid = sample_controls(&k, &b, 64, &c).unwrap();
        let er = c.recoil();
        let (vh, vl) = (k.v_half * er, k.v_lambda * er);
        let base = -(vh + vl / 4.0);
        for (x, v) in grid.x.iter().zip(&grid.v_m0) {
            let closed = base - vh * (TAU * x).sin().powi(2) - vl / 4.0 * ((1.0 + (TAU * (x - k.dx)).cos()).powi(2) - 1.0);
            assert!((v - closed).abs() < 1e-8 * vh, "{x}: {v} vs {closed}");
        }
    }

    #[test]
    fn too_few_samples() {
        let c = consts();
        let set = controls_to_beams(&LatticeControls::default(), &c).unwrap();
        assert!(sample_cut(&set, &BiasField::default(), 8, &c).is_err());
    }
}
