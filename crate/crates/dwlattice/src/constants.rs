//! Physical constants and the static bias field.
//!
//! Energies are carried as frequencies (Hz), lengths in units of the lattice
//! wavelength λ and times in μs. The polarizabilities are expressed per unit
//! of squared beam amplitude, where amplitude 1 is one beam of the reference
//! power and waist.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Planck constant, J·s.
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Mass of ⁸⁷Rb, kg.
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;

/// D1 line of ⁸⁷Rb: frequency (Hz) and natural linewidth (Hz).
const D1: (f64, f64) = (377.107_463_380e12, 5.746e6);
/// D2 line of ⁸⁷Rb.
const D2: (f64, f64) = (384.230_484_468e12, 6.065e6);
/// Landé factor of the F = 1 hyperfine manifold.
const G_F: f64 = -0.5;

/// Reference beam: power (W) and 1/e² radius (m) that define amplitude 1.
pub const REFERENCE_POWER: f64 = 0.1;
pub const REFERENCE_WAIST: f64 = 170e-6;

/// Constants shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    pub planck_h: f64,
    pub atom_mass: f64,
    /// Lattice wavelength, m.
    pub lambda: f64,
    /// Scalar polarizability, Hz per squared amplitude.
    pub alpha_s: f64,
    /// Vector polarizability, Hz per squared amplitude.
    pub alpha_v: f64,
    /// Linear Zeeman coefficient g_F·μ_B/h, Hz/T (magnitude).
    pub gf_mub: f64,
    /// Quadratic Zeeman coefficient, Hz/T².
    pub q_quad: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        let lambda = 803e-9;
        let (alpha_s, alpha_v) = polarizabilities(lambda, REFERENCE_POWER, REFERENCE_WAIST);
        Self {
            planck_h: PLANCK_H,
            atom_mass: RB87_MASS,
            lambda,
            alpha_s,
            alpha_v,
            gf_mub: BOHR_MAGNETON * G_F.abs() / PLANCK_H,
            q_quad: 300e3 / (BiasField::DEFAULT_MAGNITUDE * BiasField::DEFAULT_MAGNITUDE),
        }
    }
}

impl PhysicalConstants {
    /// Recoil energy h/(2mλ²) in Hz.
    pub fn recoil(&self) -> f64 {
        self.planck_h / (2.0 * self.atom_mass * self.lambda * self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("constants.planck_h", self.planck_h),
            ("constants.atom_mass", self.atom_mass),
            ("constants.lambda", self.lambda),
            ("constants.alpha_s", self.alpha_s),
            ("constants.gf_mub", self.gf_mub),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and positive, got {v}")));
            }
        }
        if !self.alpha_v.is_finite() {
            return Err(invalid("constants.alpha_v", "must be finite"));
        }
        if !(self.q_quad.is_finite() && self.q_quad >= 0.0) {
            return Err(invalid("constants.q_quad", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Scalar and vector polarizabilities (Hz per squared amplitude) of the
/// F = 1 ground state at `lambda`, from the two-line alkali light-shift
/// formula. Amplitude 1 is a single beam of `power` focused to `waist`.
///
/// The vector coefficient already contains g_F, so the vector shift of a
/// state is `alpha_v/4 · i(E*×E) · m_F`.
pub fn polarizabilities(lambda: f64, power: f64, waist: f64) -> (f64, f64) {
    let omega = 2.0 * PI * SPEED_OF_LIGHT / lambda;
    let line = |(nu, gamma): (f64, f64)| {
        let w0 = 2.0 * PI * nu;
        let prefactor = PI * SPEED_OF_LIGHT.powi(2) * 2.0 * PI * gamma / (2.0 * w0.powi(3));
        prefactor / (omega - w0)
    };
    let (c1, c2) = (line(D1), line(D2));
    let intensity = 2.0 * power / (PI * waist * waist);
    let scalar = (2.0 * c2 + c1) / PLANCK_H * intensity;
    let vector = (c2 - c1) / PLANCK_H * intensity * G_F;
    (-4.0 * scalar, -4.0 * vector)
}

/// Static bias field B₀ along (x̂ − ŷ)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiasField {
    /// |B₀| in tesla.
    pub magnitude: f64,
}

impl Default for BiasField {
    fn default() -> Self {
        Self { magnitude: Self::DEFAULT_MAGNITUDE }
    }
}

impl BiasField {
    pub const DEFAULT_MAGNITUDE: f64 = 4.8e-3;

    pub fn new(magnitude: f64) -> Result<Self> {
        let b = Self { magnitude };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(invalid("constants.bias_field", "|B0| must be positive"));
        }
        Ok(())
    }

    pub fn direction() -> Vector3<f64> {
        Vector3::new(1.0, -1.0, 0.0) / 2f64.sqrt()
    }

    /// B₀ in tesla.
    pub fn vector(&self) -> Vector3<f64> {
        Self::direction() * self.magnitude
    }

    /// Zeeman energy (Hz) of `m_f` in a field of magnitude `b` (tesla).
    pub fn zeeman_energy(c: &PhysicalConstants, m_f: i32, b: f64) -> f64 {
        let m = f64::from(m_f);
        m * c.gf_mub * b + c.q_quad * m * m * b * b
    }

    /// Bare |−1⟩ → |0⟩ transition frequency in the bias field alone.
    pub fn bare_transition(&self, c: &PhysicalConstants) -> f64 {
        -Self::zeeman_energy(c, -1, self.magnitude)
    }
}
