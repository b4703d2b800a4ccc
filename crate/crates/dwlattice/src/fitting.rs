//! Least-squares extraction of lineshapes, damped oscillations, decay times
//! and fringe visibility.
//!
//! All fits use damped Gauss-Newton (Levenberg-Marquardt) steps on an
//! internal parameter vector. Bounded quantities are mapped through smooth
//! transforms (τ = e^u, V = 1/(1 + e^{−v})), so bounds hold by construction.
//! Uncertainties are 1σ estimates from the residual-scaled inverse curvature
//! s²(JᵀJ)⁻¹, carried to the physical parameters by the transform derivative.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::dynamics::TofProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// 1σ; infinite when the curvature matrix is singular.
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParameter>,
    pub residual_rms: f64,
    pub converged: bool,
    /// Diagnostics such as `ambiguous-frequency`.
    pub flags: Vec<String>,
}

impl FitResult {
    fn param(&self, name: &str) -> &FitParameter {
        self.params
            .iter()
            .find(|p| p.name == name)
            .unwrap_or_else(|| panic!("fit has no parameter named {name}"))
    }

    /// Value of the named parameter. Panics on an unknown name.
    pub fn value(&self, name: &str) -> f64 {
        self.param(name).value
    }

    pub fn uncertainty(&self, name: &str) -> f64 {
        self.param(name).uncertainty
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

/// How an internal parameter maps to its physical value.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Transform {
    Free,
    /// value = e^u
    Positive,
    /// value = 1/(1 + e^{−u})
    Unit,
}

impl Transform {
    fn forward(self, u: f64) -> f64 {
        match self {
            Transform::Free => u,
            Transform::Positive => u.exp(),
            Transform::Unit => 1.0 / (1.0 + (-u).exp()),
        }
    }

    fn inverse(self, v: f64) -> f64 {
        match self {
            Transform::Free => v,
            Transform::Positive => v.max(f64::MIN_POSITIVE).ln(),
            Transform::Unit => {
                let v = v.clamp(1e-9, 1.0 - 1e-9);
                (v / (1.0 - v)).ln()
            }
        }
    }

    fn derivative(self, u: f64) -> f64 {
        match self {
            Transform::Free => 1.0,
            Transform::Positive => u.exp(),
            Transform::Unit => {
                let s = self.forward(u);
                s * (1.0 - s)
            }
        }
    }
}

struct Outcome {
    values: Vec<f64>,
    uncertainties: Vec<f64>,
    residual_rms: f64,
    converged: bool,
}

const MAX_ITERATIONS: usize = 500;

fn residuals(model: &dyn Fn(&[f64], f64) -> f64, p: &[f64], x: &[f64], y: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().zip(y).map(|(&xi, &yi)| yi - model(p, xi)))
}

fn physical(u: &[f64], tr: &[Transform]) -> Vec<f64> {
    u.iter().zip(tr).map(|(&u, &t)| t.forward(u)).collect()
}

fn jacobian(model: &dyn Fn(&[f64], f64) -> f64, u: &[f64], tr: &[Transform], x: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(x.len(), u.len());
    let mut up = u.to_vec();
    for k in 0..u.len() {
        let h = 1e-6 * u[k].abs().max(1e-3);
        up[k] = u[k] + h;
        let plus = physical(&up, tr);
        up[k] = u[k] - h;
        let minus = physical(&up, tr);
        up[k] = u[k];
        for (i, &xi) in x.iter().enumerate() {
            j[(i, k)] = (model(&plus, xi) - model(&minus, xi)) / (2.0 * h);
        }
    }
    j
}

/// Minimizes Σ(y − model(p, x))² from the physical starting point `p0`.
fn levenberg_marquardt(
    model: &dyn Fn(&[f64], f64) -> f64,
    x: &[f64],
    y: &[f64],
    p0: &[f64],
    tr: &[Transform],
) -> Outcome {
    let n = x.len();
    let m = p0.len();
    let mut u: Vec<f64> = p0.iter().zip(tr).map(|(&v, &t)| t.inverse(v)).collect();
    let mut r = residuals(model, &physical(&u, tr), x, y);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let j = jacobian(model, &u, tr, x);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() <= 1e-15 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tr_r = residuals(model, &physical(&trial, tr), x, y);
            let tr_cost = tr_r.norm_squared();
            if tr_cost.is_finite() && tr_cost <= cost {
                let small = step.iter().zip(&u).all(|(s, v)| s.abs() <= 1e-12 * (v.abs() + 1e-6));
                let flat = cost - tr_cost <= 1e-14 * cost.max(f64::MIN_POSITIVE);
                u = trial;
                r = tr_r;
                cost = tr_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if small || flat {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: a (possibly degenerate) minimum.
            converged = cost.is_finite();
            break;
        }
        if converged {
            break;
        }
    }
    let values = physical(&u, tr);
    let j = jacobian(model, &u, tr, x);
    let dof = n.saturating_sub(m).max(1) as f64;
    let s2 = cost / dof;
    let inv = (j.transpose() * &j).try_inverse();
    let uncertainties = match inv {
        Some(cov) => (0..m)
            .map(|k| {
                let var = s2 * cov[(k, k)];
                let sd = tr[k].derivative(u[k]).abs() * var.max(0.0).sqrt();
                if sd.is_finite() { sd } else { f64::INFINITY }
            })
            .collect(),
        None => vec![f64::INFINITY; m],
    };
    if uncertainties.iter().any(|s| s.is_infinite()) {
        converged = false;
    }
    Outcome { values, uncertainties, residual_rms: (cost / n.max(1) as f64).sqrt(), converged }
}

fn finish(names: &[&str], out: Outcome, flags: Vec<String>) -> FitResult {
    FitResult {
        params: names
            .iter()
            .zip(out.values.iter().zip(&out.uncertainties))
            .map(|(n, (&value, &uncertainty))| FitParameter { name: (*n).to_string(), value, uncertainty })
            .collect(),
        residual_rms: out.residual_rms,
        converged: out.converged,
        flags,
    }
}

fn check_data(x: &[f64], y: &[f64], min_points: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::SizeMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < min_points {
        return Err(Error::Fit(format!("need at least {min_points} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("data contain non-finite values".into()));
    }
    Ok(())
}

/// Fixed-time Rabi resonance, frequencies in Hz and pulse time in μs.
pub fn rabi_lineshape(detuning: f64, rabi: f64, pulse_time: f64) -> f64 {
    let w2 = rabi * rabi + detuning * detuning;
    if w2 == 0.0 {
        return 0.0;
    }
    rabi * rabi / w2 * (PI * w2.sqrt() * pulse_time * 1e-6).sin().powi(2)
}

/// Fits P(f) = A·Ω²/(Ω²+δ²)·sin²(π√(Ω²+δ²)·t) + c with δ = f − center.
///
/// `pulse_time` is fixed (μs). A is negative for a dip, as in a spectrum of
/// remaining population. Parameters: center, rabi, amplitude, offset.
pub fn fit_rabi_lineshape(freq: &[f64], population: &[f64], pulse_time: f64) -> Result<FitResult> {
    check_data(freq, population, 8)?;
    if !(pulse_time.is_finite() && pulse_time > 0.0) {
        return Err(Error::Fit("pulse time must be positive".into()));
    }
    let mut order: Vec<usize> = (0..freq.len()).collect();
    order.sort_by(|&a, &b| freq[a].total_cmp(&freq[b]));
    let edge = (freq.len() / 8).max(1);
    let offset = (order[..edge].iter().chain(&order[order.len() - edge..]).map(|&i| population[i]).sum::<f64>())
        / (2 * edge) as f64;
    let far = population
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 - offset).abs().total_cmp(&(b.1 - offset).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let amplitude = population[far] - offset;
    let rabi = 1e6 / (2.0 * pulse_time);
    let model = move |p: &[f64], f: f64| p[2] * rabi_lineshape(f - p[0], p[1], pulse_time) + p[3];
    let tr = [Transform::Free, Transform::Positive, Transform::Free, Transform::Free];
    let out = levenberg_marquardt(&model, freq, population, &[freq[far], rabi, amplitude, offset], &tr);
    Ok(finish(&["center", "rabi", "amplitude", "offset"], out, vec![]))
}

/// Peak frequency of the mean-removed samples by zero-padded FFT with
/// parabolic refinement. Assumes near-uniform sampling.
pub fn fft_peak_frequency(t: &[f64], y: &[f64]) -> Option<f64> {
    let n = t.len();
    if n < 4 {
        return None;
    }
    let span = t[n - 1] - t[0];
    if !(span > 0.0) {
        return None;
    }
    let dt = span / (n - 1) as f64;
    let mean = y.iter().sum::<f64>() / n as f64;
    let m = (8 * n).next_power_of_two();
    let mut buf = vec![Complex64::default(); m];
    for (b, v) in buf.iter_mut().zip(y) {
        *b = Complex64::new(v - mean, 0.0);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mag: Vec<f64> = buf[..m / 2].iter().map(|c| c.norm()).collect();
    let k = (1..mag.len() - 1).max_by(|&a, &b| mag[a].total_cmp(&mag[b]))?;
    if mag[k] == 0.0 {
        return None;
    }
    let (a, b, c) = (mag[k - 1], mag[k], mag[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((k as f64 + shift) / (m as f64 * dt))
}

/// Linear least squares of y ≈ c + a·sin(2πft) + b·cos(2πft).
fn sine_projection(t: &[f64], y: &[f64], f: f64) -> Option<(f64, f64, f64)> {
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, c) = (TAU * f * ti).sin_cos();
        let row = nalgebra::Vector3::new(1.0, s, c);
        ata += row * row.transpose();
        aty += row * yi;
    }
    let sol = ata.try_inverse()? * aty;
    Some((sol[0], sol[1], sol[2]))
}

/// Fits A·e^{−t/τ}·sin(2πft + φ) + c.
///
/// The frequency is in cycles per unit of `t`. Parameters: frequency,
/// decay_time, amplitude, phase, offset. The starting frequency comes from
/// the FFT peak; `ambiguous-frequency` is flagged when the fit moves more
/// than 10% away from it, and `decay-unresolved` when τ exceeds ten times
/// the sampled span.
pub fn fit_damped_sine(t: &[f64], y: &[f64]) -> Result<FitResult> {
    check_data(t, y, 8)?;
    let n = t.len();
    let span = t[n - 1] - t[0];
    let mean = y.iter().sum::<f64>() / n as f64;
    let f0 = fft_peak_frequency(t, y).unwrap_or(1.0 / span.max(f64::MIN_POSITIVE));
    let (c0, a0, b0) = sine_projection(t, y, f0).unwrap_or((mean, 0.0, 0.0));
    let amp0 = (a0 * a0 + b0 * b0).sqrt();
    let phase0 = b0.atan2(a0);
    let half = n / 2;
    let tau0 = match (sine_projection(&t[..half], &y[..half], f0), sine_projection(&t[half..], &y[half..], f0)) {
        (Some((_, a1, b1)), Some((_, a2, b2))) => {
            let (r1, r2) = ((a1 * a1 + b1 * b1).sqrt(), (a2 * a2 + b2 * b2).sqrt());
            if r2 > 0.0 && r1 > r2 * 1.01 {
                (0.5 * span) / (r1 / r2).ln()
            } else {
                10.0 * span
            }
        }
        _ => 10.0 * span,
    };
    let t0 = t[0];
    // Envelope anchored at the first sample keeps A and τ decorrelated.
    let model = move |p: &[f64], x: f64| p[2] * (-(x - t0) / p[1]).exp() * (TAU * p[0] * x + p[3]).sin() + p[4];
    let tr = [Transform::Free, Transform::Positive, Transform::Free, Transform::Free, Transform::Free];
    let mut out = levenberg_marquardt(&model, t, y, &[f0, tau0, amp0.max(1e-12), phase0, c0], &tr);
    let mut flags = vec![];
    if (out.values[0] - f0).abs() > 0.1 * f0.abs() {
        flags.push("ambiguous-frequency".to_string());
    }
    if out.values[1] > 10.0 * span {
        flags.push("decay-unresolved".to_string());
    }
    // Report the amplitude at t = 0 with a positive sign.
    let anchor = (t0 / out.values[1]).exp();
    out.values[2] *= anchor;
    out.uncertainties[2] *= anchor;
    if out.values[2] < 0.0 {
        out.values[2] = -out.values[2];
        out.values[3] += PI;
    }
    out.values[3] = (out.values[3] + PI).rem_euclid(TAU) - PI;
    Ok(finish(&["frequency", "decay_time", "amplitude", "phase", "offset"], out, flags))
}

/// Fits N·exp(−(p − p₀)²/2w²)·(1 + V·cos(2πp/P + φ)) to a momentum profile.
///
/// Parameters: visibility, period (ħk), envelope_width (ħk), phase, center,
/// norm. Requires at least three fringe periods inside the profile window.
pub fn fit_visibility(profile: &TofProfile) -> Result<FitResult> {
    let (p, rho) = (&profile.momentum, &profile.density);
    check_data(p, rho, 16)?;
    let span = p[p.len() - 1] - p[0];
    let period0 = profile.fringe_period.unwrap_or(span / 8.0);
    if !(period0.is_finite() && period0 > 0.0) || span < 3.0 * period0 {
        return Err(Error::Fit(format!("profile spans fewer than three fringes of period {period0}")));
    }
    let total: f64 = rho.iter().sum();
    let center0 = p.iter().zip(rho).map(|(a, b)| a * b).sum::<f64>() / total;
    let var = p.iter().zip(rho).map(|(a, b)| (a - center0).powi(2) * b).sum::<f64>() / total;
    let norm0 = rho.iter().copied().fold(0.0, f64::max) / (1.0 + profile.visibility);
    let vis0 = profile.visibility.clamp(0.02, 0.98);
    let model = |q: &[f64], x: f64| {
        let env = (-(x - q[4]).powi(2) / (2.0 * q[2] * q[2])).exp();
        q[5] * env * (1.0 + q[0] * (TAU * x / q[1] + q[3]).cos())
    };
    let tr = [Transform::Unit, Transform::Positive, Transform::Positive, Transform::Free, Transform::Free, Transform::Free];
    let p0 = [vis0, period0, var.sqrt().max(1e-3), profile.fringe_phase.unwrap_or(0.0), center0, norm0];
    // Try both fringe-phase branches and keep the better fit.
    let a = levenberg_marquardt(&model, p, rho, &p0, &tr);
    let mut alt = p0;
    alt[3] += PI;
    let b = levenberg_marquardt(&model, p, rho, &alt, &tr);
    let mut out = if b.residual_rms < a.residual_rms { b } else { a };
    out.values[3] = (out.values[3] + PI).rem_euclid(TAU) - PI;
    Ok(finish(&["visibility", "period", "envelope_width", "phase", "center", "norm"], out, vec![]))
}

/// First time at which `value` falls to 1/e of its initial value, by
/// log-linear interpolation between samples. None if it never does.
pub fn decay_time(t: &[f64], value: &[f64]) -> Option<f64> {
    let first = *value.first()?;
    if !(first > 0.0) {
        return None;
    }
    let target = first / std::f64::consts::E;
    for i in 1..value.len().min(t.len()) {
        if value[i] <= target {
            let (v0, v1) = (value[i - 1], value[i]);
            if v1 <= 0.0 {
                let s = (v0 - target) / (v0 - v1);
                return Some(t[i - 1] + s * (t[i] - t[i - 1]));
            }
            let s = (v0.ln() - target.ln()) / (v0.ln() - v1.ln());
            return Some(t[i - 1] + s * (t[i] - t[i - 1]));
        }
    }
    None
}
