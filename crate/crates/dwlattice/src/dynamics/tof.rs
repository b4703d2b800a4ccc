//! Far-field momentum distribution after release from the lattice.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use super::state::SpinorState;
use crate::error::{invalid, Result};

/// Momentum window kept in the profile, ±ħk.
pub const MOMENTUM_RANGE: f64 = 20.0;
/// Zero-padding factor of the in-cell wavefunction for a single cell.
pub const BASE_PADDING: usize = 16;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TofProfile {
    /// Units of ħk.
    pub momentum: Vec<f64>,
    /// Normalized so that Σ density·Δp = 1.
    pub density: Vec<f64>,
    /// Fringe visibility in [0, 1]; zero when no fringe is found.
    pub visibility: f64,
    /// Fringe period, ħk.
    pub fringe_period: Option<f64>,
    /// Fringe phase at p = 0, rad.
    pub fringe_phase: Option<f64>,
    pub cell_count: usize,
}

impl TofProfile {
    pub fn bin(&self) -> f64 {
        self.momentum[1] - self.momentum[0]
    }
}

/// Autocorrelation G(s) = Σ ρ(p)·e^{2πi·p·s}·Δp at lag `s` (λ).
fn autocorrelation(p: &[f64], rho: &[f64], dp: f64, s: f64) -> Complex64 {
    p.iter().zip(rho).map(|(&pi, &r)| Complex64::cis(TAU * pi * s) * r).sum::<Complex64>() * dp
}

/// Momentum distribution of the spin-summed state for `cells` identical
/// unit cells with Gaussian occupation of width `envelope_sigma` cells.
///
/// Spin components are summed incoherently. The fringe of two sites a
/// distance s apart appears as an interior peak of the density
/// autocorrelation at lag s. Visibility is 2|G(s)|/G(0), which equals
/// (max − min)/(max + min) of the fringe relative to its envelope, and the
/// period is 1/s in ħk.
pub fn momentum_distribution(state: &SpinorState, cells: usize, envelope_sigma: f64) -> Result<TofProfile> {
    if cells == 0 {
        return Err(invalid("cells", "need at least one cell"));
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(crate::error::Error::NotNormalized(norm));
    }
    let n = state.grid.n;
    let cell_len = state.grid.length;
    let pad = (BASE_PADDING.max(4 * cells)).next_power_of_two();
    let m = n * pad;
    let fft = FftPlanner::new().plan_fft_forward(m);
    let mut power = vec![0.0; m];
    for comp in [&state.psi_minus1, &state.psi_0] {
        let mut buf = vec![Complex64::default(); m];
        buf[..n].copy_from_slice(comp);
        fft.process(&mut buf);
        power.iter_mut().zip(&buf).for_each(|(p, v)| *p += v.norm_sqr());
    }
    // Bin k carries momentum k/(pad·L) ħk.
    let dp = 1.0 / (pad as f64 * cell_len);
    let kmax = (MOMENTUM_RANGE / dp).round() as i64;
    let weights: Vec<f64> = (0..cells)
        .map(|c| {
            let u = c as f64 - (cells as f64 - 1.0) / 2.0;
            if envelope_sigma > 0.0 {
                (-u * u / (2.0 * envelope_sigma * envelope_sigma)).exp()
            } else {
                1.0
            }
        })
        .collect();
    let w2: f64 = weights.iter().map(|w| w * w).sum();
    let mut momentum = Vec::with_capacity((2 * kmax + 1) as usize);
    let mut density = Vec::with_capacity(momentum.capacity());
    for k in -kmax..=kmax {
        let p = k as f64 * dp;
        let idx = k.rem_euclid(m as i64) as usize;
        let array: Complex64 =
            weights.iter().enumerate().map(|(c, w)| Complex64::cis(TAU * p * c as f64 * cell_len) * w).sum();
        momentum.push(p);
        density.push(power[idx] * array.norm_sqr() / w2);
    }
    let total: f64 = density.iter().sum::<f64>() * dp;
    density.iter_mut().for_each(|d| *d /= total);

    // Coherence peaks are interior local maxima of |G| between a tenth of
    // the cell and the cell length; a lone wavepacket gives none. Peaks at
    // round-off level are ignored.
    let g0 = autocorrelation(&momentum, &density, dp, 0.0).re;
    let lags = 2000;
    let values: Vec<(f64, f64)> = (0..=lags)
        .map(|i| {
            let s = cell_len * (0.1 + 0.85 * i as f64 / lags as f64);
            (s, autocorrelation(&momentum, &density, dp, s).norm())
        })
        .collect();
    let peak = values
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1 && w[1].1 > 1e-9 * g0)
        .map(|w| w[1])
        .max_by(|a, b| a.1.total_cmp(&b.1));
    let (visibility, fringe_period, fringe_phase) = match peak {
        Some((s, _)) => {
            let g = autocorrelation(&momentum, &density, dp, s);
            ((2.0 * g.norm() / g0).clamp(0.0, 1.0), Some(1.0 / s), Some(g.arg()))
        }
        None => (0.0, None, None),
    };
    Ok(TofProfile {
        momentum,
        density,
        visibility,
        fringe_period,
        fringe_phase,
        cell_count: cells,
    })
}
