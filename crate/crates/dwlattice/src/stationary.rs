//! Single-particle eigenstates of the sampled lattice potentials.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::constants::{BiasField, PhysicalConstants};
use crate::error::{invalid, Error, Result};
use crate::field::{sample_controls, LatticeControls, SpinPotentialGrid};
use crate::grid::Grid1D;

/// Discretization of the kinetic operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticModel {
    /// Exact on the Fourier modes of the periodic grid.
    Spectral,
    /// Eighth-order central difference stencil.
    FiniteDifference8,
}

/// Real symmetric Hamiltonian matrix in Hz on a periodic grid.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub grid: Grid1D,
    pub kinetic: KineticModel,
    matrix: DMatrix<f64>,
    /// Constant removed from the diagonal before diagonalizing.
    offset: f64,
}

impl Hamiltonian {
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = self.matrix.clone();
        for j in 0..m.nrows() {
            m[(j, j)] += self.offset;
        }
        m
    }

    /// Applies H to a grid function.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = psi.len();
        (0..n)
            .map(|i| {
                let row = self.matrix.row(i);
                let mut acc = psi[i] * self.offset;
                for j in 0..n {
                    acc += psi[j] * row[j];
                }
                acc
            })
            .collect()
    }

    /// ⟨ψ|H|ψ⟩ for a normalized grid function.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        inner(psi, &self.apply(psi)).re
    }
}

fn kinetic_row(grid: &Grid1D, model: KineticModel, recoil: f64) -> Vec<f64> {
    let n = grid.n;
    match model {
        KineticModel::Spectral => {
            let energies = grid.kinetic_spectrum();
            (0..n)
                .map(|d| {
                    energies
                        .iter()
                        .enumerate()
                        .map(|(k, e)| e * (TAU * (k * d % n) as f64 / n as f64).cos())
                        .sum::<f64>()
                        * recoil
                        / n as f64
                })
                .collect()
        }
        KineticModel::FiniteDifference8 => {
            const STENCIL: [f64; 5] = [-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
            // T = −E_R/(4π²)·∂² with x in λ.
            let scale = -recoil / (TAU * TAU) / grid.dx_step().powi(2);
            let mut row = vec![0.0; n];
            for (d, c) in STENCIL.iter().enumerate() {
                row[d] += scale * c;
                if d > 0 {
                    row[n - d] += scale * c;
                }
            }
            row
        }
    }
}

/// Kinetic plus diagonal potential (Hz) on a periodic grid.
pub fn build_hamiltonian(
    grid: &Grid1D,
    potential: &[f64],
    c: &PhysicalConstants,
    kinetic: KineticModel,
) -> Result<Hamiltonian> {
    grid.validate()?;
    if potential.len() != grid.n {
        return Err(Error::SizeMismatch { expected: grid.n, got: potential.len() });
    }
    let n = grid.n;
    let offset = potential.iter().sum::<f64>() / n as f64;
    let row = kinetic_row(grid, kinetic, c.recoil());
    let mut m = DMatrix::from_fn(n, n, |i, j| row[(j + n - i) % n]);
    for (j, v) in potential.iter().enumerate() {
        m[(j, j)] += v - offset;
    }
    Ok(Hamiltonian { grid: *grid, kinetic, matrix: m, offset })
}

/// Lowest eigenpairs of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Ascending, Hz.
    pub energies: Vec<f64>,
    /// Unit-norm grid functions (Σ|ψ_j|² = 1).
    pub states: Vec<Vec<Complex64>>,
    /// ‖Hψ − Eψ‖ per state, Hz.
    pub residuals: Vec<f64>,
}

/// Inner product ⟨a|b⟩ of grid functions.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn fix_phase(psi: &mut [Complex64]) {
    let pivot = psi
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_default();
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        psi.iter_mut().for_each(|v| *v *= rot);
    }
}

/// Dense diagonalization keeping the `n_states` lowest pairs.
///
/// `tol` bounds the residual ‖Hψ − Eψ‖ in Hz.
pub fn lowest_eigenpairs(h: &Hamiltonian, n_states: usize, tol: f64) -> Result<EigenSolution> {
    let n = h.grid.n;
    if n_states == 0 || n_states > n / 4 {
        return Err(invalid("n_states", format!("must lie in 1..={}, got {n_states}", n / 4)));
    }
    let eig = SymmetricEigen::new(h.matrix.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut energies = Vec::with_capacity(n_states);
    let mut states = Vec::with_capacity(n_states);
    let mut residuals = Vec::with_capacity(n_states);
    for &k in order.iter().take(n_states) {
        let e = eig.eigenvalues[k] + h.offset;
        let mut psi: Vec<Complex64> = eig.eigenvectors.column(k).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let norm = inner(&psi, &psi).re.sqrt();
        psi.iter_mut().for_each(|v| *v /= norm);
        fix_phase(&mut psi);
        let hpsi = h.apply(&psi);
        let r = hpsi.iter().zip(&psi).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
        energies.push(e);
        states.push(psi);
        residuals.push(r);
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::NonConvergence { worst, tol, residuals });
    }
    Ok(EigenSolution { energies, states, residuals })
}

/// Default residual tolerance for a potential with energy range `scale` Hz.
pub fn default_tolerance(scale: f64) -> f64 {
    1e-8 * scale.abs().max(1.0)
}

/// Position of the potential maximum between the nominal well centers λ/4 and 3λ/4.
pub fn barrier_position(x: &[f64], potential: &[f64]) -> f64 {
    x.iter()
        .zip(potential)
        .filter(|(&xi, _)| (0.25..=0.75).contains(&xi))
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(&xi, _)| xi)
        .unwrap_or(0.5)
}

/// Whether grid position `x` lies in the left half-cell for a barrier at `barrier`.
pub fn in_left_half(x: f64, barrier: f64) -> bool {
    (x - barrier).rem_euclid(1.0) >= 0.5
}

/// Ground states of the left and right wells.
#[derive(Debug, Clone)]
pub struct SiteStates {
    pub left_state: Vec<Complex64>,
    pub right_state: Vec<Complex64>,
    /// Energies ⟨H⟩, Hz.
    pub e_left: f64,
    pub e_right: f64,
    /// Norm fraction of each state in its home half-cell.
    pub localization_left: f64,
    pub localization_right: f64,
    pub barrier: f64,
}

impl SiteStates {
    pub fn localization(&self) -> f64 {
        self.localization_left.min(self.localization_right)
    }
}

/// Rotates the two lowest states into left- and right-localized states.
pub fn localize_sites(sol: &EigenSolution, x: &[f64], barrier: f64) -> Result<SiteStates> {
    if sol.states.len() < 2 {
        return Err(invalid("n_states", "site localization needs at least two states"));
    }
    let (p0, p1) = (&sol.states[0], &sol.states[1]);
    if p0.len() != x.len() {
        return Err(Error::SizeMismatch { expected: x.len(), got: p0.len() });
    }
    // Left-half projector restricted to span{ψ0, ψ1}.
    let mut a = 0.0;
    let mut b = 0.0;
    let mut off = Complex64::new(0.0, 0.0);
    for (j, &xj) in x.iter().enumerate() {
        if in_left_half(xj, barrier) {
            a += p0[j].norm_sqr();
            b += p1[j].norm_sqr();
            off += p0[j].conj() * p1[j];
        }
    }
    let mean = 0.5 * (a + b);
    let radius = (0.25 * (a - b).powi(2) + off.norm_sqr()).sqrt();
    let (hi, lo) = (mean + radius, mean - radius);
    // Eigenvector of [[a, off], [off*, b]] for the larger eigenvalue.
    let (u0, u1) = if off.norm() > 1e-300 {
        let v0 = off;
        let v1 = Complex64::new(hi - a, 0.0);
        let n = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
        (v0 / n, v1 / n)
    } else if a >= b {
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    };
    let loc_left = hi;
    let loc_right = 1.0 - lo;
    if loc_left.min(loc_right) < 0.5 {
        return Err(Error::DegenerateGeometry(loc_left.min(loc_right)));
    }
    let (w0, w1) = (-u1.conj(), u0.conj());
    let combine = |c0: Complex64, c1: Complex64| {
        let mut psi: Vec<Complex64> = p0.iter().zip(p1).map(|(x0, x1)| c0 * x0 + c1 * x1).collect();
        fix_phase(&mut psi);
        psi
    };
    let (e0, e1) = (sol.energies[0], sol.energies[1]);
    Ok(SiteStates {
        left_state: combine(u0, u1),
        right_state: combine(w0, w1),
        e_left: u0.norm_sqr() * e0 + u1.norm_sqr() * e1,
        e_right: w0.norm_sqr() * e0 + w1.norm_sqr() * e1,
        localization_left: loc_left,
        localization_right: loc_right,
        barrier,
    })
}

/// |−1⟩ → |0⟩ resonance in each sublattice.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TransitionTable {
    pub nu_left: f64,
    pub nu_right: f64,
    pub splitting: f64,
}

pub fn transition_frequencies(sites_minus1: &SiteStates, sites_0: &SiteStates) -> Result<TransitionTable> {
    if sites_minus1.left_state.len() != sites_0.left_state.len() {
        return Err(Error::SizeMismatch { expected: sites_0.left_state.len(), got: sites_minus1.left_state.len() });
    }
    if (sites_minus1.barrier - sites_0.barrier).abs() > 0.5 {
        return Err(invalid("sites", "barrier positions of the two spin solutions disagree"));
    }
    let nu_left = sites_0.e_left - sites_minus1.e_left;
    let nu_right = sites_0.e_right - sites_minus1.e_right;
    Ok(TransitionTable { nu_left, nu_right, splitting: nu_right - nu_left })
}

/// Total weight of a normalized state on the supplied eigenstates.
pub fn ground_band_overlap(state: &[Complex64], sol: &EigenSolution) -> Result<f64> {
    let norm = inner(state, state).re;
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(sol.states.iter().map(|s| inner(s, state).norm_sqr()).sum::<f64>().min(1.0))
}

/// Eigenpairs and site states for one spin component of a sampled cut.
#[derive(Debug, Clone)]
pub struct SpinSolution {
    pub eigen: EigenSolution,
    pub sites: SiteStates,
}

pub fn solve_spin(
    cut: &SpinPotentialGrid,
    m_f: i32,
    n_states: usize,
    c: &PhysicalConstants,
) -> Result<SpinSolution> {
    let grid = Grid1D::unit_cell(cut.len())?;
    let v = cut.potential(m_f)?;
    let h = build_hamiltonian(&grid, v, c, KineticModel::Spectral)?;
    let range = v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min);
    let eigen = lowest_eigenpairs(&h, n_states, default_tolerance(range + 1e3 * c.recoil()))?;
    // The barrier is placed on the spin-independent scalar potential so that
    // both spins share one half-cell split.
    let barrier = barrier_position(&cut.x, &cut.v_m0);
    let sites = localize_sites(&eigen, &cut.x, barrier)?;
    Ok(SpinSolution { eigen, sites })
}

/// Sublattice resonances for a set of controls.
pub fn transitions_for(
    controls: &LatticeControls,
    bias: &BiasField,
    n: usize,
    c: &PhysicalConstants,
) -> Result<TransitionTable> {
    let cut = sample_controls(controls, bias, n, c)?;
    let m1 = solve_spin(&cut, -1, 2, c)?;
    let m0 = solve_spin(&cut, 0, 2, c)?;
    transition_frequencies(&m1.sites, &m0.sites)
}
