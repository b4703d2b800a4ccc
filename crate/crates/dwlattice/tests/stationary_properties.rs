use dwlattice::field::{sample_controls, LatticeControls};
use dwlattice::stationary::*;
use dwlattice::{BiasField, Grid1D, PhysicalConstants};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn potential(k: &LatticeControls, n: usize) -> (Grid1D, Vec<f64>) {
    let cut = sample_controls(k, &BiasField::default(), n, &consts()).unwrap();
    (Grid1D::unit_cell(n).unwrap(), cut.v_m0)
}

#[test]
fn half_lattice_vibrational_gap_matches_harmonic_oracle() {
    let c = consts();
    let (g, v) = potential(&LatticeControls::new(80.0, 0.0, -0.5, 0.0), 256);
    let h = build_hamiltonian(&g, &v, &c, KineticModel::Spectral).unwrap();
    let sol = lowest_eigenpairs(&h, 4, 1e-3).unwrap();
    // States 0 and 1 are the tunnelling doublet of the two sites per cell.
    let gap = (sol.energies[2] - sol.energies[0]) / c.recoil();
    let oracle = 2.0 * 80f64.sqrt();
    assert!((gap / oracle - 1.0).abs() < 0.10, "gap {gap} E_R vs {oracle}");
}

#[test]
fn lambda_lattice_gap_matches_local_curvature() {
    let c = consts();
    let n = 256;
    let (g, v) = potential(&LatticeControls::new(0.0, 100.0, -0.5, 0.0), n);
    let h = build_hamiltonian(&g, &v, &c, KineticModel::Spectral).unwrap();
    let sol = lowest_eigenpairs(&h, 3, 1e-3).unwrap();
    let gap = sol.energies[1] - sol.energies[0];
    // Harmonic quantum from the curvature at the minimum, x in λ:
    // hν = √(E_R·U''/2)/π.
    let j = (0..n).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    let dx = 1.0 / n as f64;
    let curv = (v[(j + 1) % n] - 2.0 * v[j] + v[(j + n - 1) % n]) / (dx * dx);
    let oracle = (c.recoil() * curv / 2.0).sqrt() / std::f64::consts::PI;
    assert!((gap / oracle - 1.0).abs() < 0.10, "gap {gap} vs {oracle}");
}

#[test]
fn spectral_and_finite_difference_agree() {
    let c = consts();
    for k in [LatticeControls::new(80.0, 20.0, -0.5, 0.0), LatticeControls::new(40.0, 60.0, -0.42, 0.0)] {
        let (g, v) = potential(&k, 256);
        let a = lowest_eigenpairs(&build_hamiltonian(&g, &v, &c, KineticModel::Spectral).unwrap(), 4, 1e-3).unwrap();
        let b = lowest_eigenpairs(&build_hamiltonian(&g, &v, &c, KineticModel::FiniteDifference8).unwrap(), 4, 1e-3)
            .unwrap();
        for (x, y) in a.energies.iter().zip(&b.energies) {
            let scale = x.abs().max(c.recoil());
            assert!((x - y).abs() / scale < 1e-3, "{x} vs {y}");
        }
    }
}

#[test]
fn addressing_configuration_has_four_localized_states() {
    let c = consts();
    let b = BiasField::default();
    let k = LatticeControls::new(80.0, 20.0, -0.5, -0.9);
    let cut = sample_controls(&k, &b, 256, &c).unwrap();
    for m in [-1, 0] {
        let s = solve_spin(&cut, m, 2, &c).unwrap();
        assert!(s.sites.localization() >= 0.9, "m_F = {m}: {}", s.sites.localization());
    }
    let t = transitions_for(&k, &b, 256, &c).unwrap();
    assert!(t.splitting > 20e3 && t.splitting < 40e3, "{t:?}");
}

#[test]
fn finer_grid_does_not_raise_ground_energy() {
    let c = consts();
    let k = LatticeControls::new(60.0, 30.0, -0.45, 0.0);
    let mut last = f64::INFINITY;
    for n in [64, 128, 256] {
        let (g, v) = potential(&k, n);
        let e = lowest_eigenpairs(&build_hamiltonian(&g, &v, &c, KineticModel::Spectral).unwrap(), 1, 1e-3)
            .unwrap()
            .energies[0];
        assert!(e <= last + 1e-6 * e.abs(), "n = {n}: {e} after {last}");
        last = e;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_wells_have_definite_parity(vh in 20.0..100.0f64, vl in 0.0..60.0f64) {
        let c = consts();
        let n = 128;
        let (g, v) = potential(&LatticeControls::new(vh, vl, -0.5, 0.0), n);
        let sol = lowest_eigenpairs(&build_hamiltonian(&g, &v, &c, KineticModel::Spectral).unwrap(), 4, 1e-3).unwrap();
        // The potential is even about x = 1/2.
        for psi in &sol.states {
            let mirror = |j: usize| psi[(n - j) % n];
            let even: f64 = (0..n).map(|j| (psi[j] - mirror(j)).norm_sqr()).sum();
            let odd: f64 = (0..n).map(|j| (psi[j] + mirror(j)).norm_sqr()).sum();
            prop_assert!(even.min(odd) < 1e-8, "asymmetry {}", even.min(odd));
        }
    }

    #[test]
    fn site_rotation_preserves_norm_and_trace(vh in 40.0..100.0f64, vl in 5.0..40.0f64, dx in -0.52..-0.48f64) {
        let c = consts();
        let n = 128;
        let (g, v) = potential(&LatticeControls::new(vh, vl, dx, 0.0), n);
        let h = build_hamiltonian(&g, &v, &c, KineticModel::Spectral).unwrap();
        let sol = lowest_eigenpairs(&h, 2, 1e-3).unwrap();
        let x = g.positions();
        let sites = localize_sites(&sol, &x, barrier_position(&x, &v)).unwrap();
        for s in [&sites.left_state, &sites.right_state] {
            prop_assert!((inner(s, s).re - 1.0).abs() < 1e-12);
        }
        prop_assert!(inner(&sites.left_state, &sites.right_state).norm() < 1e-12);
        let trace = sol.energies[0] + sol.energies[1];
        prop_assert!((sites.e_left + sites.e_right - trace).abs() < 1e-9 * trace.abs());
    }

    #[test]
    fn ground_state_band_overlap_is_one(vh in 20.0..100.0f64, vl in 0.0..60.0f64, dx in -0.9..-0.1f64) {
        let c = consts();
        let (g, v) = potential(&LatticeControls::new(vh, vl, dx, 0.0), 64);
        let sol = lowest_eigenpairs(&build_hamiltonian(&g, &v, &c, KineticModel::Spectral).unwrap(), 2, 1e-3).unwrap();
        prop_assert!((ground_band_overlap(&sol.states[0], &sol).unwrap() - 1.0).abs() < 1e-12);
        let flat: Vec<_> = (0..64).map(|j| num_complex::Complex64::cis(TAU * 20.0 * j as f64 / 64.0) / 8.0).collect();
        prop_assert!(ground_band_overlap(&flat, &sol).unwrap() < 0.5);
    }
}
