use dwlattice::field::*;
use dwlattice::{BiasField, PhysicalConstants};
use nalgebra::Vector3;
use proptest::prelude::*;

fn consts() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn controls() -> impl Strategy<Value = LatticeControls> {
    (0.0..120.0f64, 0.0..120.0f64, -1.0..0.0f64, -3.0..3.0f64)
        .prop_map(|(vh, vl, dx, ph)| LatticeControls::new(vh, vl, dx, ph))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn global_phase_leaves_potentials_unchanged(k in controls(), phase in -10.0..10.0f64, x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let c = consts();
        let b = BiasField::default();
        let beams = controls_to_beams(&k, &c).unwrap();
        let shifted = beams.with_global_phase(phase);
        let r = Vector3::new(x, y, 0.0);
        let (e1, e2) = (synthesize_field(&beams, r), synthesize_field(&shifted, r));
        for m in [0, -1] {
            let (a, d) = (spin_potential(&e1, &b, m, &c).unwrap(), spin_potential(&e2, &b, m, &c).unwrap());
            prop_assert!((a - d).abs() <= 1e-9 * a.abs().max(1.0));
        }
        prop_assert!((e1.spin_density() - e2.spin_density()).norm() <= 1e-12 * e1.intensity().max(1.0));
    }

    #[test]
    fn potentials_are_lattice_periodic(k in controls(), x in 0.0..1.0f64, y in -1.0..1.0f64) {
        let c = consts();
        let b = BiasField::default();
        let beams = controls_to_beams(&k, &c).unwrap();
        let e0 = synthesize_field(&beams, Vector3::new(x, y, 0.0));
        for shift in [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0)] {
            let e1 = synthesize_field(&beams, Vector3::new(x, y, 0.0) + shift);
            for m in [0, -1] {
                let (a, d) = (spin_potential(&e0, &b, m, &c).unwrap(), spin_potential(&e1, &b, m, &c).unwrap());
                prop_assert!((a - d).abs() <= 1e-8 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn measured_lattice_round_trips(vh in 0.0..120.0f64, vl in 1.0..120.0f64, dx in -0.95..-0.05f64, ph in -1.5..1.5f64) {
        let c = consts();
        let k = LatticeControls::new(vh, vl, dx, ph);
        let cut = sample_controls(&k, &BiasField::default(), 64, &c).unwrap();
        let m = measure_lattice(&cut.v_m0, &c);
        prop_assert!((m.v_half - vh).abs() < 1e-8 * 120.0);
        prop_assert!((m.v_lambda - vl).abs() < 1e-8 * 120.0);
        prop_assert!((m.dx - dx).abs() < 1e-9);
    }

    #[test]
    fn linear_polarization_has_no_vector_shift(vh in 0.0..120.0f64, vl in 0.0..120.0f64, dx in -1.0..0.0f64) {
        let c = consts();
        let b = BiasField::default();
        let cut = sample_controls(&LatticeControls::new(vh, vl, dx, 0.0), &b, 32, &c).unwrap();
        prop_assert!(max_vector_shift(&cut, &b, &c) < 1e-6);
        prop_assert!(cut.b_eff_proj.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn scalar_potential_is_polarization_independent(vh in 0.0..120.0f64, vl in 0.0..120.0f64, dx in -1.0..0.0f64, ph in -3.0..3.0f64) {
        let c = consts();
        let b = BiasField::default();
        let a = sample_controls(&LatticeControls::new(vh, vl, dx, ph), &b, 32, &c).unwrap();
        let z = sample_controls(&LatticeControls::new(vh, vl, dx, 0.0), &b, 32, &c).unwrap();
        for (p, q) in a.v_m0.iter().zip(&z.v_m0) {
            prop_assert!((p - q).abs() <= 1e-9 * p.abs().max(1.0));
        }
    }
}

#[test]
fn cut_matches_closed_form_potential() {
    let c = consts();
    let k = LatticeControls::new(37.0, 55.0, -0.41, 0.7);
    let cut = sample_controls(&k, &BiasField::default(), 128, &c).unwrap();
    let er = c.recoil();
    let closed: Vec<f64> = cut
        .x
        .iter()
        .map(|&x| {
            let tau = std::f64::consts::TAU;
            -37.0 * er * (1.0 + (tau * x).sin().powi(2)) - 55.0 / 4.0 * er * (1.0 + (tau * (x + 0.41)).cos()).powi(2)
        })
        .collect();
    for (a, b) in cut.v_m0.iter().zip(&closed) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn addressing_configuration_shifts_mainly_the_right_well() {
    let c = consts();
    let b = BiasField::default();
    let k = LatticeControls::new(80.0, 20.0, -0.5, -0.9);
    let cut = sample_controls(&k, &b, 256, &c).unwrap();
    let rel = cut.v_m_minus1_relative(&b, &c);
    let diff: Vec<f64> = rel.iter().zip(&cut.v_m0).map(|(a, d)| a - d).collect();
    // Well centers sit at x = 1/4 (L) and 3/4 (R).
    let (left, right) = (diff[64].abs(), diff[192].abs());
    assert!(right > 5.0 * left, "left {left} right {right}");
}
