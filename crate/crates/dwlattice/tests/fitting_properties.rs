use dwlattice::dynamics::{momentum_distribution, SpinorState};
use dwlattice::fitting::*;
use dwlattice::Grid1D;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::TAU;

fn damped(t: f64, f: f64, tau: f64, a: f64, phi: f64, c: f64) -> f64 {
    a * (-t / tau).exp() * (TAU * f * t + phi).sin() + c
}

fn gaussian_site(x: &[f64], center: f64, width: f64) -> Vec<Complex64> {
    x.iter().map(|&xi| Complex64::new((-(xi - center).powi(2) / (4.0 * width * width)).exp(), 0.0)).collect()
}

fn normalized(v: Vec<Complex64>, weight: f64) -> Vec<Complex64> {
    let n: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c * (weight.sqrt() / n)).collect()
}

fn sites() -> (Grid1D, Vec<Complex64>, Vec<Complex64>) {
    let g = Grid1D::unit_cell(256).unwrap();
    let x = g.positions();
    (g, gaussian_site(&x, 0.25, 0.04), gaussian_site(&x, 0.75, 0.04))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn damped_sine_refit_recovers_parameters(
        f in 0.02..0.08f64, tau in 50.0..400.0f64, a in 0.2..0.5f64, phi in -3.0..3.0f64, c in 0.3..0.7f64,
    ) {
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|&ti| damped(ti, f, tau, a, phi, c)).collect();
        let fit = fit_damped_sine(&t, &y).unwrap();
        prop_assert!(fit.converged);
        prop_assert!((fit.value("frequency") / f - 1.0).abs() < 1e-6);
        prop_assert!((fit.value("decay_time") / tau - 1.0).abs() < 1e-6);
        prop_assert!((fit.value("amplitude") / a - 1.0).abs() < 1e-6);
        prop_assert!((fit.value("offset") - c).abs() < 1e-6);
        let dphi = (fit.value("phase") - phi + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
        prop_assert!(dphi.abs() < 1e-6);
    }

    #[test]
    fn rabi_lineshape_refit_recovers_center(center in -10e3..10e3f64, amp in -0.9..-0.3f64, off in 0.9..1.0f64) {
        let pulse = 30.0;
        let rabi = 1e6 / 60.0;
        let f: Vec<f64> = (0..61).map(|i| -60e3 + 2e3 * i as f64).collect();
        let y: Vec<f64> = f.iter().map(|&fi| amp * rabi_lineshape(fi - center, rabi, pulse) + off).collect();
        let fit = fit_rabi_lineshape(&f, &y, pulse).unwrap();
        prop_assert!((fit.value("center") - center).abs() < 1e-6 * rabi);
        prop_assert!((fit.value("rabi") / rabi - 1.0).abs() < 1e-6);
        prop_assert!((fit.value("amplitude") - amp).abs() < 1e-6);
    }
}

#[test]
fn noisy_damped_sine_is_within_uncertainty() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let t: Vec<f64> = (0..300).map(|i| i as f64).collect();
    let y: Vec<f64> = t.iter().map(|&ti| damped(ti, 0.031, 180.0, 0.45, 0.7, 0.5) + noise.sample(&mut rng)).collect();
    let fit = fit_damped_sine(&t, &y).unwrap();
    assert!(fit.converged);
    for (name, truth) in [("frequency", 0.031), ("decay_time", 180.0), ("amplitude", 0.45), ("offset", 0.5)] {
        let z = (fit.value(name) - truth) / fit.uncertainty(name);
        assert!(z.abs() < 4.0, "{name}: {} ± {}", fit.value(name), fit.uncertainty(name));
    }
    assert!((fit.residual_rms / 0.01 - 1.0).abs() < 0.2);
}

#[test]
fn undamped_sine_is_flagged() {
    let t: Vec<f64> = (0..200).map(|i| i as f64).collect();
    let y: Vec<f64> = t.iter().map(|&ti| 0.5 + 0.5 * (TAU * 0.05 * ti).cos()).collect();
    let fit = fit_damped_sine(&t, &y).unwrap();
    assert!(fit.has_flag("decay-unresolved"));
    assert!((fit.value("frequency") - 0.05).abs() < 1e-6);
}

#[test]
fn exponential_decay_time() {
    let t: Vec<f64> = (0..50).map(|i| 10.0 * i as f64).collect();
    let v: Vec<f64> = t.iter().map(|&ti| 0.8 * (-ti / 123.0).exp()).collect();
    assert!((decay_time(&t, &v).unwrap() - 123.0).abs() < 1e-9);
    assert!(decay_time(&t, &vec![1.0; 50]).is_none());
}

#[test]
fn two_slit_profile_has_full_visibility() {
    let (g, l, r) = sites();
    let both: Vec<Complex64> = l.iter().zip(&r).map(|(a, b)| a + b).collect();
    let s = SpinorState::new(g, normalized(both, 1.0), vec![Complex64::default(); 256]).unwrap();
    let profile = momentum_distribution(&s, 1, 0.0).unwrap();
    assert!(profile.visibility > 0.99, "{}", profile.visibility);
    // Sites λ/2 apart give fringes every 2ħk.
    assert!((profile.fringe_period.unwrap() - 2.0).abs() < profile.bin());
    let fit = fit_visibility(&profile).unwrap();
    assert!((fit.value("visibility") - profile.visibility).abs() < 0.02);
    assert!((fit.value("period") - 2.0).abs() < 1e-3);
}

#[test]
fn single_slit_profile_has_no_fringe() {
    let (g, l, _) = sites();
    let s = SpinorState::new(g, normalized(l, 1.0), vec![Complex64::default(); 256]).unwrap();
    let profile = momentum_distribution(&s, 1, 0.0).unwrap();
    assert_eq!(profile.visibility, 0.0);
    assert!(profile.fringe_period.is_none());
}

#[test]
fn incoherent_background_halves_visibility() {
    let (g, l, r) = sites();
    let both: Vec<Complex64> = l.iter().zip(&r).map(|(a, b)| a + b).collect();
    let s = SpinorState::new(g, normalized(both, 0.5), normalized(l, 0.5)).unwrap();
    let profile = momentum_distribution(&s, 1, 0.0).unwrap();
    assert!((profile.visibility - 0.5).abs() < 0.01, "{}", profile.visibility);
    let fit = fit_visibility(&profile).unwrap();
    assert!((fit.value("visibility") - 0.5).abs() < 0.02, "{}", fit.value("visibility"));
}

#[test]
fn fits_reject_bad_data() {
    assert!(fit_damped_sine(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    let t: Vec<f64> = (0..20).map(f64::from).collect();
    let mut y = vec![0.5; 20];
    y[3] = f64::NAN;
    assert!(fit_damped_sine(&t, &y).is_err());
}
