//! One function per subcommand, each turning a configuration into output
//! series and a JSON summary.

use dwlattice::field::{max_vector_shift, measure_lattice, sample_controls};
use dwlattice::fitting::{decay_time, fit_damped_sine};
use dwlattice::protocols::{
    calibrate, exp_addressing_spectroscopy, exp_interferometer, exp_rabi_via_transport, exp_transport_scan, AddressingSpec,
    InterferometerSpec, RabiSpec, TransportScanSpec,
};
use dwlattice::spectroscopy::{
    echo_experiment, ramsey_experiment, simulate_sequence, theta_scan, two_level_unitary, DecayTrace, EnsembleSize, NoiseModel,
    PulseSequence,
};
use dwlattice::stationary::{build_hamiltonian, lowest_eigenpairs, KineticModel};
use dwlattice::{Grid1D, LatticeControls};
use serde_json::{json, Value};

use crate::config::{Config, DecaySettings};
use crate::output::Series;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub series: Vec<Series>,
    pub summary: Value,
    /// False when a command ran but its own checks failed (selftest).
    pub passed: bool,
}

impl Outcome {
    fn ok(series: Vec<Series>, summary: Value) -> Self {
        Self { series, summary, passed: true }
    }
}

pub type CommandResult = Result<Outcome, dwlattice::Error>;

pub fn potential(cfg: &Config) -> CommandResult {
    let c = &cfg.constants;
    let b = &cfg.bias;
    let er = c.recoil();
    let cut = sample_controls(&cfg.controls, b, cfg.grid.n, c)?;
    let rel = cut.v_m_minus1_relative(b, c);
    let v0: Vec<f64> = cut.v_m0.iter().map(|v| v / er).collect();
    let v1: Vec<f64> = rel.iter().map(|v| v / er).collect();
    let beff: Vec<f64> = cut.b_eff_proj.iter().map(|v| v / 1e3).collect();
    let series = Series::from_columns(
        "potential",
        &[("x_over_lambda", &cut.x), ("v_m0_ER", &v0), ("v_mminus1_ER", &v1), ("beff_kHz", &beff)],
    );
    let m = measure_lattice(&cut.v_m0, c);
    let transitions = cfg.physics().transitions(&cfg.controls).ok();
    Ok(Outcome::ok(
        vec![series],
        json!({
            "controls": cfg.controls,
            "recoil_Hz": er,
            "measured_v_half_ER": m.v_half,
            "measured_v_lambda_ER": m.v_lambda,
            "measured_dx": m.dx,
            "max_vector_shift_kHz": max_vector_shift(&cut, b, c) / 1e3,
            "transitions": transitions,
        }),
    ))
}

pub fn calibrate_cmd(cfg: &Config) -> CommandResult {
    let r = calibrate(&cfg.physics(), &cfg.experiment.calibrate)?;
    let outcome = Outcome {
        series: vec![],
        summary: json!({
            "target": cfg.experiment.calibrate,
            "controls": r.controls,
            "splitting_Hz": r.splitting,
            "nu_left_Hz": r.nu_left,
            "nu_right_Hz": r.nu_right,
            "depths_ER": [r.depths.0, r.depths.1],
            "residual_Hz": r.residual,
            "converged": r.converged,
            "max_splitting_Hz": r.max_splitting,
        }),
        passed: r.converged,
    };
    Ok(outcome)
}

pub fn spectrum(cfg: &Config) -> CommandResult {
    let physics = cfg.physics();
    let s = &cfg.experiment.spectrum;
    let (controls, calibration) = if s.calibrate {
        let r = calibrate(&physics, &cfg.experiment.calibrate)?;
        (r.controls, Some(r))
    } else {
        (cfg.controls, None)
    };
    let spec = AddressingSpec { controls, rabi: s.rabi, pulse_duration: s.pulse_duration, scan: s.scan, dt: s.dt };
    let r = exp_addressing_spectroscopy(&physics, &spec)?;
    let khz: Vec<f64> = r.offsets.iter().map(|o| o / 1e3).collect();
    let series = Series::from_columns(
        "spectrum",
        &[("rf_kHz_offset", &khz), ("p_remain_L", &r.p_remain_left), ("p_remain_R", &r.p_remain_right)],
    );
    Ok(Outcome::ok(
        vec![series],
        json!({
            "controls": controls,
            "calibration": calibration,
            "bare_transition_Hz": r.bare_transition,
            "predicted": r.predicted,
            "center_left_Hz": r.fit_left.value("center"),
            "center_right_Hz": r.fit_right.value("center"),
            "fitted_splitting_Hz": r.fitted_splitting,
            "crosstalk_on_right": r.crosstalk_on_right,
            "crosstalk_on_left": r.crosstalk_on_left,
            "fit_left": r.fit_left,
            "fit_right": r.fit_right,
        }),
    ))
}

pub fn transport_scan(cfg: &Config) -> CommandResult {
    let t = &cfg.experiment.transport_scan;
    let spec = TransportScanSpec { protocol: cfg.schedule, dx: t.dx, vector_shift: t.vector_shift };
    let r = exp_transport_scan(&cfg.physics(), &spec)?;
    let series = Series::from_columns(
        "transport_scan",
        &[("dx_over_lambda", &r.dx), ("p_right_m0", &r.p_right_m0), ("p_right_mminus1", &r.p_right_m1)],
    );
    Ok(Outcome::ok(
        vec![series],
        json!({
            "best_dx": r.best_dx,
            "best_sorting": r.best_sorting,
            "p_right_given_0": r.p_right_m0[r.best_index],
            "p_left_given_minus1": 1.0 - r.p_right_m1[r.best_index],
            "max_spin_difference": r.max_spin_difference,
            "vector_shift": t.vector_shift,
        }),
    ))
}

pub fn rabi(cfg: &Config) -> CommandResult {
    let r = &cfg.experiment.rabi;
    let spec = RabiSpec {
        rabi: r.rabi,
        max_duration: r.max_duration,
        points: r.points,
        noise: cfg.noise,
        ensemble: EnsembleSize { n_shots: r.n_shots, n_atoms: r.n_atoms, detuning_base: r.detuning_base },
        readout: r.readout,
    };
    let out = exp_rabi_via_transport(&spec)?;
    let series =
        Series::from_columns("rabi", &[("duration_us", &out.durations), ("p0", &out.p0), ("p_right", &out.p_right)]);
    Ok(Outcome::ok(
        vec![series],
        json!({
            "frequency_Hz": out.frequency,
            "decay_time_us": (!out.fit.has_flag("decay-unresolved")).then_some(out.decay_time),
            "contrast_scale": out.contrast_scale,
            "fit": out.fit,
            "noise": cfg.noise,
        }),
    ))
}

fn decay_series(name: &str, t: &DecayTrace) -> Series {
    Series::from_columns(
        name,
        &[
            ("delay_us", &t.delays),
            ("contrast", &t.contrast),
            ("within_shot", &t.within_shot),
            ("common_mode", &t.common_mode),
        ],
    )
}

fn decay_summary(t: &DecayTrace, noise: &NoiseModel) -> Value {
    json!({
        "fast_decay_us": decay_time(&t.delays, &t.common_mode),
        "slow_decay_us": decay_time(&t.delays, &t.within_shot),
        "overall_decay_us": decay_time(&t.delays, &t.contrast),
        "fits_ok": t.fit_ok.iter().all(|&b| b),
        "noise": noise,
    })
}

type Interferometry = fn(f64, &[f64], &[f64], &NoiseModel, &EnsembleSize) -> dwlattice::Result<DecayTrace>;

fn decay(cfg: &Config, name: &str, d: &DecaySettings, run: Interferometry) -> CommandResult {
    let size = EnsembleSize { n_shots: d.n_shots, n_atoms: d.n_atoms, detuning_base: d.detuning_base };
    let t = run(d.rabi, &d.delays.values(), &theta_scan(d.theta_points), &cfg.noise, &size)?;
    Ok(Outcome::ok(vec![decay_series(name, &t)], decay_summary(&t, &cfg.noise)))
}

pub fn ramsey(cfg: &Config) -> CommandResult {
    decay(cfg, "ramsey", &cfg.experiment.ramsey, ramsey_experiment)
}

pub fn echo(cfg: &Config) -> CommandResult {
    decay(cfg, "echo", &cfg.experiment.echo, echo_experiment)
}

pub fn interferometer(cfg: &Config) -> CommandResult {
    let i = &cfg.experiment.interferometer;
    let spec = InterferometerSpec {
        addressing: i.addressing,
        protocol: dwlattice::dynamics::TransportProtocol { step1_duration: i.step1_duration, ..cfg.schedule },
        dx_final: i.dx_final,
        rabi: i.rabi,
        echo_delay: i.echo_delay,
        ramp_duration: i.ramp_duration,
        final_pulse: i.final_pulse,
        global_rabi: i.global_rabi,
        relative_phase: i.relative_phase,
        cells: i.cells,
        envelope_sigma: i.envelope_sigma,
    };
    let r = exp_interferometer(&cfg.physics(), &spec)?;
    let series = Series::from_columns("interferometer", &[("momentum_hbar_k", &r.profile.momentum), ("density", &r.profile.density)]);
    Ok(Outcome::ok(
        vec![series],
        json!({
            "visibility": r.profile.visibility,
            "fringe_period_hbar_k": r.profile.fringe_period,
            "fringe_phase_rad": r.profile.fringe_phase,
            "momentum_bin_hbar_k": r.profile.bin(),
            "fit": r.fit,
            "after_transport": r.after_transport,
            "before_release": r.before_release,
            "addressing": r.addressing,
            "transitions": r.transitions,
            "final_pulse": i.final_pulse,
        }),
    ))
}

struct Check {
    name: &'static str,
    value: f64,
    passed: bool,
}

/// Fast internal consistency checks of the installed build.
pub fn selftest(cfg: &Config) -> CommandResult {
    let c = &cfg.constants;
    let mut checks = vec![];

    let er = c.recoil();
    checks.push(Check { name: "recoil_within_3pct_of_3.5kHz", value: er, passed: (er / 3.5e3 - 1.0).abs() < 0.03 });

    let grid = Grid1D::unit_cell(128)?;
    let cut = sample_controls(&LatticeControls::new(80.0, 0.0, -0.5, 0.0), &cfg.bias, grid.n, c)?;
    let h = build_hamiltonian(&grid, &cut.v_m0, c, KineticModel::Spectral)?;
    let e = lowest_eigenpairs(&h, 3, 1e-3)?.energies;
    let gap = (e[2] - e[0]) / er / (2.0 * 80f64.sqrt());
    checks.push(Check { name: "vibrational_gap_over_harmonic", value: gap, passed: (gap - 1.0).abs() < 0.1 });

    let u = two_level_unitary(15.8e3, 0.4, 3e3, 37.0);
    let unitarity = (u[0][0].norm_sqr() + u[1][0].norm_sqr() - 1.0).abs();
    checks.push(Check { name: "pulse_unitarity_error", value: unitarity, passed: unitarity < 1e-12 });

    let physics = dwlattice::protocols::Physics { grid, ..cfg.physics() };
    let cal = calibrate(&physics, &Default::default())?;
    checks.push(Check { name: "calibrated_splitting_Hz", value: cal.splitting, passed: cal.converged });

    let seq = PulseSequence::ramsey(50e3, 200.0, 0.0);
    let noise = NoiseModel::calibrated(cfg.noise.seed);
    let a = simulate_sequence(&seq, &noise, 20, 10)?;
    let b = simulate_sequence(&seq, &noise, 20, 10)?;
    checks.push(Check { name: "seeded_monte_carlo_repeats", value: a.mean_p0, passed: a == b });

    let t: Vec<f64> = (0..200).map(f64::from).collect();
    let y: Vec<f64> = t.iter().map(|&x| 0.5 + 0.4 * (-x / 150.0).exp() * (0.2 * x).cos()).collect();
    let fit = fit_damped_sine(&t, &y)?;
    let tau = fit.value("decay_time");
    checks.push(Check { name: "damped_sine_refit_decay_us", value: tau, passed: (tau / 150.0 - 1.0).abs() < 1e-6 });

    let passed = checks.iter().all(|c| c.passed);
    let summary = json!({
        "passed": passed,
        "checks": checks.iter().map(|c| json!({"name": c.name, "value": c.value, "passed": c.passed})).collect::<Vec<_>>(),
    });
    for c in &checks {
        eprintln!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value);
    }
    Ok(Outcome { series: vec![], summary, passed })
}
