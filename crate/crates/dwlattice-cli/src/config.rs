//! Layered TOML configuration.
//!
//! A run starts from built-in defaults, applies an optional preset, then an
//! optional config file. Each layer is checked on its own first so that
//! syntax errors and unknown keys are reported with the line and column of
//! the file they came from.

use std::path::{Path, PathBuf};

use dwlattice::dynamics::TransportProtocol;
use dwlattice::protocols::{CalibrationTarget, FinalPulse, InterferometerSpec, ReadoutFidelity, ScanRange};
use dwlattice::spectroscopy::NoiseModel;
use dwlattice::{BiasField, Grid1D, LatticeControls, PhysicalConstants};
use serde::{Deserialize, Serialize};

/// Environment variable holding directories searched for `dwlattice.toml`.
pub const CONFIG_PATH_ENV: &str = "DWLATTICE_CONFIG_PATH";
pub const CONFIG_FILE_NAME: &str = "dwlattice.toml";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown preset `{0}`; available: fig2, fig3, fig4, fig5, ramsey, echo")]
    UnknownPreset(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl From<dwlattice::Error> for ConfigError {
    fn from(e: dwlattice::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub constants: PhysicalConstants,
    pub bias: BiasField,
    pub grid: Grid1D,
    /// Static lattice used by `potential`.
    pub controls: LatticeControls,
    pub noise: NoiseModel,
    /// Transport protocol used by `transport-scan` and `interferometer`.
    pub schedule: TransportProtocol,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub spectrum: SpectrumSettings,
    pub transport_scan: TransportScanSettings,
    pub rabi: RabiSettings,
    pub ramsey: DecaySettings,
    pub echo: DecaySettings,
    pub interferometer: InterferometerSettings,
    pub calibrate: CalibrationTarget,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            spectrum: SpectrumSettings::default(),
            transport_scan: TransportScanSettings::default(),
            rabi: RabiSettings::default(),
            ramsey: DecaySettings::default(),
            echo: DecaySettings::echo_default(),
            interferometer: InterferometerSettings::default(),
            calibrate: CalibrationTarget::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSettings {
    /// Calibrate the addressing lattice to `experiment.calibrate` first;
    /// otherwise use `[controls]` as given.
    pub calibrate: bool,
    /// Hz.
    pub rabi: f64,
    /// μs.
    pub pulse_duration: f64,
    /// rf offsets from the bare transition, Hz. Omitted: 41 points around
    /// the predicted resonances.
    pub scan: Option<ScanRange>,
    /// μs.
    pub dt: f64,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        let d = dwlattice::protocols::AddressingSpec::default();
        Self { calibrate: true, rabi: d.rabi, pulse_duration: d.pulse_duration, scan: d.scan, dt: d.dt }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportScanSettings {
    /// Final λ-lattice positions, λ.
    pub dx: ScanRange,
    pub vector_shift: bool,
}

impl Default for TransportScanSettings {
    fn default() -> Self {
        let d = dwlattice::protocols::TransportScanSpec::default();
        Self { dx: d.dx, vector_shift: d.vector_shift }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RabiSettings {
    /// Hz.
    pub rabi: f64,
    /// μs.
    pub max_duration: f64,
    pub points: usize,
    pub n_shots: usize,
    pub n_atoms: usize,
    /// Hz.
    pub detuning_base: f64,
    pub readout: ReadoutFidelity,
}

impl Default for RabiSettings {
    fn default() -> Self {
        let d = dwlattice::protocols::RabiSpec::default();
        Self {
            rabi: d.rabi,
            max_duration: d.max_duration,
            points: d.points,
            n_shots: d.ensemble.n_shots,
            n_atoms: d.ensemble.n_atoms,
            detuning_base: d.ensemble.detuning_base,
            readout: d.readout,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecaySettings {
    /// Rabi frequency of the π/2 and π pulses, Hz.
    pub rabi: f64,
    /// Free-evolution times, μs.
    pub delays: ScanRange,
    /// Phase points of the final π/2 pulse.
    pub theta_points: usize,
    pub n_shots: usize,
    pub n_atoms: usize,
    /// Hz.
    pub detuning_base: f64,
}

impl Default for DecaySettings {
    fn default() -> Self {
        Self {
            rabi: 50e3,
            delays: ScanRange { start: 0.0, stop: 1000.0, points: 21 },
            theta_points: 8,
            n_shots: 100,
            n_atoms: 100,
            detuning_base: 0.0,
        }
    }
}

impl DecaySettings {
    fn echo_default() -> Self {
        Self { delays: ScanRange { start: 0.0, stop: 2400.0, points: 25 }, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferometerSettings {
    /// Overrides `schedule.step1_duration`, μs.
    pub step1_duration: f64,
    /// Addressing lattice after transport. Omitted: calibrated 32 kHz lattice.
    pub addressing: Option<LatticeControls>,
    /// λ.
    pub dx_final: f64,
    /// Hz.
    pub rabi: f64,
    /// μs.
    pub echo_delay: f64,
    /// μs.
    pub ramp_duration: f64,
    pub final_pulse: FinalPulse,
    /// Hz.
    pub global_rabi: f64,
    /// rad.
    pub relative_phase: f64,
    pub cells: usize,
    /// Cells.
    pub envelope_sigma: f64,
}

impl Default for InterferometerSettings {
    fn default() -> Self {
        let d = InterferometerSpec::default();
        Self {
            step1_duration: d.protocol.step1_duration,
            addressing: d.addressing,
            dx_final: d.dx_final,
            rabi: d.rabi,
            echo_delay: d.echo_delay,
            ramp_duration: d.ramp_duration,
            final_pulse: d.final_pulse,
            global_rabi: d.global_rabi,
            relative_phase: d.relative_phase,
            cells: d.cells,
            envelope_sigma: d.envelope_sigma,
        }
    }
}


fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("`{name}` must be finite and positive, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("`{name}` must be at least {min}, got {v}")))
    }
}

fn scan(name: &str, r: &ScanRange) -> Result<(), ConfigError> {
    r.validate().map_err(|e| ConfigError::Invalid(format!("`{name}`: {e}")))
}

impl Config {
    /// Checks every section; errors name the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.constants.validate()?;
        self.bias.validate()?;
        self.grid.validate()?;
        if (self.grid.length - 1.0).abs() > 1e-12 {
            return Err(ConfigError::Invalid("`grid.length` must be 1 (one lattice cell)".into()));
        }
        self.controls.validate()?;
        self.noise.validate()?;
        let s = &self.schedule;
        s.start.validate().map_err(|e| ConfigError::Invalid(format!("`schedule.start`: {e}")))?;
        for (name, v) in [
            ("schedule.step1_duration", s.step1_duration),
            ("schedule.step2_duration", s.step2_duration),
            ("schedule.dt", s.dt),
        ] {
            positive(name, v)?;
        }

        let e = &self.experiment;
        positive("experiment.spectrum.rabi", e.spectrum.rabi)?;
        positive("experiment.spectrum.pulse_duration", e.spectrum.pulse_duration)?;
        positive("experiment.spectrum.dt", e.spectrum.dt)?;
        if let Some(r) = &e.spectrum.scan {
            scan("experiment.spectrum.scan", r)?;
        }

        scan("experiment.transport_scan.dx", &e.transport_scan.dx)?;
        let dx = e.transport_scan.dx;
        for v in [dx.start, dx.stop] {
            if !(-0.5..=-0.3).contains(&v) {
                return Err(ConfigError::Invalid(format!("`experiment.transport_scan.dx` must lie in [-0.5, -0.3], got {v}")));
            }
        }

        let r = &e.rabi;
        positive("experiment.rabi.rabi", r.rabi)?;
        positive("experiment.rabi.max_duration", r.max_duration)?;
        at_least("experiment.rabi.points", r.points, 8)?;
        at_least("experiment.rabi.n_shots", r.n_shots, 1)?;
        at_least("experiment.rabi.n_atoms", r.n_atoms, 1)?;
        r.readout.validate()?;

        for (name, d) in [("ramsey", &e.ramsey), ("echo", &e.echo)] {
            positive(&format!("experiment.{name}.rabi"), d.rabi)?;
            scan(&format!("experiment.{name}.delays"), &d.delays)?;
            if d.delays.start < 0.0 || d.delays.stop < 0.0 {
                return Err(ConfigError::Invalid(format!("`experiment.{name}.delays` must be non-negative")));
            }
            at_least(&format!("experiment.{name}.theta_points"), d.theta_points, 4)?;
            at_least(&format!("experiment.{name}.n_shots"), d.n_shots, 1)?;
            at_least(&format!("experiment.{name}.n_atoms"), d.n_atoms, 1)?;
        }

        let i = &e.interferometer;
        positive("experiment.interferometer.step1_duration", i.step1_duration)?;
        positive("experiment.interferometer.rabi", i.rabi)?;
        positive("experiment.interferometer.ramp_duration", i.ramp_duration)?;
        positive("experiment.interferometer.global_rabi", i.global_rabi)?;
        at_least("experiment.interferometer.cells", i.cells, 1)?;
        if !(-0.5..=-0.3).contains(&i.dx_final) {
            return Err(ConfigError::Invalid(format!(
                "`experiment.interferometer.dx_final` must lie in [-0.5, -0.3], got {}",
                i.dx_final
            )));
        }
        if let Some(a) = &i.addressing {
            a.validate().map_err(|e| ConfigError::Invalid(format!("`experiment.interferometer.addressing`: {e}")))?;
        }

        let c = &e.calibrate;
        positive("experiment.calibrate.v_half", c.v_half)?;
        positive("experiment.calibrate.tolerance", c.tolerance)?;
        Ok(())
    }

    pub fn physics(&self) -> dwlattice::protocols::Physics {
        dwlattice::protocols::Physics { constants: self.constants, bias: self.bias, grid: self.grid }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes to TOML")
    }
}

/// Presets shipped with the tool, one per figure-style run.
pub const PRESETS: [(&str, &str); 6] = [
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("ramsey", include_str!("../presets/ramsey.toml")),
    ("echo", include_str!("../presets/echo.toml")),
];

pub fn preset(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text).ok_or_else(|| ConfigError::UnknownPreset(name.into()))
}

/// Parses one layer, rejecting syntax errors and unknown keys.
fn parse_layer(text: &str, origin: &str) -> Result<toml::Table, ConfigError> {
    let err = |e: toml::de::Error| ConfigError::Parse { origin: origin.to_string(), message: e.to_string() };
    toml::from_str::<Config>(text).map_err(err)?;
    toml::from_str::<toml::Table>(text).map_err(err)
}

fn merge(base: &mut toml::Table, layer: toml::Table) {
    for (key, value) in layer {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(v)) => merge(b, v),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Builds a configuration from `(origin, text)` layers applied in order.
pub fn from_layers(layers: &[(String, String)]) -> Result<Config, ConfigError> {
    let mut table = toml::Table::new();
    for (origin, text) in layers {
        merge(&mut table, parse_layer(text, origin)?);
    }
    let merged = toml::to_string(&table).expect("merged table serializes");
    let config: Config =
        toml::from_str(&merged).map_err(|e| ConfigError::Parse { origin: "merged configuration".into(), message: e.to_string() })?;
    config.validate()?;
    Ok(config)
}

pub fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

/// Config file to use when none is given on the command line: the first
/// `dwlattice.toml` in the directories of `search_path`, or in the current
/// directory when `search_path` is unset.
pub fn find_config(search_path: Option<&std::ffi::OsStr>) -> Option<PathBuf> {
    match search_path {
        Some(dirs) => std::env::split_paths(dirs).map(|d| d.join(CONFIG_FILE_NAME)).find(|p| p.is_file()),
        None => Some(PathBuf::from(CONFIG_FILE_NAME)).filter(|p| p.is_file()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Result<Config, ConfigError> {
        from_layers(&[("test.toml".into(), text.into())])
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(one("").unwrap(), Config::default());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = Config::default();
        assert_eq!(one(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn out_of_range_dx_names_the_key() {
        let err = one("[controls]\ndx = 0.3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        assert!(err.to_string().contains("controls.dx"), "{err}");
    }

    #[test]
    fn unknown_key_reports_location() {
        let err = one("[grid]\nn = 128\nwidth = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Parse { .. }));
        assert!(msg.contains("width") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn syntax_error_reports_location() {
        let msg = one("[noise]\nsigma_shot = = 3\n").unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn later_layers_override_earlier_ones() {
        let c = from_layers(&[
            ("a".into(), "[grid]\nn = 64\n[noise]\nseed = 4\n".into()),
            ("b".into(), "[grid]\nn = 128\n".into()),
        ])
        .unwrap();
        assert_eq!(c.grid.n, 128);
        assert_eq!(c.noise.seed, 4);
    }

    #[test]
    fn fig4_preset_scans_the_transport_range() {
        let c = one(preset("fig4").unwrap()).unwrap();
        let dx = c.experiment.transport_scan.dx;
        assert_eq!((dx.start, dx.stop, dx.points), (-0.5, -0.3, 21));
    }

    #[test]
    fn presets_parse() {
        for (name, text) in PRESETS {
            one(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn noise_presets_match_the_calibration() {
        let want = NoiseModel::calibrated(0);
        for name in ["ramsey", "echo"] {
            let got = one(preset(name).unwrap()).unwrap().noise;
            for (a, b) in [(got.sigma_shot, want.sigma_shot), (got.diffusion, want.diffusion), (got.sigma_spatial, want.sigma_spatial)] {
                assert!((a / b - 1.0).abs() < 1e-12, "{name}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn search_path_finds_first_match() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        std::fs::write(b.path().join(CONFIG_FILE_NAME), "").unwrap();
        let joined = std::env::join_paths([a.path(), b.path()]).unwrap();
        assert_eq!(find_config(Some(&joined)), Some(b.path().join(CONFIG_FILE_NAME)));
    }
}
