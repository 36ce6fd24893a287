//! Scenario files and output formats.
//!
//! A scenario is a JSON document. Every field except `circuit` may be
//! omitted; [`parse_scenario`] fills in defaults, validates, and returns the
//! resolved form. Serializing a resolved scenario and parsing it again gives
//! an equal value.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beam::TransverseState;
use crate::circuit::{build_nested_mzi, Circuit, Gate, MirrorId};
use crate::detector::{DetectionMode, QuadDetector};
use crate::dynamics::{
    calibrate, Experiment, FootprintReport, MirrorDriver, PowerSpectrum, SamplingPlan, SignalSample,
};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub const NESTED_MZI: &str = "nested-mzi";

/// Largest drive amplitude accepted, in radians.
pub const MAX_DRIVE_AMPLITUDE: f64 = 1e-2;

/// Bound on |static offset| + amplitude, in radians.
pub const MAX_MIRROR_EXCURSION: f64 = 0.2;

const DEFAULT_FREQUENCIES: [(&str, f64); 5] = [("A", 232.0), ("B", 244.0), ("C", 260.0), ("E", 284.0), ("F", 304.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Scenario {
    pub circuit: CircuitSpec,
    #[serde(default)]
    pub beam: BeamSpec,
    #[serde(default)]
    pub detector: DetectorSpec,
    #[serde(default)]
    pub drivers: Vec<DriverSpec>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

/// Either `{"preset": "nested-mzi", "pOuter": p}` or an explicit gate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CircuitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_channel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_channel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<GateSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum GateSpec {
    Splitter { channels: (usize, usize), p: f64 },
    Mirror { channel: usize, id: String },
    Phase { channel: usize, phase: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct BeamSpec {
    pub sigma: f64,
    pub kappa: f64,
    #[serde(default)]
    pub center: f64,
}

impl Default for BeamSpec {
    fn default() -> Self {
        BeamSpec {
            sigma: 1.0,
            kappa: 1000.0,
            center: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DetectorSpec {
    #[serde(default)]
    pub offset: f64,
    /// Half-width of each window; defaults to 8σ.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub mode: DetectionMode,
    /// Replace `offset` by the root of the baseline signal before running.
    #[serde(default)]
    pub auto_calibrate: bool,
    /// Search interval half-width for calibration; defaults to 4σ.
    #[serde(default)]
    pub calibration_bracket: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DriverSpec {
    pub mirror: String,
    pub frequency_hz: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub offset: f64,
}

fn default_amplitude() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SamplingSpec {
    pub sample_rate: f64,
    pub duration: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            sample_rate: 4096.0,
            duration: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AnalysisSpec {
    pub threshold: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { threshold: 1e-4 }
    }
}

fn from_json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses, fills defaults and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut s: Scenario = serde_json::from_str(text).map_err(from_json_error)?;
    s.resolve_defaults();
    s.validate()?;
    Ok(s)
}

/// Reads a scenario from a scenario file or from any output file that embeds
/// one.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    match embedded_scenario(&text)? {
        Some(doc) => parse_scenario(&doc),
        None => parse_scenario(&text),
    }
}

/// Extracts the scenario embedded in a CSV header or a report JSON, if any.
pub fn embedded_scenario(text: &str) -> Result<Option<String>> {
    if text.trim_start().starts_with('#') {
        return Ok(text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# scenario:").map(|s| s.trim().to_string())));
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(from_json_error)?;
    Ok(match (value.get("format_version"), value.get("scenario")) {
        (Some(_), Some(s)) => Some(s.to_string()),
        _ => None,
    })
}

impl Scenario {
    /// The preset nested interferometer with all defaults.
    pub fn preset(p_outer: f64) -> Result<Self> {
        let mut s = Scenario {
            circuit: CircuitSpec {
                preset: Some(NESTED_MZI.into()),
                p_outer: Some(p_outer),
                channel_count: None,
                input_channel: None,
                detector_channel: None,
                gates: None,
            },
            beam: BeamSpec::default(),
            detector: DetectorSpec::default(),
            drivers: Vec::new(),
            sampling: SamplingSpec::default(),
            analysis: AnalysisSpec::default(),
        };
        s.resolve_defaults();
        s.validate()?;
        Ok(s)
    }

    fn resolve_defaults(&mut self) {
        if self.circuit.preset.is_some() && self.circuit.p_outer.is_none() {
            self.circuit.p_outer = Some(1.0 / 3.0);
        }
        let sigma = self.beam.sigma;
        self.detector.half_width.get_or_insert(8.0 * sigma);
        self.detector.calibration_bracket.get_or_insert(4.0 * sigma);
        if self.drivers.is_empty() && self.circuit.preset.as_deref() == Some(NESTED_MZI) {
            self.drivers = DEFAULT_FREQUENCIES
                .iter()
                .map(|&(m, f)| DriverSpec {
                    mirror: m.into(),
                    frequency_hz: f,
                    amplitude: default_amplitude(),
                    phase: 0.0,
                    offset: 0.0,
                })
                .collect();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn build_circuit(&self) -> Result<Circuit<f64>> {
        let c = &self.circuit;
        match (&c.preset, &c.gates) {
            (Some(name), None) => {
                if name != NESTED_MZI {
                    return Err(Error::validation("circuit.preset", format!("unknown preset `{name}`")));
                }
                if c.channel_count.is_some() || c.input_channel.is_some() || c.detector_channel.is_some() {
                    return Err(Error::validation(
                        "circuit",
                        "channelCount/inputChannel/detectorChannel only apply to explicit gate lists",
                    ));
                }
                build_nested_mzi(c.p_outer.unwrap_or(1.0 / 3.0)).map_err(|e| match e {
                    Error::Domain(msg) => Error::validation("circuit.pOuter", msg),
                    other => other,
                })
            }
            (None, Some(gates)) => {
                if c.p_outer.is_some() {
                    return Err(Error::validation("circuit.pOuter", "only applies to a preset"));
                }
                let n = c
                    .channel_count
                    .ok_or_else(|| Error::validation("circuit.channelCount", "required with an explicit gate list"))?;
                let gates = gates
                    .iter()
                    .map(|g| match g {
                        GateSpec::Splitter { channels, p } => Gate::Splitter { channels: *channels, p: *p },
                        GateSpec::Mirror { channel, id } => Gate::Mirror {
                            channel: *channel,
                            id: MirrorId::new(id.clone()),
                        },
                        GateSpec::Phase { channel, phase } => Gate::PhaseDelay { channel: *channel, phase: *phase },
                    })
                    .collect();
                Circuit::new(n, gates, c.input_channel.unwrap_or(1), c.detector_channel.unwrap_or(1)).map_err(|e| {
                    match e {
                        Error::Domain(msg) | Error::Usage(msg) => Error::validation("circuit.gates", msg),
                        other => other,
                    }
                })
            }
            _ => Err(Error::validation("circuit", "give exactly one of `preset` or `gates`")),
        }
    }

    pub fn build_state(&self) -> Result<TransverseState<f64>> {
        TransverseState::new(self.beam.sigma, self.beam.kappa, self.beam.center).map_err(|e| match e {
            Error::Domain(msg) => Error::validation("beam", msg),
            other => other,
        })
    }

    fn half_width(&self) -> f64 {
        self.detector.half_width.unwrap_or(8.0 * self.beam.sigma)
    }

    pub fn calibration_bracket(&self) -> f64 {
        self.detector.calibration_bracket.unwrap_or(4.0 * self.beam.sigma)
    }

    fn build_drivers(&self) -> Result<Vec<MirrorDriver<f64>>> {
        self.drivers
            .iter()
            .map(|d| {
                let field = |f: &str| format!("drivers[{}].{f}", d.mirror);
                if d.amplitude > MAX_DRIVE_AMPLITUDE {
                    return Err(Error::validation(
                        field("amplitude"),
                        format!("must be ≤ {MAX_DRIVE_AMPLITUDE} rad, got {}", d.amplitude),
                    ));
                }
                if d.offset.abs() + d.amplitude > MAX_MIRROR_EXCURSION {
                    return Err(Error::validation(
                        field("offset"),
                        format!(
                            "|offset| + amplitude must be ≤ {MAX_MIRROR_EXCURSION} rad, got {}",
                            d.offset.abs() + d.amplitude
                        ),
                    ));
                }
                MirrorDriver::new(d.mirror.as_str(), d.frequency_hz, d.amplitude, d.phase, d.offset)
            })
            .collect()
    }

    /// Checks every invariant without running any quadrature.
    pub fn validate(&self) -> Result<()> {
        self.build_experiment_uncalibrated().map(|_| ())
    }

    fn build_experiment_uncalibrated(&self) -> Result<Experiment<f64>> {
        let circuit = self.build_circuit()?;
        let state = self.build_state()?;
        let hw = self.half_width();
        if !(hw >= 6.0 * state.sigma()) {
            return Err(Error::validation(
                "detector.halfWidth",
                format!("must cover at least 6σ = {}, got {hw}", 6.0 * state.sigma()),
            ));
        }
        let bracket = self.calibration_bracket();
        if !(bracket > 0.0 && bracket.is_finite()) {
            return Err(Error::validation("detector.calibrationBracket", format!("must be positive, got {bracket}")));
        }
        let detector = QuadDetector::new(self.detector.offset, hw, self.detector.mode).map_err(|e| match e {
            Error::Domain(msg) => Error::validation("detector", msg),
            other => other,
        })?;
        let sampling = SamplingPlan::new(self.sampling.sample_rate, self.sampling.duration)?;
        Experiment::new(circuit, state, detector, self.build_drivers()?, sampling, self.analysis.threshold)
    }

    /// Builds the experiment, calibrating the detector when requested.
    pub fn build_experiment(&self) -> Result<Experiment<f64>> {
        let exp = self.build_experiment_uncalibrated()?;
        if self.detector.auto_calibrate {
            let y = calibrate(&exp, self.calibration_bracket())?;
            let det = exp.detector().with_offset(y)?;
            Ok(exp.with_detector(det))
        } else {
            Ok(exp)
        }
    }
}

fn csv_header(scenario: &Scenario, columns: &str) -> String {
    format!("# format_version: {FORMAT_VERSION}\n# scenario: {}\n{columns}\n", scenario.to_json())
}

/// Time series as CSV with columns `t,signal`.
pub fn series_csv(scenario: &Scenario, series: &[SignalSample<f64>]) -> String {
    let mut out = csv_header(scenario, "t,signal");
    for s in series {
        let _ = writeln!(out, "{:.16e},{:.16e}", s.t, s.value);
    }
    out
}

/// Spectrum as CSV with columns `freq_hz,power`.
pub fn spectrum_csv(scenario: &Scenario, spectrum: &PowerSpectrum<f64>) -> String {
    let mut out = csv_header(scenario, "freq_hz,power");
    for (f, p) in spectrum.bin_frequencies.iter().zip(&spectrum.power) {
        let _ = writeln!(out, "{f:.16e},{p:.16e}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorFootprintJson {
    pub frequency_hz: f64,
    pub peak_power: f64,
    pub normalized_power: f64,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintJson {
    pub format_version: u32,
    pub scenario: Scenario,
    pub threshold: f64,
    pub max_peak_mirror: Option<String>,
    pub mirrors: std::collections::BTreeMap<String, MirrorFootprintJson>,
}

pub fn footprint_json(scenario: &Scenario, report: &FootprintReport<f64>) -> String {
    let doc = FootprintJson {
        format_version: FORMAT_VERSION,
        scenario: scenario.clone(),
        threshold: report.threshold,
        max_peak_mirror: report.max_peak_mirror.as_ref().map(|m| m.to_string()),
        mirrors: report
            .mirrors
            .iter()
            .map(|(id, m)| {
                (
                    id.to_string(),
                    MirrorFootprintJson {
                        frequency_hz: m.frequency,
                        peak_power: m.peak_power,
                        normalized_power: m.normalized_power,
                        detected: m.detected,
                    },
                )
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

/// Writes `contents` to a temporary file next to `path`, then renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
