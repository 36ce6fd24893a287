//! Single-photon nested Mach-Zehnder simulator with quad-detector footprint
//! analysis.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! aliases below fix it to `f64`, which the scenario runner and CLI use.

pub mod beam;
pub mod circuit;
pub mod cli;
pub mod detector;
pub mod dynamics;
pub mod error;
pub mod optics;
pub mod quadrature;
pub mod scalar;
pub mod scenario;

pub use beam::{first_order_weights, outgoing_amplitude, AmplitudeTerm, OutgoingAmplitude, TransverseState};
pub use circuit::{
    build_nested_mzi, channel_transfer_matrix, enumerate_paths, mirror_angles, path_net_deflection, ChannelMatrix,
    Circuit, Gate, MirrorAngles, MirrorId, PathTrace,
};
pub use detector::{calibrate_offset, first_order_gain, quad_signal, window_amplitude, DetectionMode, QuadDetector};
pub use dynamics::{
    angles_at, calibrate, epsilon_sweep, finite_diff_sensitivity, first_order_sensitivities, footprint_report,
    linear_fit, power_spectrum, simulate_timeseries, Experiment, FootprintReport, LinearFit, MirrorDriver,
    MirrorFootprint, PowerSpectrum, SamplingPlan, SensitivityEstimate, SignalSample,
};
pub use error::{Error, Result};
pub use optics::{
    compose_transforms, composition_sign, net_reflection_angle, reflection_matrix, splitter_matrix, Angle,
    PlanarTransform, ReflectionTransform, SplitterTransform, TransformKind,
};
pub use scalar::Real;
pub use scenario::{parse_scenario, Scenario};

pub type Angle64 = Angle<f64>;
pub type Circuit64 = Circuit<f64>;
pub type PathTrace64 = PathTrace<f64>;
pub type TransverseState64 = TransverseState<f64>;
pub type QuadDetector64 = QuadDetector<f64>;
pub type MirrorDriver64 = MirrorDriver<f64>;
pub type Experiment64 = Experiment<f64>;
pub type PowerSpectrum64 = PowerSpectrum<f64>;

pub type Angle32 = Angle<f32>;
pub type Circuit32 = Circuit<f32>;
pub type TransverseState32 = TransverseState<f32>;
pub type QuadDetector32 = QuadDetector<f32>;
pub type Experiment32 = Experiment<f32>;
