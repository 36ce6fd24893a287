//! Oscillating mirrors, quad-signal time series, power spectra and the
//! per-mirror footprint classification.
//!
//! Photon transit is instantaneous on the time scale of the mirror motion, so
//! each sample is an independent static evaluation at the instantaneous
//! angles.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::beam::{first_order_weights, outgoing_amplitude, OutgoingAmplitude, TransverseState};
use crate::circuit::{channel_transfer_matrix, Circuit, MirrorAngles, MirrorId, PathTrace};
use crate::detector::{calibrate_offset, first_order_gain, quad_signal, QuadDetector};
use crate::error::{Error, Result};
use crate::optics::Angle;
use crate::scalar::Real;

/// θ(t) = static_offset + amplitude · sin(2π f t + phase).
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorDriver<T> {
    pub mirror: MirrorId,
    pub frequency: T,
    pub amplitude: T,
    pub phase: T,
    pub static_offset: T,
}

impl<T: Real> MirrorDriver<T> {
    pub fn new(mirror: impl Into<MirrorId>, frequency: T, amplitude: T, phase: T, static_offset: T) -> Result<Self> {
        let mirror = mirror.into();
        if !(frequency > T::zero() && frequency.is_finite()) {
            return Err(Error::validation(
                format!("drivers[{mirror}].frequency_hz"),
                format!("must be positive, got {frequency}"),
            ));
        }
        if !(amplitude >= T::zero() && amplitude.is_finite()) {
            return Err(Error::validation(
                format!("drivers[{mirror}].amplitude"),
                format!("must be non-negative, got {amplitude}"),
            ));
        }
        if !(phase.is_finite() && static_offset.is_finite()) {
            return Err(Error::validation(format!("drivers[{mirror}]"), "phase and offset must be finite"));
        }
        Ok(MirrorDriver {
            mirror,
            frequency,
            amplitude,
            phase,
            static_offset,
        })
    }

    #[inline]
    pub fn angle_at(&self, t: T) -> T {
        let two_pi = T::PI() + T::PI();
        self.static_offset + self.amplitude * (two_pi * self.frequency * t + self.phase).sin()
    }
}

/// Mirror angles at time `t`.
pub fn angles_at<T: Real>(drivers: &[MirrorDriver<T>], t: T) -> Result<MirrorAngles<T>> {
    if !(t >= T::zero()) {
        return Err(Error::usage(format!("sample time must be non-negative, got {t}")));
    }
    drivers
        .iter()
        .map(|d| Ok((d.mirror.clone(), Angle::new(d.angle_at(t))?)))
        .collect()
}

fn static_angles<T: Real>(drivers: &[MirrorDriver<T>]) -> Result<MirrorAngles<T>> {
    drivers
        .iter()
        .map(|d| Ok((d.mirror.clone(), Angle::new(d.static_offset)?)))
        .collect()
}

fn is_integral<T: Real>(x: T) -> bool {
    (x - x.round()).abs() <= T::lit(1e-9) * x.abs().max(T::one())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan<T> {
    pub sample_rate: T,
    pub duration: T,
}

impl<T: Real> SamplingPlan<T> {
    pub fn new(sample_rate: T, duration: T) -> Result<Self> {
        if !(sample_rate > T::zero() && sample_rate.is_finite()) {
            return Err(Error::validation("sampling.sample_rate", format!("must be positive, got {sample_rate}")));
        }
        if !(duration > T::zero() && duration.is_finite()) {
            return Err(Error::validation("sampling.duration", format!("must be positive, got {duration}")));
        }
        let n = sample_rate * duration;
        if !is_integral(n) || n < T::lit(2.0) {
            return Err(Error::validation(
                "sampling",
                format!("sample_rate × duration must be an integer ≥ 2, got {n}"),
            ));
        }
        Ok(SamplingPlan { sample_rate, duration })
    }

    pub fn sample_count(&self) -> usize {
        (self.sample_rate * self.duration).round().to_usize().unwrap_or(0)
    }

    pub fn time(&self, n: usize) -> T {
        T::from_usize(n).unwrap() / self.sample_rate
    }

    /// Nyquist and integer-cycle conditions for every driver.
    pub fn check_drivers(&self, drivers: &[MirrorDriver<T>]) -> Result<()> {
        for d in drivers {
            if !(self.sample_rate > T::lit(2.0) * d.frequency) {
                return Err(Error::validation(
                    "sampling.sample_rate",
                    format!(
                        "Nyquist violated: sample_rate {} Hz must exceed 2 × {} Hz (driver {})",
                        self.sample_rate, d.frequency, d.mirror
                    ),
                ));
            }
            let cycles = self.duration * d.frequency;
            if !is_integral(cycles) {
                return Err(Error::validation(
                    format!("drivers[{}].frequency_hz", d.mirror),
                    format!(
                        "duration {} s × frequency {} Hz = {} is not an integer number of cycles",
                        self.duration, d.frequency, cycles
                    ),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSample<T> {
    pub t: T,
    pub value: T,
}

/// Everything needed to run one simulated measurement.
#[derive(Debug, Clone)]
pub struct Experiment<T> {
    circuit: Circuit<T>,
    paths: Vec<PathTrace<T>>,
    state: TransverseState<T>,
    detector: QuadDetector<T>,
    drivers: Vec<MirrorDriver<T>>,
    sampling: SamplingPlan<T>,
    threshold: T,
}

impl<T: Real> Experiment<T> {
    pub fn new(
        circuit: Circuit<T>,
        state: TransverseState<T>,
        detector: QuadDetector<T>,
        drivers: Vec<MirrorDriver<T>>,
        sampling: SamplingPlan<T>,
        threshold: T,
    ) -> Result<Self> {
        let mirrors = circuit.mirror_ids();
        for m in &mirrors {
            let n = drivers.iter().filter(|d| &d.mirror == m).count();
            if n != 1 {
                return Err(Error::validation(
                    "drivers",
                    format!("mirror `{m}` must have exactly one driver, found {n}"),
                ));
            }
        }
        if let Some(d) = drivers.iter().find(|d| !mirrors.contains(&d.mirror)) {
            return Err(Error::validation(
                "drivers",
                format!("driver for `{}` does not match any mirror of the circuit", d.mirror),
            ));
        }
        sampling.check_drivers(&drivers)?;
        if !(threshold > T::zero() && threshold < T::one()) {
            return Err(Error::validation("analysis.threshold", format!("must lie in (0, 1), got {threshold}")));
        }
        let paths = circuit.detector_paths()?;
        Ok(Experiment {
            circuit,
            paths,
            state,
            detector,
            drivers,
            sampling,
            threshold,
        })
    }

    pub fn circuit(&self) -> &Circuit<T> {
        &self.circuit
    }

    pub fn paths(&self) -> &[PathTrace<T>] {
        &self.paths
    }

    pub fn state(&self) -> &TransverseState<T> {
        &self.state
    }

    pub fn detector(&self) -> &QuadDetector<T> {
        &self.detector
    }

    pub fn drivers(&self) -> &[MirrorDriver<T>] {
        &self.drivers
    }

    pub fn sampling(&self) -> &SamplingPlan<T> {
        &self.sampling
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    pub fn with_detector(mut self, detector: QuadDetector<T>) -> Self {
        self.detector = detector;
        self
    }

    /// Replaces the static offset of one mirror.
    pub fn with_static_offset(mut self, mirror: &MirrorId, offset: T) -> Result<Self> {
        let d = self
            .drivers
            .iter_mut()
            .find(|d| &d.mirror == mirror)
            .ok_or_else(|| Error::MissingMirror { mirror: mirror.to_string() })?;
        d.static_offset = offset;
        Ok(self)
    }

    pub fn driver(&self, mirror: &MirrorId) -> Result<&MirrorDriver<T>> {
        self.drivers
            .iter()
            .find(|d| &d.mirror == mirror)
            .ok_or_else(|| Error::MissingMirror { mirror: mirror.to_string() })
    }

    /// Angles with every driver at its static offset.
    pub fn baseline_angles(&self) -> Result<MirrorAngles<T>> {
        static_angles(&self.drivers)
    }

    pub fn outgoing(&self, angles: &MirrorAngles<T>) -> Result<OutgoingAmplitude<T>> {
        outgoing_amplitude(&self.paths, angles, &self.state)
    }

    pub fn signal(&self, angles: &MirrorAngles<T>) -> Result<T> {
        quad_signal(&self.outgoing(angles)?, &self.detector)
    }

    pub fn baseline_signal(&self) -> Result<T> {
        self.signal(&self.baseline_angles()?)
    }
}

/// Detector offset that nulls the baseline signal, searched within
/// `[−bracket, bracket]`.
pub fn calibrate<T: Real>(exp: &Experiment<T>, bracket: T) -> Result<T> {
    let baseline = exp.outgoing(&exp.baseline_angles()?)?;
    calibrate_offset(&baseline, &exp.detector, bracket)
}

/// Samples the quad signal at t = n / sample_rate. Samples are evaluated in
/// parallel and returned in time order.
pub fn simulate_timeseries<T: Real>(exp: &Experiment<T>) -> Result<Vec<SignalSample<T>>> {
    let n = exp.sampling.sample_count();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let t = exp.sampling.time(i);
            let value = angles_at(&exp.drivers, t)
                .and_then(|a| exp.signal(&a))
                .map_err(|e| Error::Sample { index: i, source: Box::new(e) })?;
            Ok(SignalSample { t, value })
        })
        .collect()
}

/// One-sided power spectrum of the demeaned signal (rectangular window).
///
/// `power[k] = c_k |X_k|² / N` with `c_k = 2` except at DC and Nyquist, so
/// that Σ power = Σ (x − x̄)² = N · variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum<T> {
    pub bin_frequencies: Vec<T>,
    pub power: Vec<T>,
    pub sample_count: usize,
    pub sample_interval: T,
}

impl<T: Real> PowerSpectrum<T> {
    pub fn bin_spacing(&self) -> T {
        T::one() / (T::from_usize(self.sample_count).unwrap() * self.sample_interval)
    }

    /// Index of the bin at `freq`; fails when `freq` is not on the grid.
    pub fn bin_index(&self, freq: T) -> Result<usize> {
        let x = freq / self.bin_spacing();
        let k = x.round();
        if (x - k).abs() > T::lit(1e-6) || k < T::zero() || k.to_usize().unwrap_or(usize::MAX) >= self.power.len() {
            return Err(Error::usage(format!(
                "frequency {freq} Hz is not on a spectrum bin (spacing {} Hz)",
                self.bin_spacing()
            )));
        }
        Ok(k.to_usize().unwrap())
    }

    /// Sinusoid amplitude corresponding to the power in bin `k`.
    pub fn amplitude(&self, k: usize) -> T {
        let n = T::from_usize(self.sample_count).unwrap();
        let nyquist = self.sample_count % 2 == 0 && k == self.sample_count / 2;
        let c = if k == 0 || nyquist { T::one() } else { T::lit(2.0) };
        (c * self.power[k] / n).sqrt()
    }

    pub fn total_power(&self) -> T {
        self.power.iter().fold(T::zero(), |a, &p| a + p)
    }
}

pub fn power_spectrum<T: Real>(series: &[SignalSample<T>]) -> Result<PowerSpectrum<T>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::usage(format!("power spectrum needs at least 2 samples, got {n}")));
    }
    let t0 = series[0].t;
    let dt = series[1].t - t0;
    if !(dt > T::zero()) {
        return Err(Error::usage("sample times must be strictly increasing"));
    }
    for (i, s) in series.iter().enumerate() {
        let expected = t0 + dt * T::from_usize(i).unwrap();
        if (s.t - expected).abs() > T::lit(1e-6) * dt {
            return Err(Error::usage(format!(
                "non-uniform sampling at index {i}: t = {}, expected {}",
                s.t, expected
            )));
        }
    }
    let nt = T::from_usize(n).unwrap();
    let mean = series.iter().fold(T::zero(), |a, s| a + s.value) / nt;
    let mut buf: Vec<Complex<T>> = series.iter().map(|s| Complex::new(s.value - mean, T::zero())).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    let df = T::one() / (nt * dt);
    let (bin_frequencies, power) = (0..=half)
        .map(|k| {
            let nyquist = n % 2 == 0 && k == half;
            let c = if k == 0 || nyquist { T::one() } else { T::lit(2.0) };
            (T::from_usize(k).unwrap() * df, c * buf[k].norm_sqr() / nt)
        })
        .unzip();
    Ok(PowerSpectrum {
        bin_frequencies,
        power,
        sample_count: n,
        sample_interval: dt,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorFootprint<T> {
    pub frequency: T,
    pub peak_power: T,
    /// Peak power over the largest driver-bin peak.
    pub normalized_power: T,
    pub detected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootprintReport<T> {
    pub mirrors: BTreeMap<MirrorId, MirrorFootprint<T>>,
    pub threshold: T,
    pub max_peak_mirror: Option<MirrorId>,
}

impl<T: Real> FootprintReport<T> {
    pub fn detected(&self, mirror: &str) -> bool {
        self.mirrors.get(&MirrorId::from(mirror)).map_or(false, |m| m.detected)
    }
}

/// A mirror leaves a footprint when the power at its drive frequency exceeds
/// `threshold` times the largest driver-bin power.
pub fn footprint_report<T: Real>(
    spectrum: &PowerSpectrum<T>,
    drivers: &[MirrorDriver<T>],
    threshold: T,
) -> Result<FootprintReport<T>> {
    let peaks = drivers
        .iter()
        .map(|d| Ok((d, spectrum.power[spectrum.bin_index(d.frequency)?])))
        .collect::<Result<Vec<_>>>()?;
    let mut max: Option<(&MirrorId, T)> = None;
    for (d, p) in &peaks {
        if max.map_or(true, |(_, m)| *p > m) {
            max = Some((&d.mirror, *p));
        }
    }
    let max_power = max.map_or(T::zero(), |(_, p)| p);
    let mirrors = peaks
        .iter()
        .map(|(d, p)| {
            let normalized = if max_power > T::zero() { *p / max_power } else { T::zero() };
            (
                d.mirror.clone(),
                MirrorFootprint {
                    frequency: d.frequency,
                    peak_power: *p,
                    normalized_power: normalized,
                    detected: max_power > T::zero() && *p > threshold * max_power,
                },
            )
        })
        .collect();
    Ok(FootprintReport {
        mirrors,
        threshold,
        max_peak_mirror: max.filter(|(_, p)| *p > T::zero()).map(|(m, _)| m.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityEstimate<T> {
    /// Central difference ∂(signal)/∂(static offset).
    pub value: T,
    /// Second difference (S₊ − 2S₀ + S₋) / step².
    pub curvature: T,
    /// Set when the quadratic term is not small against the linear one.
    pub step_warning: bool,
}

/// Central-difference sensitivity of the baseline signal to one mirror.
pub fn finite_diff_sensitivity<T: Real>(exp: &Experiment<T>, mirror: &MirrorId, step: T) -> Result<SensitivityEstimate<T>> {
    if !(step > T::zero() && step.is_finite()) {
        return Err(Error::usage(format!("finite-difference step must be positive, got {step}")));
    }
    let base = exp.baseline_angles()?;
    let centre = base
        .get(mirror)
        .copied()
        .ok_or_else(|| Error::MissingMirror { mirror: mirror.to_string() })?;
    let at = |x: T| -> Result<T> {
        let mut a = base.clone();
        a.insert(mirror.clone(), Angle::new(centre.radians() + x)?);
        exp.signal(&a)
    };
    let plus = at(step)?;
    let minus = at(-step)?;
    let mid = exp.signal(&base)?;
    let first = (plus - minus) / (step + step);
    let second = plus - mid - mid + minus;
    let linear = (plus - minus).abs() * T::lit(0.5);
    let step_warning = second.abs() > T::lit(1e-12) && second.abs() > T::lit(0.1) * linear;
    Ok(SensitivityEstimate {
        value: first,
        curvature: second / (step * step),
        step_warning,
    })
}

/// Predicted ∂(signal)/∂θ_m at the all-zero baseline from the first-order
/// path weights: 2·Re(T̄·w_m)·K with T the input→detector transfer entry and
/// K the detector gain.
pub fn first_order_sensitivities<T: Real>(exp: &Experiment<T>) -> Result<BTreeMap<MirrorId, T>> {
    let u = channel_transfer_matrix(&exp.circuit)?;
    let transfer = u.entry(exp.circuit.detector_channel(), exp.circuit.input_channel());
    let gain = first_order_gain(&exp.state, &exp.detector)?;
    let two = T::lit(2.0);
    Ok(first_order_weights(&exp.paths, &exp.state)
        .into_iter()
        .map(|(m, w)| (m, two * (transfer.conj() * w).re * gain))
        .collect())
}

/// Least-squares line with coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Result<LinearFit<T>> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::usage("linear fit needs two equally long series of at least 2 points"));
    }
    let n = T::from_usize(xs.len()).unwrap();
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
        syy = syy + (y - my) * (y - my);
    }
    if sxx == T::zero() {
        return Err(Error::usage("linear fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == T::zero() { T::one() } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T> {
    pub epsilon: T,
    pub sensitivity: SensitivityEstimate<T>,
}

/// Sensitivity of `mirror` as the inner-arm mismatch ε = α − β is swept:
/// `plus` gets +ε/2 and `minus` −ε/2 on top of their static offsets.
pub fn epsilon_sweep<T: Real>(
    exp: &Experiment<T>,
    mirror: &MirrorId,
    (plus, minus): (&MirrorId, &MirrorId),
    epsilons: &[T],
    step: T,
) -> Result<(Vec<SweepPoint<T>>, LinearFit<T>)> {
    let a0 = exp.driver(plus)?.static_offset;
    let b0 = exp.driver(minus)?.static_offset;
    let half = T::lit(0.5);
    let points = epsilons
        .iter()
        .map(|&eps| {
            let e = exp
                .clone()
                .with_static_offset(plus, a0 + eps * half)?
                .with_static_offset(minus, b0 - eps * half)?;
            Ok(SweepPoint {
                epsilon: eps,
                sensitivity: finite_diff_sensitivity(&e, mirror, step)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<T> = points.iter().map(|p| p.epsilon).collect();
    let ys: Vec<T> = points.iter().map(|p| p.sensitivity.value).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok((points, fit))
}
