//! Quad-detector model: window overlaps, the up/down difference signal and
//! the offset calibration that zeroes the baseline.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::beam::{OutgoingAmplitude, TransverseState};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    /// |⟨w₊|ψ⟩|² − |⟨w₋|ψ⟩|² with unnormalized box indicators.
    Projection,
    /// ∫_{W₊}|ψ|² − ∫_{W₋}|ψ|², what a split photodiode integrates.
    #[default]
    Intensity,
}

/// Upper window `(offset, offset + half_width)`, lower window
/// `(offset − half_width, offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadDetector<T> {
    offset: T,
    half_width: T,
    mode: DetectionMode,
}

impl<T: Real> QuadDetector<T> {
    pub fn new(offset: T, half_width: T, mode: DetectionMode) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::domain("detector offset must be finite"));
        }
        if !(half_width > T::zero() && half_width.is_finite()) {
            return Err(Error::domain(format!("half_width must be positive, got {half_width}")));
        }
        Ok(QuadDetector { offset, half_width, mode })
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn mode(&self) -> DetectionMode {
        self.mode
    }

    pub fn with_offset(&self, offset: T) -> Result<Self> {
        QuadDetector::new(offset, self.half_width, self.mode)
    }

    pub fn with_mode(&self, mode: DetectionMode) -> Self {
        QuadDetector { mode, ..*self }
    }

    pub fn upper_window(&self) -> (T, T) {
        (self.offset, self.offset + self.half_width)
    }

    pub fn lower_window(&self) -> (T, T) {
        (self.offset - self.half_width, self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowAmplitude<T> {
    Projection(Complex<T>),
    Intensity(T),
}

impl<T: Real> WindowAmplitude<T> {
    /// Detection probability contributed by the window.
    pub fn weight(&self) -> T {
        match self {
            WindowAmplitude::Projection(a) => a.norm_sqr(),
            WindowAmplitude::Intensity(i) => *i,
        }
    }
}

fn options<T: Real>(state: &TransverseState<T>, lo: T, hi: T) -> QuadratureOptions<T> {
    let panels = ((hi - lo) / state.sigma()).ceil().to_usize().unwrap_or(1).clamp(1, 512);
    QuadratureOptions {
        initial_panels: panels,
        ..QuadratureOptions::default()
    }
}

/// Overlap of the outgoing amplitude with the box `(lo, hi)`.
pub fn window_amplitude<T: Real>(
    out: &OutgoingAmplitude<T>,
    lo: T,
    hi: T,
    mode: DetectionMode,
) -> Result<WindowAmplitude<T>> {
    if !(lo < hi) {
        return Err(Error::usage(format!("window requires lo < hi, got ({lo}, {hi})")));
    }
    let opts = options(out.state(), lo, hi);
    Ok(match mode {
        DetectionMode::Projection => {
            WindowAmplitude::Projection(integrate(|u| out.amplitude_at(u), lo, hi, &opts)?)
        }
        DetectionMode::Intensity => {
            WindowAmplitude::Intensity(integrate(|u| out.intensity_at(u), lo, hi, &opts)?)
        }
    })
}

/// Upper-minus-lower detection signal.
pub fn quad_signal<T: Real>(out: &OutgoingAmplitude<T>, det: &QuadDetector<T>) -> Result<T> {
    let (a, b) = det.upper_window();
    let (c, d) = det.lower_window();
    let upper = window_amplitude(out, a, b, det.mode)?;
    let lower = window_amplitude(out, c, d, det.mode)?;
    Ok(upper.weight() - lower.weight())
}

/// Gain K of the detector at a centered baseline ψ₀ = T·g: a first-order
/// amplitude change θ·w·g′ moves the signal by 2·Re(T̄·w)·K·θ.
pub fn first_order_gain<T: Real>(state: &TransverseState<T>, det: &QuadDetector<T>) -> Result<T> {
    let (a, b) = det.upper_window();
    let (c, d) = det.lower_window();
    let oa = options(state, a, b);
    let oc = options(state, c, d);
    match det.mode {
        DetectionMode::Intensity => {
            let f = |u: T| state.envelope(u) * state.envelope_derivative(u);
            let up: T = integrate(f, a, b, &oa)?;
            let down: T = integrate(f, c, d, &oc)?;
            Ok(up - down)
        }
        DetectionMode::Projection => {
            let g = |u: T| state.envelope(u);
            let dg = |u: T| state.envelope_derivative(u);
            let gu: T = integrate(g, a, b, &oa)?;
            let du: T = integrate(dg, a, b, &oa)?;
            let gl: T = integrate(g, c, d, &oc)?;
            let dl: T = integrate(dg, c, d, &oc)?;
            Ok(gu * du - gl * dl)
        }
    }
}

/// Finds the detector offset in `[−bracket, bracket]` nearest 0 where the
/// baseline signal vanishes. Roots are bracketed on a grid of 64 steps per
/// side, walking outward from 0, then refined by bisection to 1e−12.
pub fn calibrate_offset<T: Real>(
    baseline: &OutgoingAmplitude<T>,
    det: &QuadDetector<T>,
    bracket: T,
) -> Result<T> {
    if !(bracket > T::zero() && bracket.is_finite()) {
        return Err(Error::usage(format!("calibration bracket must be positive, got {bracket}")));
    }
    let signal = |y: T| -> Result<T> { quad_signal(baseline, &det.with_offset(y)?) };
    let s0 = signal(T::zero())?;
    if s0 == T::zero() {
        return Ok(T::zero());
    }
    const STEPS: usize = 64;
    let h = bracket / T::from_usize(STEPS).unwrap();
    let mut prev = [(T::zero(), s0), (T::zero(), s0)];
    for k in 1..=STEPS {
        let mut best: Option<T> = None;
        for (side, sign) in [T::one(), -T::one()].into_iter().enumerate() {
            let x = if k == STEPS { sign * bracket } else { sign * h * T::from_usize(k).unwrap() };
            let sx = signal(x)?;
            let (xp, sp) = prev[side];
            if sx == T::zero() || (sx < T::zero()) != (sp < T::zero()) {
                let root = if sx == T::zero() { x } else { bisect(&signal, xp, sp, x)? };
                best = Some(match best {
                    Some(b) if b.abs() <= root.abs() => b,
                    _ => root,
                });
            }
            prev[side] = (x, sx);
        }
        if let Some(root) = best {
            return Ok(root);
        }
    }
    Err(Error::Calibration {
        lo: (-bracket).to_f64_lossy(),
        hi: bracket.to_f64_lossy(),
        signal_lo: prev[1].1.to_f64_lossy(),
        signal_hi: prev[0].1.to_f64_lossy(),
    })
}

fn bisect<T: Real, F>(f: &F, mut a: T, mut fa: T, mut b: T) -> Result<T>
where
    F: Fn(T) -> Result<T>,
{
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0) * a.abs().max(b.abs()));
    let mut fb = f(b)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = (a + b) * T::lit(0.5);
        if !(m != a && m != b) {
            break;
        }
        let fm = f(m)?;
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    Ok(if fa.abs() <= fb.abs() { a } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{outgoing_amplitude, AmplitudeTerm};
    use crate::circuit::{build_nested_mzi, mirror_angles, MirrorAngles};

    fn single(delta: f64, sigma: f64) -> OutgoingAmplitude<f64> {
        OutgoingAmplitude::new(
            vec![AmplitudeTerm { coefficient: Complex::new(1.0, 0.0), displacement: delta }],
            TransverseState::new(sigma, 1000.0, 0.0).unwrap(),
        )
    }

    fn det(mode: DetectionMode) -> QuadDetector<f64> {
        QuadDetector::new(0.0, 8.0, mode).unwrap()
    }

    fn angles(a: f64, b: f64, c: f64, e: f64, f: f64) -> MirrorAngles<f64> {
        mirror_angles(&[("A", a), ("B", b), ("C", c), ("E", e), ("F", f)]).unwrap()
    }

    fn preset_out(ang: &MirrorAngles<f64>) -> OutgoingAmplitude<f64> {
        let paths = build_nested_mzi(1.0 / 3.0).unwrap().detector_paths().unwrap();
        outgoing_amplitude(&paths, ang, &TransverseState::default()).unwrap()
    }

    /// Composite trapezoid with 2^18 intervals.
    fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let n = 1usize << 18;
        let h = (hi - lo) / n as f64;
        let inner: f64 = (1..n).map(|i| f(lo + h * i as f64)).sum();
        h * (0.5 * (f(lo) + f(hi)) + inner)
    }

    #[test]
    fn half_of_centered_beam_in_upper_window() {
        let w = window_amplitude(&single(0.0, 1.0), 0.0, 6.0, DetectionMode::Intensity).unwrap();
        assert!((w.weight() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn displaced_beam_follows_erf() {
        for (delta, sigma) in [(0.1, 1.0), (-0.4, 1.0), (0.9, 1.5), (0.02, 0.5)] {
            let out = single(delta, sigma);
            let d = QuadDetector::new(0.0, 8.0 * sigma, DetectionMode::Intensity).unwrap();
            let s = quad_signal(&out, &d).unwrap();
            assert!((s - libm::erf(delta / sigma)).abs() < 1e-8);
            let oracle = trapezoid(|u| out.intensity_at(u), 0.0, 8.0 * sigma)
                - trapezoid(|u| out.intensity_at(u), -8.0 * sigma, 0.0);
            assert!((s - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn cancelling_pair_gives_nothing() {
        let out = OutgoingAmplitude::new(
            vec![
                AmplitudeTerm { coefficient: Complex::new(0.5, 0.0), displacement: 0.4 },
                AmplitudeTerm { coefficient: Complex::new(-0.5, 0.0), displacement: 0.4 },
            ],
            TransverseState::default(),
        );
        for mode in [DetectionMode::Projection, DetectionMode::Intensity] {
            assert_eq!(window_amplitude(&out, -1.0, 2.0, mode).unwrap().weight(), 0.0);
        }
    }

    #[test]
    fn bad_window_rejected() {
        let r = window_amplitude(&single(0.0, 1.0), 1.0, 1.0, DetectionMode::Intensity);
        assert!(matches!(r, Err(Error::Usage(_))));
        assert!(QuadDetector::new(0.0, 0.0, DetectionMode::Intensity).is_err());
    }

    #[test]
    fn symmetric_baseline_is_silent() {
        let out = preset_out(&angles(0.0, 0.0, 0.0, 0.0, 0.0));
        for mode in [DetectionMode::Projection, DetectionMode::Intensity] {
            assert!(quad_signal(&out, &det(mode)).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn coordinated_shift_leaves_signal() {
        let (a, b, c, e, f, d) = (3e-4, -2e-4, 1e-4, 4e-4, -1e-4, 7e-3);
        for mode in [DetectionMode::Projection, DetectionMode::Intensity] {
            let s1 = quad_signal(&preset_out(&angles(a, b, c, e, f)), &det(mode)).unwrap();
            let s2 = quad_signal(&preset_out(&angles(a + d, b + d, c, e + d, f)), &det(mode)).unwrap();
            assert!((s1 - s2).abs() < 1e-12, "{mode:?} {s1} {s2}");
        }
    }

    #[test]
    fn static_c_mirror_follows_erf() {
        let p = 1.0 / 3.0;
        for theta in [1e-4, -3e-4, 8e-4] {
            let s = quad_signal(&preset_out(&angles(0.0, 0.0, theta, 0.0, 0.0)), &det(DetectionMode::Intensity)).unwrap();
            assert!((s - p * p * libm::erf(1000.0 * theta.sin())).abs() < 1e-8);
        }
    }

    #[test]
    fn calibration_recenters() {
        let d = det(DetectionMode::Intensity);
        let zero = preset_out(&angles(0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(calibrate_offset(&zero, &d, 4.0).unwrap().abs() < 1e-10);

        let g0 = 0.001;
        let base = preset_out(&angles(0.0, 0.0, g0, 0.0, 0.0));
        let y = calibrate_offset(&base, &d, 4.0).unwrap();
        // the baseline is a single Gaussian at κ·sin γ₀; symmetric windows null it there
        assert!((y - 1000.0 * g0.sin()).abs() < 1e-8);
        let residual = quad_signal(&base, &d.with_offset(y).unwrap()).unwrap();
        assert!(residual.abs() < 1e-10);
    }

    #[test]
    fn calibration_without_sign_change_fails() {
        let base = preset_out(&angles(0.0, 0.0, 0.003, 0.0, 0.0));
        match calibrate_offset(&base, &det(DetectionMode::Intensity), 1.0) {
            Err(Error::Calibration { signal_lo, signal_hi, .. }) => {
                assert!(signal_lo > 0.0 && signal_hi > 0.0)
            }
            other => panic!("expected calibration error, got {other:?}"),
        }
    }

    #[test]
    fn calibration_prefers_root_nearest_zero() {
        // beams at −2, −0.7 and +2: the balance point nearest 0 lies between −2 and 0
        let st = TransverseState::new(0.3, 1.0, 0.0).unwrap();
        let c = Complex::new(0.5f64, 0.0);
        let out = OutgoingAmplitude::new(
            vec![
                AmplitudeTerm { coefficient: c, displacement: -2.0 },
                AmplitudeTerm { coefficient: c, displacement: 2.0 },
                AmplitudeTerm { coefficient: c, displacement: -0.7 },
            ],
            st,
        );
        let d = QuadDetector::new(0.0, 8.0, DetectionMode::Intensity).unwrap();
        let y = calibrate_offset(&out, &d, 4.0).unwrap();
        assert!(quad_signal(&out, &d.with_offset(y).unwrap()).unwrap().abs() < 1e-10);
        assert!(y < 0.0 && y > -2.0, "{y}");
    }

    #[test]
    fn gain_matches_closed_form() {
        let st = TransverseState::default();
        let k = first_order_gain(&st, &det(DetectionMode::Intensity)).unwrap();
        let expect = -(1.0 - (-64.0f64).exp()) / std::f64::consts::PI.sqrt();
        assert!((k - expect).abs() < 1e-12);
        let kp = first_order_gain(&st, &det(DetectionMode::Projection)).unwrap();
        // G = ∫₀^∞ g = (πσ²)^(−1/4)·σ·√(π/2), D = −g(0)
        let g0 = std::f64::consts::PI.powf(-0.25);
        let big_g = g0 * (std::f64::consts::PI / 2.0).sqrt();
        assert!((kp - (-2.0 * big_g * g0)).abs() < 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn both() -> impl Strategy<Value = DetectionMode> {
            prop_oneof![Just(DetectionMode::Projection), Just(DetectionMode::Intensity)]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn antisymmetric_in_displacement(delta in 0.0f64..3.0, mode in both()) {
                let up = quad_signal(&single(delta, 1.0), &det(mode)).unwrap();
                let down = quad_signal(&single(-delta, 1.0), &det(mode)).unwrap();
                prop_assert!((up + down).abs() < 1e-10);
            }

            #[test]
            fn increasing_near_zero(d1 in -0.49f64..0.49, step in 1e-3f64..0.01, mode in both()) {
                let d2 = (d1 + step).min(0.5);
                prop_assume!(d2 > d1);
                let s1 = quad_signal(&single(d1, 1.0), &det(mode)).unwrap();
                let s2 = quad_signal(&single(d2, 1.0), &det(mode)).unwrap();
                prop_assert!(s2 > s1);
            }

            #[test]
            fn bounded_by_coefficient_mass(
                a in -0.01f64..0.01, b in -0.01f64..0.01, c in -0.01f64..0.01,
                e in -0.01f64..0.01, f in -0.01f64..0.01, mode in both()
            ) {
                let out = preset_out(&angles(a, b, c, e, f));
                let s = quad_signal(&out, &det(mode)).unwrap();
                let l1 = out.coefficient_l1();
                // unnormalized box indicators: |∫g|² ≤ 2√π·σ
                let scale = match mode {
                    DetectionMode::Intensity => 1.0,
                    DetectionMode::Projection => 2.0 * std::f64::consts::PI.sqrt(),
                };
                prop_assert!(s.abs() <= l1 * l1 * scale);
            }
        }
    }

    #[test]
    fn modes_agree_to_first_order() {
        let ratios: Vec<f64> = [1e-4f64, 2e-4, 5e-4, 1e-3]
            .iter()
            .map(|&d| {
                let out = single(d, 1.0);
                quad_signal(&out, &det(DetectionMode::Projection)).unwrap()
                    / quad_signal(&out, &det(DetectionMode::Intensity)).unwrap()
            })
            .collect();
        assert!(ratios[0] > 0.0);
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 0.05);
        }
    }
}
