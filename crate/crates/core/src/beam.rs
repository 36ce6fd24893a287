//! Transverse single-photon amplitude at the detector plane.
//!
//! Every path contributes a normalized Gaussian envelope displaced by
//! `kappa * sin(net deflection)`, weighted by the path coefficient. The
//! detector coordinate is proportional to the transverse wavevector, so one
//! coordinate `u` is enough: the horizontal box extent is common to both
//! detector halves.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::circuit::{path_net_deflection, MirrorAngles, MirrorId, PathTrace};
use crate::error::{Error, Result};
use crate::optics::composition_sign;
use crate::scalar::Real;

/// Gaussian envelope parameters of the incoming photon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseState<T> {
    sigma: T,
    kappa: T,
    center: T,
}

impl<T: Real> TransverseState<T> {
    pub fn new(sigma: T, kappa: T, center: T) -> Result<Self> {
        if !(sigma > T::zero() && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive and finite, got {sigma}")));
        }
        if !(kappa > T::zero() && kappa.is_finite()) {
            return Err(Error::domain(format!("kappa must be positive and finite, got {kappa}")));
        }
        if !center.is_finite() {
            return Err(Error::domain("beam center must be finite"));
        }
        Ok(TransverseState { sigma, kappa, center })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn center(&self) -> T {
        self.center
    }

    /// (π σ²)^(−1/4), the peak of the normalized envelope.
    pub fn peak(&self) -> T {
        (T::PI() * self.sigma * self.sigma).powf(T::lit(-0.25))
    }

    /// g(u), normalized so that ∫ g² = 1.
    #[inline]
    pub fn envelope(&self, u: T) -> T {
        let x = (u - self.center) / self.sigma;
        self.peak() * (-(x * x) * T::lit(0.5)).exp()
    }

    /// g′(u).
    #[inline]
    pub fn envelope_derivative(&self, u: T) -> T {
        let x = u - self.center;
        -x / (self.sigma * self.sigma) * self.envelope(u)
    }

    /// g″(u).
    pub fn envelope_second_derivative(&self, u: T) -> T {
        let s2 = self.sigma * self.sigma;
        let x = u - self.center;
        (x * x / (s2 * s2) - T::one() / s2) * self.envelope(u)
    }
}

impl Default for TransverseState<f64> {
    fn default() -> Self {
        TransverseState {
            sigma: 1.0,
            kappa: 1000.0,
            center: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeTerm<T> {
    pub coefficient: Complex<T>,
    pub displacement: T,
}

/// Superposition of displaced envelopes, one term per path.
#[derive(Debug, Clone, PartialEq)]
pub struct OutgoingAmplitude<T> {
    terms: Vec<AmplitudeTerm<T>>,
    state: TransverseState<T>,
    /// Terms with bitwise-equal displacement, coefficients summed, in order of
    /// first appearance. Paths that land on the same spot cancel exactly.
    merged: Vec<AmplitudeTerm<T>>,
}

impl<T: Real> OutgoingAmplitude<T> {
    pub fn new(terms: Vec<AmplitudeTerm<T>>, state: TransverseState<T>) -> Self {
        let mut merged: Vec<AmplitudeTerm<T>> = Vec::with_capacity(terms.len());
        for t in &terms {
            match merged.iter_mut().find(|m| m.displacement == t.displacement) {
                Some(m) => m.coefficient = m.coefficient + t.coefficient,
                None => merged.push(*t),
            }
        }
        OutgoingAmplitude { terms, state, merged }
    }

    /// One term per path, in enumeration order.
    pub fn terms(&self) -> &[AmplitudeTerm<T>] {
        &self.terms
    }

    pub fn state(&self) -> &TransverseState<T> {
        &self.state
    }

    /// ψ(u) = Σᵢ cᵢ g(u − dᵢ), summed left to right over the merged terms.
    #[inline]
    pub fn amplitude_at(&self, u: T) -> Complex<T> {
        self.merged
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, t| {
                acc + t.coefficient * self.state.envelope(u - t.displacement)
            })
    }

    #[inline]
    pub fn intensity_at(&self, u: T) -> T {
        self.amplitude_at(u).norm_sqr()
    }

    /// Σ |cᵢ|.
    pub fn coefficient_l1(&self) -> T {
        self.terms.iter().fold(T::zero(), |a, t| a + t.coefficient.norm())
    }
}

pub fn amplitude_at<T: Real>(out: &OutgoingAmplitude<T>, u: T) -> Complex<T> {
    out.amplitude_at(u)
}

/// Builds the outgoing amplitude for the given instantaneous mirror angles.
pub fn outgoing_amplitude<T: Real>(
    paths: &[PathTrace<T>],
    angles: &MirrorAngles<T>,
    state: &TransverseState<T>,
) -> Result<OutgoingAmplitude<T>> {
    let terms = paths
        .iter()
        .map(|p| {
            let net = path_net_deflection(p, angles)?;
            Ok(AmplitudeTerm {
                coefficient: p.coefficient,
                displacement: state.kappa * net.net_angle.radians().sin(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutgoingAmplitude::new(terms, *state))
}

/// First-order response of ψ to each mirror at the all-zero baseline:
/// ∂ψ/∂θ_m = w_m · g′(u).
pub fn first_order_weights<T: Real>(
    paths: &[PathTrace<T>],
    state: &TransverseState<T>,
) -> BTreeMap<MirrorId, Complex<T>> {
    let mut w: BTreeMap<MirrorId, Complex<T>> = BTreeMap::new();
    for p in paths {
        let n = p.mirrors.len();
        for (pos, id) in p.mirrors.iter().enumerate() {
            // d/dθ g(u − κ·net) = −κ·(∂net/∂θ)·g′
            let s = -T::from_i32(composition_sign(pos, n)).unwrap();
            let entry = w.entry(id.clone()).or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *entry = *entry + p.coefficient * (state.kappa * s);
        }
    }
    w
}

/// Real parts of the weights when every weight is real.
pub fn real_weights<T: Real>(weights: &BTreeMap<MirrorId, Complex<T>>) -> Option<BTreeMap<MirrorId, T>> {
    weights
        .iter()
        .map(|(k, v)| (v.im == T::zero()).then(|| (k.clone(), v.re)))
        .collect()
}
