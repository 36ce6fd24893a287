//! Channel-space circuits: ordered gate lists over a few optical channels,
//! path enumeration and the zero-angle transfer matrix.
//!
//! Channels are 1-based. A gate list is time-ordered left to right.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{compose_transforms, reflection_matrix, Angle, PlanarTransform, TransformKind};
use crate::scalar::Real;

/// Label of a mirror, e.g. `"A"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MirrorId(pub String);

impl MirrorId {
    pub fn new(id: impl Into<String>) -> Self {
        MirrorId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MirrorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<String> for MirrorId {
    fn from(s: String) -> Self {
        MirrorId(s)
    }
}

impl From<&str> for MirrorId {
    fn from(s: &str) -> Self {
        MirrorId(s.to_owned())
    }
}

/// Instantaneous deflection angle of every mirror.
pub type MirrorAngles<T> = BTreeMap<MirrorId, Angle<T>>;

/// Builds an angle map from `(id, radians)` pairs.
pub fn mirror_angles<T: Real>(pairs: &[(&str, T)]) -> Result<MirrorAngles<T>> {
    pairs
        .iter()
        .map(|&(id, x)| Ok((MirrorId::from(id), Angle::new(x)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate<T> {
    /// Beam splitter between channels `(j, k)`, `j < k`, with ratio p:(1−p).
    Splitter { channels: (usize, usize), p: T },
    Mirror { channel: usize, id: MirrorId },
    PhaseDelay { channel: usize, phase: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit<T> {
    channel_count: usize,
    gates: Vec<Gate<T>>,
    input_channel: usize,
    detector_channel: usize,
}

impl<T: Real> Circuit<T> {
    pub fn new(
        channel_count: usize,
        gates: Vec<Gate<T>>,
        input_channel: usize,
        detector_channel: usize,
    ) -> Result<Self> {
        if channel_count == 0 {
            return Err(Error::validation("channel_count", "must be at least 1"));
        }
        let check = |field: &str, ch: usize| {
            if (1..=channel_count).contains(&ch) {
                Ok(())
            } else {
                Err(Error::validation(
                    field,
                    format!("channel {ch} outside 1..={channel_count}"),
                ))
            }
        };
        check("input_channel", input_channel)?;
        check("detector_channel", detector_channel)?;
        let mut seen = BTreeMap::new();
        for (i, gate) in gates.iter().enumerate() {
            let field = format!("gates[{i}]");
            match gate {
                Gate::Splitter { channels: (j, k), p } => {
                    check(&field, *j)?;
                    check(&field, *k)?;
                    if j >= k {
                        return Err(Error::validation(
                            field,
                            format!("splitter channels must satisfy j < k, got ({j}, {k})"),
                        ));
                    }
                    if !(*p >= T::zero() && *p <= T::one()) {
                        return Err(Error::validation(field, format!("p = {p} outside [0, 1]")));
                    }
                }
                Gate::Mirror { channel, id } => {
                    check(&field, *channel)?;
                    if seen.insert(id.clone(), i).is_some() {
                        return Err(Error::validation(
                            field,
                            format!("mirror `{id}` appears in more than one gate"),
                        ));
                    }
                }
                Gate::PhaseDelay { channel, phase } => {
                    check(&field, *channel)?;
                    if !phase.is_finite() {
                        return Err(Error::validation(field, "phase must be finite"));
                    }
                }
            }
        }
        Ok(Circuit {
            channel_count,
            gates,
            input_channel,
            detector_channel,
        })
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn gates(&self) -> &[Gate<T>] {
        &self.gates
    }

    pub fn input_channel(&self) -> usize {
        self.input_channel
    }

    pub fn detector_channel(&self) -> usize {
        self.detector_channel
    }

    /// Mirror labels in gate order.
    pub fn mirror_ids(&self) -> Vec<MirrorId> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::Mirror { id, .. } => Some(id.clone()),
                _ => None,
            })
            .collect()
    }

    /// Paths from the input channel to the detector channel.
    pub fn detector_paths(&self) -> Result<Vec<PathTrace<T>>> {
        enumerate_paths(self, self.input_channel, self.detector_channel)
    }
}

/// Nested interferometer: outer splitters S₁₂(p_outer), inner splitters
/// S₂₃(1/2); E and F bracket the inner interferometer on channel 2, A and B
/// sit inside it on channels 2 and 3, C is on channel 1.
pub fn build_nested_mzi<T: Real>(p_outer: T) -> Result<Circuit<T>> {
    if !(p_outer >= T::zero() && p_outer <= T::one()) {
        return Err(Error::domain(format!("p_outer must lie in [0, 1], got {p_outer}")));
    }
    let half = T::lit(0.5);
    let mirror = |channel, id: &str| Gate::Mirror {
        channel,
        id: MirrorId::from(id),
    };
    let gates = vec![
        Gate::Splitter { channels: (1, 2), p: p_outer },
        mirror(2, "E"),
        Gate::Splitter { channels: (2, 3), p: half },
        mirror(2, "A"),
        mirror(3, "B"),
        mirror(1, "C"),
        Gate::Splitter { channels: (2, 3), p: half },
        mirror(2, "F"),
        Gate::Splitter { channels: (1, 2), p: p_outer },
    ];
    Circuit::new(3, gates, 1, 1)
}

/// One route through the circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace<T> {
    pub coefficient: Complex<T>,
    /// Mirrors in traversal order.
    pub mirrors: Vec<MirrorId>,
    pub phase_sum: T,
}

impl<T: Real> PathTrace<T> {
    pub fn mirror_labels(&self) -> String {
        let ids: Vec<&str> = self.mirrors.iter().map(MirrorId::as_str).collect();
        ids.join("-")
    }
}

/// Depth-first enumeration over splitter branch choices. Zero-coefficient
/// paths are kept.
pub fn enumerate_paths<T: Real>(circuit: &Circuit<T>, from: usize, to: usize) -> Result<Vec<PathTrace<T>>> {
    let n = circuit.channel_count;
    if !(1..=n).contains(&from) || !(1..=n).contains(&to) {
        return Err(Error::usage(format!(
            "channel indices ({from}, {to}) outside 1..={n}"
        )));
    }
    let mut out = Vec::new();
    let start = PathTrace {
        coefficient: Complex::new(T::one(), T::zero()),
        mirrors: Vec::new(),
        phase_sum: T::zero(),
    };
    walk(&circuit.gates, 0, from, start, to, &mut out)?;
    Ok(out)
}

fn walk<T: Real>(
    gates: &[Gate<T>],
    idx: usize,
    channel: usize,
    mut trace: PathTrace<T>,
    target: usize,
    out: &mut Vec<PathTrace<T>>,
) -> Result<()> {
    let mut i = idx;
    while i < gates.len() {
        match &gates[i] {
            Gate::Splitter { channels: (j, k), p } if channel == *j || channel == *k => {
                let s = crate::optics::splitter_matrix(*p)?;
                let m = s.matrix();
                let col = if channel == *j { 0 } else { 1 };
                for (row, next) in [(0, *j), (1, *k)] {
                    let mut branch = trace.clone();
                    branch.coefficient = branch.coefficient * m[row][col];
                    walk(gates, i + 1, next, branch, target, out)?;
                }
                return Ok(());
            }
            Gate::Mirror { channel: c, id } if *c == channel => {
                trace.mirrors.push(id.clone());
            }
            Gate::PhaseDelay { channel: c, phase } if *c == channel => {
                trace.coefficient = trace.coefficient * Complex::from_polar(T::one(), *phase);
                trace.phase_sum = trace.phase_sum + *phase;
            }
            _ => {}
        }
        i += 1;
    }
    if channel == target {
        out.push(trace);
    }
    Ok(())
}

/// Dense square complex matrix, row-major, 0-based storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            data[i * n + i] = Complex::new(T::one(), T::zero());
        }
        ChannelMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Entry `(to, from)` with 1-based channel indices.
    pub fn entry(&self, to: usize, from: usize) -> Complex<T> {
        self.data[(to - 1) * self.n + (from - 1)]
    }

    fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.n + c]
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc = acc + self.get(r, k) * other.get(k, c);
                }
                data[r * n + c] = acc;
            }
        }
        ChannelMatrix { n, data }
    }

    /// Frobenius norm of U·U† − 1.
    pub fn unitarity_residual(&self) -> T {
        let n = self.n;
        let mut sum = T::zero();
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc = acc + self.get(r, k) * self.get(c, k).conj();
                }
                if r == c {
                    acc = acc - Complex::new(T::one(), T::zero());
                }
                sum = sum + acc.norm_sqr();
            }
        }
        sum.sqrt()
    }
}

fn gate_matrix<T: Real>(gate: &Gate<T>, n: usize) -> Result<ChannelMatrix<T>> {
    let mut g = ChannelMatrix::identity(n);
    match gate {
        Gate::Splitter { channels: (j, k), p } => {
            let s = crate::optics::splitter_matrix(*p)?;
            let m = s.matrix();
            let (a, b) = (j - 1, k - 1);
            g.data[a * n + a] = m[0][0];
            g.data[a * n + b] = m[0][1];
            g.data[b * n + a] = m[1][0];
            g.data[b * n + b] = m[1][1];
        }
        Gate::PhaseDelay { channel, phase } => {
            let c = channel - 1;
            g.data[c * n + c] = Complex::from_polar(T::one(), *phase);
        }
        Gate::Mirror { .. } => {}
    }
    Ok(g)
}

/// Product of all gate matrices with mirrors at zero angle.
pub fn channel_transfer_matrix<T: Real>(circuit: &Circuit<T>) -> Result<ChannelMatrix<T>> {
    let n = circuit.channel_count;
    circuit
        .gates
        .iter()
        .try_fold(ChannelMatrix::identity(n), |acc, gate| {
            Ok(gate_matrix(gate, n)?.mul(&acc))
        })
}

/// Net planar transform accumulated along a path's mirrors.
pub fn path_net_deflection<T: Real>(trace: &PathTrace<T>, angles: &MirrorAngles<T>) -> Result<PlanarTransform<T>> {
    if trace.mirrors.is_empty() {
        return Ok(PlanarTransform {
            m: [[T::one(), T::zero()], [T::zero(), T::one()]],
            kind: TransformKind::Rotation,
            net_angle: Angle::zero(),
        });
    }
    let chain = trace
        .mirrors
        .iter()
        .map(|id| {
            let a = angles.get(id).ok_or_else(|| Error::MissingMirror {
                mirror: id.to_string(),
            })?;
            reflection_matrix(*a)
        })
        .collect::<Result<Vec<_>>>()?;
    compose_transforms(&chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(paths: &[PathTrace<f64>]) -> Vec<String> {
        paths.iter().map(PathTrace::mirror_labels).collect()
    }

    fn find<'a>(paths: &'a [PathTrace<f64>], l: &str) -> &'a PathTrace<f64> {
        paths.iter().find(|p| p.mirror_labels() == l).unwrap()
    }

    #[test]
    fn nested_preset_has_three_routes() {
        let c = build_nested_mzi(1.0 / 3.0).unwrap();
        let paths = c.detector_paths().unwrap();
        assert_eq!(paths.len(), 3);
        let mut l = labels(&paths);
        l.sort();
        assert_eq!(l, vec!["C", "E-A-F", "E-B-F"]);
        let q = 2.0 / 3.0;
        assert!((find(&paths, "E-A-F").coefficient - Complex::new(-q / 2.0, 0.0)).norm() < 1e-15);
        assert!((find(&paths, "E-B-F").coefficient - Complex::new(q / 2.0, 0.0)).norm() < 1e-15);
        assert!((find(&paths, "C").coefficient - Complex::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_coefficients_cancel_exactly() {
        for p in [0.0, 0.1, 1.0 / 3.0, 0.5, 0.77, 1.0] {
            let paths = build_nested_mzi(p).unwrap().detector_paths().unwrap();
            let sum = find(&paths, "E-A-F").coefficient + find(&paths, "E-B-F").coefficient;
            assert_eq!(sum.re, 0.0);
            assert_eq!(sum.im, 0.0);
        }
    }

    #[test]
    fn fully_transmitting_outer_splitter_kills_inner_paths() {
        let paths = build_nested_mzi(1.0).unwrap().detector_paths().unwrap();
        assert_eq!(paths.len(), 3);
        assert_eq!(find(&paths, "E-A-F").coefficient.norm(), 0.0);
        assert_eq!(find(&paths, "E-B-F").coefficient.norm(), 0.0);
        assert_eq!(find(&paths, "C").coefficient, Complex::new(1.0, 0.0));
    }

    #[test]
    fn empty_circuit_has_unit_path() {
        let c = Circuit::<f64>::new(3, vec![], 1, 1).unwrap();
        let paths = enumerate_paths(&c, 1, 1).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].coefficient, Complex::new(1.0, 0.0));
        assert!(paths[0].mirrors.is_empty());
        assert!(enumerate_paths(&c, 1, 2).unwrap().is_empty());
    }

    #[test]
    fn transfer_entries_match_path_sums() {
        let c = build_nested_mzi(1.0 / 3.0).unwrap();
        let u = channel_transfer_matrix(&c).unwrap();
        assert!(u.unitarity_residual() < 1e-12);
        assert!((u.entry(1, 1) - Complex::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        for to in 1..=3 {
            let s = enumerate_paths(&c, 1, to)
                .unwrap()
                .iter()
                .fold(Complex::new(0.0, 0.0), |a, p| a + p.coefficient);
            assert!((s - u.entry(to, 1)).norm() < 1e-12);
        }
        let col: f64 = (1..=3).map(|to| u.entry(to, 1).norm_sqr()).sum();
        assert!((col - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_splitter_embeds_at_its_channels() {
        let c = Circuit::new(3, vec![Gate::Splitter { channels: (2, 3), p: 0.5 }], 1, 1).unwrap();
        let u = channel_transfer_matrix(&c).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(u.entry(1, 1), Complex::new(1.0, 0.0));
        assert!((u.entry(2, 2) - Complex::new(h, 0.0)).norm() < 1e-16);
        assert!((u.entry(2, 3) - Complex::new(0.0, h)).norm() < 1e-16);
        assert!((u.entry(3, 2) - Complex::new(0.0, h)).norm() < 1e-16);
    }

    #[test]
    fn phase_delay_enters_coefficient_and_sum() {
        let gates = vec![
            Gate::PhaseDelay { channel: 1, phase: 0.3f64 },
            Gate::PhaseDelay { channel: 1, phase: 0.2 },
        ];
        let c = Circuit::new(2, gates, 1, 1).unwrap();
        let p = &c.detector_paths().unwrap()[0];
        assert!((p.phase_sum - 0.5).abs() < 1e-16);
        assert!((p.coefficient - Complex::from_polar(1.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn invalid_circuits_rejected() {
        let bad_channel = Circuit::<f64>::new(3, vec![Gate::PhaseDelay { channel: 4, phase: 0.0 }], 1, 1);
        assert!(matches!(bad_channel, Err(Error::Validation { .. })));
        let bad_order = Circuit::new(3, vec![Gate::Splitter { channels: (2, 1), p: 0.5 }], 1, 1);
        assert!(bad_order.is_err());
        let bad_p = Circuit::new(3, vec![Gate::Splitter { channels: (1, 2), p: 1.5 }], 1, 1);
        assert!(bad_p.is_err());
        let dup = Circuit::<f64>::new(
            3,
            vec![
                Gate::Mirror { channel: 1, id: "A".into() },
                Gate::Mirror { channel: 2, id: "A".into() },
            ],
            1,
            1,
        );
        assert!(dup.is_err());
        assert!(build_nested_mzi(-0.5).is_err());
    }

    #[test]
    fn net_deflection_of_preset_paths() {
        let paths = build_nested_mzi(1.0 / 3.0).unwrap().detector_paths().unwrap();
        let (alpha, beta, gamma, eta, phi) = (0.003, -0.002, 0.004, 0.001, -0.005);
        let ang = mirror_angles(&[("A", alpha), ("B", beta), ("C", gamma), ("E", eta), ("F", phi)]).unwrap();
        let a = path_net_deflection(find(&paths, "E-A-F"), &ang).unwrap();
        assert_eq!(a.kind, TransformKind::Reflection);
        assert!((a.net_angle.radians() - (-alpha + eta + phi)).abs() < 1e-15);
        let b = path_net_deflection(find(&paths, "E-B-F"), &ang).unwrap();
        assert!((b.net_angle.radians() - (-beta + eta + phi)).abs() < 1e-15);
        // explicit product M_φ M_β M_η
        let m = |x: f64| *reflection_matrix(Angle::new(x).unwrap()).unwrap().matrix();
        let direct = crate::optics::mat2_mul(&m(phi), &crate::optics::mat2_mul(&m(beta), &m(eta)));
        for i in 0..2 {
            for j in 0..2 {
                assert!((direct[i][j] - b.m[i][j]).abs() < 1e-15);
            }
        }
        let c = path_net_deflection(find(&paths, "C"), &ang).unwrap();
        assert!((c.net_angle.radians() - gamma).abs() < 1e-16);
    }

    #[test]
    fn missing_angle_names_the_mirror() {
        let paths = build_nested_mzi(0.5).unwrap().detector_paths().unwrap();
        let ang = mirror_angles(&[("E", 0.0), ("A", 0.0)]).unwrap();
        match path_net_deflection(find(&paths, "E-A-F"), &ang) {
            Err(Error::MissingMirror { mirror }) => assert_eq!(mirror, "F"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
