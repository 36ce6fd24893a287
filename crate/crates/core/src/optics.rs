//! Planar reflection and beam-splitter algebra.
//!
//! Mirrors act on the in-plane wavevector as 2×2 reflections parameterized by
//! their deflection angle; beam splitters act on a pair of channel indices as
//! symmetric 2×2 unitaries. Both are stored as dense arrays.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Deflection angle in radians. Always finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle<T>(T);

impl<T: Real> Angle<T> {
    pub fn new(radians: T) -> Result<Self> {
        if radians.is_finite() {
            Ok(Angle(radians))
        } else {
            Err(Error::domain(format!("angle must be finite, got {radians}")))
        }
    }

    pub fn zero() -> Self {
        Angle(T::zero())
    }

    #[inline]
    pub fn radians(self) -> T {
        self.0
    }

    /// Wraps into (−π, π].
    pub fn wrapped(self) -> Self {
        Angle(wrap_angle(self.0))
    }
}

pub(crate) fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut r = x % two_pi;
    if r <= -T::PI() {
        r = r + two_pi;
    } else if r > T::PI() {
        r = r - two_pi;
    }
    r
}

pub type Mat2<T> = [[T; 2]; 2];

pub(crate) fn mat2_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat2_identity<T: Real>() -> Mat2<T> {
    [[T::one(), T::zero()], [T::zero(), T::one()]]
}

fn mat2_det<T: Real>(m: &Mat2<T>) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Largest entry of |m·mᵀ − 1|.
pub fn orthogonality_residual<T: Real>(m: &Mat2<T>) -> T {
    let t = [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
    let p = mat2_mul(m, &t);
    max_abs_diff(&p, &mat2_identity())
}

fn max_abs_diff<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> T {
    let mut r = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            r = r.max((a[i][j] - b[i][j]).abs());
        }
    }
    r
}

/// Mirror action on the wavevector: an orthogonal, symmetric involution with
/// determinant −1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionTransform<T> {
    m: Mat2<T>,
    angle: Angle<T>,
}

impl<T: Real> ReflectionTransform<T> {
    pub fn matrix(&self) -> &Mat2<T> {
        &self.m
    }

    pub fn angle(&self) -> Angle<T> {
        self.angle
    }

    /// Applies the reflection to a wavevector.
    pub fn apply(&self, k: [T; 2]) -> [T; 2] {
        [
            self.m[0][0] * k[0] + self.m[0][1] * k[1],
            self.m[1][0] * k[0] + self.m[1][1] * k[1],
        ]
    }
}

/// `[[cos α, sin α], [sin α, −cos α]]`.
pub fn reflection_matrix<T: Real>(angle: Angle<T>) -> Result<ReflectionTransform<T>> {
    let a = angle.radians();
    if !a.is_finite() {
        return Err(Error::domain(format!("reflection angle must be finite, got {a}")));
    }
    let (s, c) = a.sin_cos();
    Ok(ReflectionTransform {
        m: [[c, s], [s, -c]],
        angle,
    })
}

/// Two-port beam splitter with intensity ratio p:q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterTransform<T> {
    s: [[Complex<T>; 2]; 2],
    p: T,
    q: T,
}

impl<T: Real> SplitterTransform<T> {
    pub fn matrix(&self) -> &[[Complex<T>; 2]; 2] {
        &self.s
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn q(&self) -> T {
        self.q
    }

    /// Largest entry of |s·s† − 1|.
    pub fn unitarity_residual(&self) -> T {
        let s = &self.s;
        let mut r = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..2 {
                    acc = acc + s[i][k] * s[j][k].conj();
                }
                let target = if i == j { T::one() } else { T::zero() };
                r = r.max((acc - Complex::new(target, T::zero())).norm());
            }
        }
        r
    }
}

/// `[[√p, i√q], [i√q, √p]]` with q = 1 − p.
pub fn splitter_matrix<T: Real>(p: T) -> Result<SplitterTransform<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(Error::domain(format!("splitter ratio p must lie in [0, 1], got {p}")));
    }
    let q = T::one() - p;
    let t = Complex::new(p.sqrt(), T::zero());
    let r = Complex::new(T::zero(), q.sqrt());
    Ok(SplitterTransform {
        s: [[t, r], [r, t]],
        p,
        q,
    })
}

/// Net reflection angle of the mirror sequence entry → inner → exit:
/// `M_exit · M_inner · M_entry = M_{−inner + entry + exit}`.
pub fn net_reflection_angle<T: Real>(entry: Angle<T>, inner: Angle<T>, exit: Angle<T>) -> Angle<T> {
    Angle(-inner.radians() + entry.radians() + exit.radians())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Rotation,
    Reflection,
}

/// Product of reflections: a rotation for an even count, a reflection for an
/// odd count. `net_angle` is where the transform sends the +x axis, in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarTransform<T> {
    pub m: Mat2<T>,
    pub kind: TransformKind,
    pub net_angle: Angle<T>,
}

impl<T: Real> PlanarTransform<T> {
    pub fn determinant(&self) -> T {
        mat2_det(&self.m)
    }
}

/// Composes reflections given in traversal order (first applied first); the
/// last applied transform is the leftmost factor.
pub fn compose_transforms<T: Real>(sequence: &[ReflectionTransform<T>]) -> Result<PlanarTransform<T>> {
    if sequence.is_empty() {
        return Err(Error::usage("cannot compose an empty reflection sequence"));
    }
    let m = sequence
        .iter()
        .fold(mat2_identity(), |acc, r| mat2_mul(&r.m, &acc));
    let kind = if sequence.len() % 2 == 1 {
        TransformKind::Reflection
    } else {
        TransformKind::Rotation
    };
    // Both [[c, s], [s, −c]] and [[c, −s], [s, c]] carry the angle in column 0.
    let net_angle = Angle(m[1][0].atan2(m[0][0]));
    Ok(PlanarTransform { m, kind, net_angle })
}

/// Sign of ∂(net angle)/∂(angle of the mirror at `position`) for a chain of
/// `len` reflections: the last mirror enters with +1, alternating backwards.
pub fn composition_sign(position: usize, len: usize) -> i32 {
    debug_assert!(position < len);
    if (len - 1 - position) % 2 == 0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(x: f64) -> Angle<f64> {
        Angle::new(x).unwrap()
    }

    #[test]
    fn reflection_at_zero_and_quarter_turn() {
        let r = reflection_matrix(a(0.0)).unwrap();
        assert_eq!(*r.matrix(), [[1.0, 0.0], [0.0, -1.0]]);
        let r = reflection_matrix(a(std::f64::consts::FRAC_PI_2)).unwrap();
        let m = r.matrix();
        assert!((m[0][0]).abs() < 1e-16 && (m[1][1]).abs() < 1e-16);
        assert_eq!(m[0][1], 1.0);
        assert_eq!(m[1][0], 1.0);
    }

    #[test]
    fn small_reflection_is_orthogonal_involution() {
        let r = reflection_matrix(a(0.02)).unwrap();
        let m = r.matrix();
        assert_eq!(m[0][0], 0.02f64.cos());
        assert_eq!(m[1][0], 0.02f64.sin());
        assert!(orthogonality_residual(m) < 1e-15);
        assert!((mat2_det(m) + 1.0).abs() < 1e-15);
        let sq = mat2_mul(m, m);
        assert!(max_abs_diff(&sq, &mat2_identity()) < 1e-15);
    }

    #[test]
    fn non_finite_angle_rejected() {
        assert!(matches!(Angle::new(f64::NAN), Err(Error::Domain(_))));
        assert!(Angle::new(f64::INFINITY).is_err());
    }

    #[test]
    fn splitter_examples() {
        let s = splitter_matrix(0.5f64).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = s.matrix();
        assert!((m[0][0].re - h).abs() < 1e-16 && m[0][0].im == 0.0);
        assert!((m[0][1].im - h).abs() < 1e-16 && m[0][1].re == 0.0);

        let id = splitter_matrix(1.0f64).unwrap();
        assert_eq!(id.matrix()[0][0], Complex::new(1.0, 0.0));
        assert_eq!(id.matrix()[0][1], Complex::new(0.0, 0.0));

        let third = splitter_matrix(1.0f64 / 3.0).unwrap();
        assert!(third.unitarity_residual() < 1e-15);
        assert!((third.matrix()[0][0].norm_sqr() - 1.0 / 3.0).abs() < 1e-15);
        assert!((third.matrix()[0][1].norm_sqr() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(third.matrix()[0][1], third.matrix()[1][0]);
    }

    #[test]
    fn splitter_out_of_range() {
        assert!(splitter_matrix(-0.1).is_err());
        assert!(splitter_matrix(1.5).is_err());
        assert!(splitter_matrix(f64::NAN).is_err());
    }

    #[test]
    fn net_angle_examples() {
        let n = net_reflection_angle(a(0.01), a(0.02), a(0.03));
        assert!((n.radians() - 0.02).abs() < 1e-17);
        assert_eq!(net_reflection_angle(a(0.0), a(0.0), a(0.0)).radians(), 0.0);
    }

    #[test]
    fn compose_examples() {
        let single = compose_transforms(&[reflection_matrix(a(0.3)).unwrap()]).unwrap();
        assert_eq!(single.kind, TransformKind::Reflection);
        assert!((single.net_angle.radians() - 0.3).abs() < 1e-15);

        let (eta, alpha, phi) = (0.011, -0.004, 0.007);
        let chain: Vec<_> = [eta, alpha, phi]
            .iter()
            .map(|&x| reflection_matrix(a(x)).unwrap())
            .collect();
        let c = compose_transforms(&chain).unwrap();
        assert_eq!(c.kind, TransformKind::Reflection);
        assert!((c.net_angle.radians() - (-alpha + eta + phi)).abs() < 1e-15);

        let zero = reflection_matrix(a(0.0)).unwrap();
        let rot = compose_transforms(&[zero, zero]).unwrap();
        assert_eq!(rot.kind, TransformKind::Rotation);
        assert_eq!(rot.m, mat2_identity::<f64>());

        assert!(matches!(compose_transforms::<f64>(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn composition_signs_alternate_from_the_end() {
        assert_eq!(composition_sign(0, 1), 1);
        assert_eq!(
            (0..3).map(|i| composition_sign(i, 3)).collect::<Vec<_>>(),
            vec![1, -1, 1]
        );
        assert_eq!(
            (0..2).map(|i| composition_sign(i, 2)).collect::<Vec<_>>(),
            vec![-1, 1]
        );
    }

    #[test]
    fn wrap_into_half_open_interval() {
        let pi = std::f64::consts::PI;
        assert_eq!(wrap_angle(pi), pi);
        assert!((wrap_angle(-pi) - pi).abs() < 1e-15);
        assert!((wrap_angle(3.0 * pi / 2.0) + pi / 2.0).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let r = reflection_matrix(Angle::new(0.1f32).unwrap()).unwrap();
        assert!(orthogonality_residual(r.matrix()) < 1e-6);
        assert!(splitter_matrix(0.25f32).unwrap().unitarity_residual() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reflection_squares_to_identity(x in -10.0f64..10.0) {
                let m = *reflection_matrix(a(x)).unwrap().matrix();
                prop_assert!(max_abs_diff(&mat2_mul(&m, &m), &mat2_identity()) < 1e-12);
            }

            #[test]
            fn composition_matches_alternating_sum(
                eta in -0.2f64..0.2, alpha in -0.2f64..0.2, beta in -0.2f64..0.2, phi in -0.2f64..0.2
            ) {
                for inner in [alpha, beta] {
                    let chain: Vec<_> = [eta, inner, phi].iter().map(|&x| reflection_matrix(a(x)).unwrap()).collect();
                    let c = compose_transforms(&chain).unwrap();
                    let d = wrap_angle(c.net_angle.radians() - (-inner + eta + phi));
                    prop_assert!(d.abs() < 1e-12);
                    let direct = reflection_matrix(a(-inner + eta + phi)).unwrap();
                    prop_assert!(max_abs_diff(&c.m, direct.matrix()) < 1e-12);
                }
            }

            #[test]
            fn splitter_unitary_and_symmetric(p in 0.0f64..=1.0) {
                let s = splitter_matrix(p).unwrap();
                prop_assert!(s.unitarity_residual() < 1e-12);
                prop_assert_eq!(s.matrix()[0][1], s.matrix()[1][0]);
            }

            #[test]
            fn determinant_sign_follows_parity(xs in proptest::collection::vec(-3.0f64..3.0, 1..8)) {
                let chain: Vec<_> = xs.iter().map(|&x| reflection_matrix(a(x)).unwrap()).collect();
                let c = compose_transforms(&chain).unwrap();
                let expected = if xs.len() % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert!((c.determinant() - expected).abs() < 1e-12);
            }
        }
    }
}
