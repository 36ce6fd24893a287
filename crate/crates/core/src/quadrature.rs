//! Globally adaptive Gauss–Kronrod (7/15) integration for real and complex
//! integrands.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values that can be integrated: closed under addition and real scaling.
pub trait QuadValue<T: Real>: Copy + Send + Sync {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: T) -> Self;
    fn magnitude(self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: T) -> Self {
        self * s
    }
    fn magnitude(self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: T) -> Self {
        self * s
    }
    fn magnitude(self) -> T {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions<T> {
    pub abs_tol: T,
    /// Number of equal panels the interval is split into before refinement.
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl<T: Real> Default for QuadratureOptions<T> {
    fn default() -> Self {
        QuadratureOptions {
            abs_tol: T::quadrature_tolerance(),
            initial_panels: 1,
            max_panels: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel<T, V> {
    lo: T,
    hi: T,
    value: V,
    error: T,
}

fn gk15<T, V, F>(f: &F, lo: T, hi: T) -> Panel<T, V>
where
    T: Real,
    V: QuadValue<T>,
    F: Fn(T) -> V,
{
    let half = T::lit(0.5);
    let center = (lo + hi) * half;
    let radius = (hi - lo) * half;
    let fc = f(center);
    let mut kronrod = fc.scale(T::lit(WGK[7]));
    let mut gauss = fc.scale(T::lit(WG[3]));
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = radius * T::lit(x);
        let pair = f(center - dx).add(f(center + dx));
        kronrod = kronrod.add(pair.scale(T::lit(w)));
        if j % 2 == 1 {
            gauss = gauss.add(pair.scale(T::lit(WG[j / 2])));
        }
    }
    let value = kronrod.scale(radius);
    let error = kronrod.add(gauss.scale(-T::one())).scale(radius).magnitude();
    Panel { lo, hi, value, error }
}

/// Integrates `f` over `[lo, hi]`, bisecting the panel with the largest error
/// estimate until the summed estimate is below `abs_tol`. The result depends
/// only on the integrand values, so identical integrands give identical sums.
pub fn integrate<T, V, F>(f: F, lo: T, hi: T, opts: &QuadratureOptions<T>) -> Result<V>
where
    T: Real,
    V: QuadValue<T>,
    F: Fn(T) -> V,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::domain("integration bounds must be finite"));
    }
    if lo == hi {
        return Ok(V::zero());
    }
    let n0 = opts.initial_panels.max(1);
    let width = (hi - lo) / T::from_usize(n0).unwrap();
    let mut panels: Vec<Panel<T, V>> = (0..n0)
        .map(|i| {
            let a = lo + width * T::from_usize(i).unwrap();
            let b = if i + 1 == n0 { hi } else { a + width };
            gk15(&f, a, b)
        })
        .collect();

    loop {
        let total_err = panels.iter().fold(T::zero(), |acc, p| acc + p.error);
        if total_err <= opts.abs_tol {
            break;
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::Quadrature {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                achieved: total_err.to_f64_lossy(),
                tolerance: opts.abs_tol.to_f64_lossy(),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -T::one()), |(bi, be), (i, p)| if p.error > be { (i, p.error) } else { (bi, be) });
        let p = panels[worst];
        let mid = (p.lo + p.hi) * T::lit(0.5);
        if !(mid > p.lo && mid < p.hi) {
            // panel cannot be split further in this precision
            return Err(Error::Quadrature {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
                achieved: total_err.to_f64_lossy(),
                tolerance: opts.abs_tol.to_f64_lossy(),
            });
        }
        panels[worst] = gk15(&f, p.lo, mid);
        panels.push(gk15(&f, mid, p.hi));
    }

    // Sum in interval order so the result does not depend on refinement order.
    panels.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap_or(std::cmp::Ordering::Equal));
    Ok(panels.iter().fold(V::zero(), |acc, p| acc.add(p.value)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_on_one_panel() {
        let opts = QuadratureOptions::default();
        let v: f64 = integrate(|x: f64| x.powi(6) - 3.0 * x * x, -1.0, 2.0, &opts).unwrap();
        let exact = (2f64.powi(7) + 1.0) / 7.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let opts = QuadratureOptions { initial_panels: 8, ..Default::default() };
        let v: f64 = integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, &opts).unwrap();
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn complex_integrand() {
        let opts = QuadratureOptions::default();
        let v: Complex<f64> =
            integrate(|x: f64| Complex::from_polar(1.0, x), 0.0, std::f64::consts::PI, &opts).unwrap();
        assert!((v - Complex::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn refinement_handles_kinks() {
        let opts = QuadratureOptions::default();
        let v: f64 = integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, &opts).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadratureOptions { abs_tol: 1e-14, initial_panels: 1, max_panels: 4 };
        let r: Result<f64> = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 3.0, &opts);
        match r {
            Err(Error::Quadrature { achieved, tolerance, .. }) => {
                assert!(achieved > tolerance);
            }
            other => panic!("expected quadrature error, got {other:?}"),
        }
    }

    #[test]
    fn empty_interval_is_zero() {
        let v: f64 = integrate(|x: f64| x, 1.0, 1.0, &QuadratureOptions::default()).unwrap();
        assert_eq!(v, 0.0);
    }
}
