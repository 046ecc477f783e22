//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All algorithms are written against [`Scalar`], implemented for `f32` and
//! `f64`. Special functions (normal quantile, error function) are evaluated
//! in `f64` and narrowed, which is exact for `f64` and harmless for `f32`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point type usable throughout the library.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for [`Scalar::lit`].
#[inline]
pub(crate) fn c<S: Scalar>(x: f64) -> S {
    S::lit(x)
}

/// Standard normal quantile `z(p)`; `±∞` at the endpoints.
pub fn normal_quantile<S: Scalar>(p: S) -> S {
    let p = p.as_f64();
    if p <= 0.0 {
        return S::neg_infinity();
    }
    if p >= 1.0 {
        return S::infinity();
    }
    S::lit(-std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p))
}

/// Standard normal density.
pub fn normal_pdf<S: Scalar>(z: S) -> S {
    let z = z.as_f64();
    if !z.is_finite() {
        return S::zero();
    }
    S::lit((-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt())
}

/// Standard normal upper tail `P(Z > z)`, accurate deep in the tail.
pub fn normal_sf<S: Scalar>(z: S) -> S {
    S::lit(0.5 * statrs::function::erf::erfc(z.as_f64() / std::f64::consts::SQRT_2))
}

/// Standard normal lower tail `P(Z < z)`.
pub fn normal_cdf<S: Scalar>(z: S) -> S {
    S::lit(0.5 * statrs::function::erf::erfc(-z.as_f64() / std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_matches_known_points() {
        assert_eq!(normal_quantile(0.5_f64), 0.0);
        assert!((normal_quantile(0.975_f64) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((normal_quantile(1e-10_f64) + 6.361_340_902_404_056).abs() < 1e-12);
        assert_eq!(normal_quantile(0.0_f64), f64::NEG_INFINITY);
        assert_eq!(normal_quantile(1.0_f64), f64::INFINITY);
    }

    #[test]
    fn normal_tails_are_complementary() {
        for &z in &[-8.0, -1.3, 0.0, 0.7, 5.0] {
            let s: f64 = normal_sf(z) + normal_cdf(z);
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!((normal_sf(0.0_f64) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn f32_lifts() {
        let z: f32 = normal_quantile(0.975_f32);
        assert!((z - 1.959_964).abs() < 1e-5);
    }
}
