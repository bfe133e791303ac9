//! Scalar abstraction shared by the double and double-double code paths.

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use std::fmt::Debug;

/// Double-double scalar (~106-bit significand) used for verification-grade runs.
pub use crate::dd::Dd;

/// Real scalar type the numerical kernels are generic over.
pub trait Real: Float + FloatConst + Debug + Send + Sync + 'static {
    /// Unit roundoff of the type.
    fn unit_roundoff() -> f64;
    /// Exact conversion from `f64`.
    fn from_f64_exact(x: f64) -> Self;
}

impl Real for f64 {
    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }
    fn from_f64_exact(x: f64) -> Self {
        x
    }
}

impl Real for Dd {
    fn unit_roundoff() -> f64 {
        // 2^-104, the usual bound for double-double arithmetic.
        4.930380657631324e-32
    }
    fn from_f64_exact(x: f64) -> Self {
        Dd::from(x)
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64_exact(x)
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn cplx<T: Real>(z: num_complex::Complex64) -> Complex<T> {
    Complex::new(lit(z.re), lit(z.im))
}

#[inline]
pub fn cplx_f64<T: Real>(z: Complex<T>) -> num_complex::Complex64 {
    num_complex::Complex64::new(to_f64(z.re), to_f64(z.im))
}

/// Modulus without going through `hypot`, which is slow for double-double.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

#[inline]
pub fn cfinite<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_literals_are_exact() {
        let x: Dd = lit(0.1);
        assert_eq!(to_f64(x), 0.1);
        let y = x * lit::<Dd>(3.0);
        // 0.1 * 3 carries the rounding error of the product in the low word
        assert!(to_f64(y - lit::<Dd>(0.30000000000000004)).abs() < 1e-16);
        assert!(to_f64(y - lit::<Dd>(0.30000000000000004)) != 0.0);
    }
}
