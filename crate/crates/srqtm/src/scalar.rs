//! Scalar abstraction: the whole crate is generic over the real scalar type
//! used for amplitudes, so machines can run in `f32` or `f64`.

use std::fmt;
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar backing all amplitude arithmetic (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + Sum<Self>
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` constant into the working scalar type.
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant not representable in scalar type")
}

/// Complex value from `f64` parts in the working scalar type.
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(real(re), real(im))
}

/// |z|^2 as f64, for reports and sampling.
pub fn norm_sqr_f64<T: Real>(z: &Complex<T>) -> f64 {
    let n = z.norm_sqr();
    n.to_f64().unwrap_or(f64::NAN)
}

/// Normalization tolerance for the scalar type: the configured threshold,
/// widened when the type's own precision cannot reach it (f32).
pub fn norm_tolerance<T: Real>() -> f64 {
    crate::tol::ROW_NORM.max(T::epsilon().to_f64().unwrap_or(0.0) * 16.0)
}
