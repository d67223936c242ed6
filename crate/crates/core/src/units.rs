//! Boundary conversions between the MHz (value/2π) convention and angular
//! rad/μs.

use std::f64::consts::TAU;

/// `f` in MHz (i.e. ω/2π) to angular frequency in rad/μs.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency in rad/μs back to MHz.
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}
