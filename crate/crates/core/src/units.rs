//! Unit conventions and conversions.
//!
//! Robot geometry is specified in millimeters (that is how the hardware is
//! dimensioned); everything world-facing runs in SI units. Conversions live
//! here so no other module hard-codes a factor.

/// Standard gravity used throughout the simulation, m/s².
pub const GRAVITY_M_S2: f64 = 9.81;

pub const MM_PER_M: f64 = 1000.0;

#[inline]
pub fn mm_to_m(mm: f64) -> f64 {
    mm / MM_PER_M
}

#[inline]
pub fn m_to_mm(m: f64) -> f64 {
    m * MM_PER_M
}

#[inline]
pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

#[inline]
pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
