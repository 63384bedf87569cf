//! Unit conventions.
//!
//! Internally every frequency is an angular frequency in rad/ns and every time
//! is in ns. Device numbers are usually quoted as linear frequencies in MHz,
//! so `f` MHz maps to `2π·f·10⁻³` rad/ns.

use std::f64::consts::PI;

/// Linear MHz to angular rad/ns.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f * 1e-3
}

/// Angular rad/ns back to linear MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e-3)
}

/// Linear GHz to angular rad/ns.
pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f
}

/// On-site interaction of the reference device, 190 MHz.
pub const DEVICE_U_MHZ: f64 = 190.0;

/// Default tilt amplitude on the reference device, 30 MHz.
pub const DEFAULT_TILT_MHZ: f64 = 30.0;

/// Default tilt amplitude for an interaction `u` (rad/ns): 30 MHz scaled by
/// `u / U_device`.
pub fn default_tilt(u: f64) -> f64 {
    mhz(DEFAULT_TILT_MHZ) * u / mhz(DEVICE_U_MHZ)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = 190.0;
        assert!((to_mhz(mhz(f)) - f).abs() < 1e-12);
        assert!((mhz(1000.0) - ghz(1.0)).abs() < 1e-15);
    }

    #[test]
    fn tilt_scales_with_u() {
        let u = mhz(DEVICE_U_MHZ);
        assert!((default_tilt(u) - mhz(30.0)).abs() < 1e-15);
        assert!((default_tilt(1.0) - 30.0 / 190.0).abs() < 1e-12);
    }
}
