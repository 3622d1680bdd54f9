//! Linear acoustics of a plane pressure wave crossing layered media.
//!
//! All pressures are normalized by the incident jump `p0`.

use crate::eos::Material;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticMedium {
    pub rho: f64,
    pub c: f64,
}

impl AcousticMedium {
    pub fn new(rho: f64, c: f64) -> Result<Self> {
        if !(rho > 0.0 && c > 0.0 && rho.is_finite() && c.is_finite()) {
            return Err(Error::InvalidState(format!(
                "acoustic medium needs rho, c > 0, got {rho}, {c}"
            )));
        }
        Ok(Self { rho, c })
    }

    /// Medium at the material's reference density and 1 atm.
    pub fn ambient(m: &Material) -> Self {
        Self {
            rho: m.rho_ref,
            c: m.ambient_sound_speed(),
        }
    }

    pub fn impedance(&self) -> f64 {
        self.rho * self.c
    }
}

/// Transmission and reflection coefficients `(T, R)` for a wave in medium A
/// hitting medium B.
pub fn interface_coefficients(z_a: f64, z_b: f64) -> (f64, f64) {
    if z_b.is_infinite() {
        return (2.0, 1.0);
    }
    let s = z_a + z_b;
    (2.0 * z_b / s, (z_b - z_a) / s)
}

/// Ratio by which each extra round trip inside the middle layer multiplies
/// the transmitted contribution.
pub fn series_ratio(z_a: f64, z_p: f64, z_w: f64) -> f64 {
    (z_a - z_p) * (z_w - z_p) / ((z_a + z_p) * (z_w + z_p))
}

/// Contribution of the `n`-th wave (n >= 1) leaving an a|p|w layering into w.
pub fn nth_transmission(z_a: f64, z_p: f64, z_w: f64, n: u32) -> f64 {
    assert!(n >= 1, "wave index starts at 1");
    let first = 2.0 * z_w / (z_w + z_p) * (2.0 * z_p / (z_p + z_a));
    first * series_ratio(z_a, z_p, z_w).powi(n as i32 - 1)
}

pub fn partial_transmission(z_a: f64, z_p: f64, z_w: f64, n: u32) -> f64 {
    (1..=n).map(|k| nth_transmission(z_a, z_p, z_w, k)).sum()
}

/// Sum of the whole series, which does not depend on the middle layer.
pub fn total_transmission(z_a: f64, z_w: f64) -> f64 {
    2.0 * z_w / (z_w + z_a)
}

/// Time between two successive transmitted waves.
pub fn reverberation_time(width: f64, c_p: f64) -> f64 {
    2.0 * width / c_p
}
