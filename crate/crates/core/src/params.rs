//! Physical constants and the truncated-sphere-plus-cylinder deformation.
//!
//! Wave vectors are in units of the Fermi wave vector, energies in Hartree
//! per particle.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Result, SdwError};

/// Couplings of the kinetic and exchange terms of the energy per particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysConstants {
    pub a_v: f64,
    pub a_k: f64,
    pub ratio_kv: f64,
}

pub fn constants() -> PhysConstants {
    let cbrt = (9.0 * PI / 4.0).cbrt();
    let a_v = 3.0 / (32.0 * PI.powi(3)) * cbrt;
    let ratio_kv = 2.0 * PI * PI * cbrt;
    PhysConstants {
        a_v,
        a_k: a_v * ratio_kv,
        ratio_kv,
    }
}

/// Density-only part of the coupling, `a_K / (a_V pi r_s)`.
pub fn coupling_offset(r_s: f64) -> f64 {
    constants().ratio_kv / (PI * r_s)
}

/// Shape factor of the deformation cost; minimal (1/6) at `h = 1/2`.
pub fn shape_factor(h: f64) -> f64 {
    2.0 * (h - 0.5).powi(2) + 1.0 / 6.0
}

/// Exact volume change of the unit sphere when a cap of depth `eps` is cut
/// and a cylinder of height `h * eps` is put on the cut disk.
pub fn volume_change(eps: f64, h: f64) -> f64 {
    -PI / 3.0 * eps * eps * (3.0 - eps) + PI * (2.0 * eps - eps * eps) * h * eps
}

/// Scale `R` restoring the Fermi volume: `R^3 * (4 pi / 3 + dV) = 4 pi / 3`.
pub fn volume_scale(eps: f64, h: f64) -> f64 {
    (1.0 + 3.0 * volume_change(eps, h) / (4.0 * PI)).powf(-1.0 / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deformation {
    pub r_s: f64,
    pub eps: f64,
    pub h: f64,
    /// `ln(2/eps) + gamma0`
    pub gamma: f64,
    pub gamma0: f64,
    pub alpha: f64,
    /// Coupling wave vector `2(1 - eps + h eps)`.
    pub q: f64,
    /// Radius of the cut disk, `r^2 = 2 eps - eps^2`.
    pub r: f64,
    pub volume_scale: f64,
}

impl Deformation {
    pub fn new(r_s: f64, eps: f64, h: f64) -> Result<Self> {
        if !(r_s.is_finite() && r_s > 0.0) {
            return Err(SdwError::Domain(format!("r_s must be positive, got {r_s}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SdwError::Domain(format!(
                "eps must lie in (0, 1), got {eps}"
            )));
        }
        if !(0.0..=1.0).contains(&h) {
            return Err(SdwError::Domain(format!("h must lie in [0, 1], got {h}")));
        }
        let gamma0 = coupling_offset(r_s);
        Ok(Self {
            r_s,
            eps,
            h,
            gamma: (2.0 / eps).ln() + gamma0,
            gamma0,
            alpha: shape_factor(h),
            q: 2.0 * (1.0 - eps + h * eps),
            r: (2.0 * eps - eps * eps).sqrt(),
            volume_scale: volume_scale(eps, h),
        })
    }

    pub fn r_sq(&self) -> f64 {
        2.0 * self.eps - self.eps * self.eps
    }

    /// Deformed Fermi volume of one spin species.
    pub fn volume(&self) -> f64 {
        4.0 * PI / 3.0 + volume_change(self.eps, self.h)
    }
}

pub fn deformation(r_s: f64, eps: f64, h: f64) -> Result<Deformation> {
    Deformation::new(r_s, eps, h)
}
