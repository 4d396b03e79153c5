//! Closed-form small-`r_s` solution: plateau scale, amplitude profile and
//! the asymptotic optimal deformation.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::params::{constants, coupling_offset, shape_factor, Deformation};

/// Prefactor constant `8 exp(-3/2 - pi^2/8)`.
pub fn prefactor() -> f64 {
    8.0 * (-1.5 - PI * PI / 8.0).exp()
}

pub fn gamma_prime(gamma: f64) -> f64 {
    gamma + gamma.sqrt() * (PI * PI + 4.0) / (2.0 * PI * SQRT_2)
}

/// Width `x0` of the amplitude plateau.
pub fn plateau_scale(gamma_prime: f64) -> f64 {
    2.0 * (-(PI / (2.0 * SQRT_2)) * gamma_prime.sqrt() - 0.5).exp()
}

/// First zero of the asymptotic profile.
pub fn first_zero(gamma_prime: f64) -> f64 {
    plateau_scale(gamma_prime) * (0.5 * PI * (gamma_prime / 2.0).sqrt()).sinh()
}

/// Asymptotic amplitude profile, clipped to zero beyond its first zero.
pub fn xi_asymptotic(x: f64, gamma_prime: f64) -> f64 {
    let x0 = plateau_scale(gamma_prime);
    let u = x / x0;
    let phase = (2.0 / gamma_prime).sqrt() * u.asinh();
    if phase >= 0.5 * PI {
        return 0.0;
    }
    0.5 * phase.cos() / (u * u + 1.0).sqrt()
}

/// Asymptotic optimal deformation, using the density-only coupling.
pub fn eps0(r_s: f64, h: f64) -> f64 {
    let g0 = coupling_offset(r_s);
    2.0 * prefactor() / (3.0 * shape_factor(h)) * (-PI * PI / 4.0 - PI * (g0 / 2.0).sqrt()).exp()
}

/// One self-consistency pass: coupling evaluated at `eps0` instead of the
/// density-only offset. Used to centre optimizer brackets.
pub fn eps0_refined(r_s: f64, h: f64) -> f64 {
    let e0 = eps0(r_s, h);
    let gamma = coupling_offset(r_s) + (2.0 / e0).ln();
    2.0 * prefactor() / (3.0 * shape_factor(h)) * (-PI * (gamma / 2.0).sqrt()).exp()
}

/// Asymptotic SDW energy gain at fixed deformation (an estimate of the
/// upper bound, Hartree per particle).
pub fn sdw_energy_asym(def: &Deformation) -> f64 {
    let a_v = constants().a_v;
    -prefactor()
        * (2.0 * PI * PI * a_v / def.r_s)
        * def.eps
        * def.eps
        * def.gamma
        * (-PI * (def.gamma / 2.0).sqrt()).exp()
}

/// Asymptotic total energy at the optimum, `-pi a_K alpha eps^3 / r_s^2`.
pub fn min_energy_asym(r_s: f64, eps: f64, h: f64) -> f64 {
    -PI * constants().a_k * shape_factor(h) * eps.powi(3) / (r_s * r_s)
}

/// Scaled optimum energy `-pi a_K alpha`.
pub fn scaled_constant(h: f64) -> f64 {
    -PI * constants().a_k * shape_factor(h)
}

/// Leading-order total energy as a function of the deformation: deformation
/// cost minus the asymptotic SDW gain.
pub fn closed_form_energy(r_s: f64, eps: f64, h: f64) -> f64 {
    let a_v = constants().a_v;
    let gamma = (2.0 / eps).ln() + coupling_offset(r_s);
    2.0 * PI * PI * a_v * gamma * eps * eps / r_s
        * (eps * shape_factor(h) - prefactor() * (-PI * (gamma / 2.0).sqrt()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticSolution {
    pub gamma_prime: f64,
    pub x0: f64,
    pub prefactor: f64,
    pub eps0: f64,
    pub delta_e_sdw: f64,
    pub delta_e_min: f64,
    pub scaled_constant: f64,
}

pub fn asymptotic_solution(def: &Deformation) -> AsymptoticSolution {
    let gp = gamma_prime(def.gamma);
    AsymptoticSolution {
        gamma_prime: gp,
        x0: plateau_scale(gp),
        prefactor: prefactor(),
        eps0: eps0(def.r_s, def.h),
        delta_e_sdw: sdw_energy_asym(def),
        delta_e_min: min_energy_asym(def.r_s, def.eps, def.h),
        scaled_constant: scaled_constant(def.h),
    }
}
