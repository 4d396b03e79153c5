//! Upper bounds on spin-density-wave energies of the Hartree-Fock electron
//! gas, from a one-dimensional fixed-point problem on a deformed Fermi
//! surface.

pub mod asymptotics;
pub mod error;
pub mod fermi_gas;
pub mod kernel;
pub mod optimizer;
pub mod params;
pub mod quadrature;
pub mod solver;

pub use error::{Result, SdwError};
pub use params::{constants, deformation, Deformation, PhysConstants};
