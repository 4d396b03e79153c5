//! Monotone fixed-point iteration for the SDW amplitude and the resulting
//! energy bound.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Result, SdwError};
use crate::kernel::{
    assemble_operators, build_grid, gap, DiscreteOperator, GridConfig, LowerBound, OperatorPair,
    RadialGrid,
};
use crate::params::{constants, Deformation};

/// Allowed pointwise increase between successive iterates.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Below this everywhere the solution is the Fermi-gas fixed point.
pub const TRIVIAL_LEVEL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Stop when the sup-norm step falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Safeguarded extrapolation every few steps. Candidates are kept only
    /// if they stay supersolutions, so the iterates remain nonincreasing.
    pub extrapolate: bool,
    pub plateau_level: f64,
    /// How many times the grid may be extended one decade downward when the
    /// plateau is not reached.
    pub max_extensions: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            extrapolate: true,
            plateau_level: 0.499,
            max_extensions: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdwSolution {
    pub xi: Vec<f64>,
    pub b_sq: Vec<f64>,
    /// Applications of J, including those spent on extrapolation candidates.
    pub iterations: usize,
    /// `sup |xi - J(xi)|` of the returned iterate.
    pub residual: f64,
    pub plateau_ok: bool,
    /// Converged to the Fermi-gas fixed point.
    pub trivial: bool,
    pub accepted_extrapolations: usize,
}

impl SdwSolution {
    pub fn write_csv<W: Write>(&self, grid: &RadialGrid, mut out: W) -> io::Result<()> {
        writeln!(out, "x,xi,b_sq")?;
        for ((x, xi), b) in grid.nodes.iter().zip(&self.xi).zip(&self.b_sq) {
            writeln!(out, "{x:.11e},{xi:.11e},{b:.11e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdwEnergy {
    /// Dimensionless bound `gap_term - exchange_term`.
    pub delta_e_scaled: f64,
    /// Hartree per particle.
    pub delta_e: f64,
    /// `(T- b^2, b^2)`, dropped from the bound.
    pub neglected_term: f64,
    pub gap_term: f64,
    pub exchange_term: f64,
    pub warnings: Vec<String>,
}

impl SdwEnergy {
    fn zero() -> Self {
        Self {
            delta_e_scaled: 0.0,
            delta_e: 0.0,
            neglected_term: 0.0,
            gap_term: 0.0,
            exchange_term: 0.0,
            warnings: Vec::new(),
        }
    }
}

/// Minority weight `b^2 = (1 - sqrt(1 - 4 xi^2)) / 2`, in a cancellation-free form.
pub fn b_squared(xi: &[f64]) -> Vec<f64> {
    xi.iter().map(|&v| b_sq_one(v)).collect()
}

fn b_sq_one(xi: f64) -> f64 {
    let v = xi.clamp(0.0, 0.5);
    let q = v * v;
    2.0 * q / (1.0 + (1.0 - 4.0 * q).max(0.0).sqrt())
}

/// Gap function sampled on the grid nodes.
pub fn gap_vector(grid: &RadialGrid, def: &Deformation) -> Vec<f64> {
    grid.nodes.iter().map(|&x| gap(x, def.gamma)).collect()
}

fn j_from_exchange(t: f64, g: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    0.5 * t / (PI * PI * g * g + t * t).sqrt()
}

/// One application of `J(xi) = (T+ xi) / (2 sqrt(pi^2 g^2 + (T+ xi)^2))`.
pub fn apply_j(xi: &[f64], gap: &[f64], plus: &DiscreteOperator) -> Vec<f64> {
    let mut out = plus.apply(xi);
    for (o, g) in out.iter_mut().zip(gap) {
        *o = j_from_exchange(*o, *g);
    }
    out
}

/// Value of the dimensionless bound `2 pi (g, b^2) - (T+ xi, xi)` for any
/// admissible amplitude.
pub fn bound_functional(
    grid: &RadialGrid,
    gap: &[f64],
    plus: &DiscreteOperator,
    xi: &[f64],
) -> f64 {
    let b = b_squared(xi);
    let t = plus.apply(xi);
    2.0 * PI * grid.inner(gap, &b) - grid.inner(&t, xi)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Iterate `J` from `xi = 1/2` until the sup-norm step drops below `tol`.
pub fn solve_fixed_point(
    grid: &RadialGrid,
    gap: &[f64],
    plus: &DiscreteOperator,
    cfg: &SolverConfig,
) -> Result<SdwSolution> {
    if !(cfg.tol > 0.0) {
        return Err(SdwError::Domain(format!(
            "tolerance must be positive, got {}",
            cfg.tol
        )));
    }
    let n = grid.len();
    let mut xi = vec![0.5; n];
    let mut iterations = 0;
    let mut prev_step: Option<f64> = None;
    let mut accepted = 0;

    let check = |old: &[f64], new: &[f64], it: usize| -> Result<()> {
        for (k, (a, b)) in old.iter().zip(new).enumerate() {
            if *b > a + MONOTONE_SLACK {
                return Err(SdwError::NonMonotone {
                    iteration: it,
                    x: grid.nodes[k],
                    increase: b - a,
                });
            }
        }
        Ok(())
    };

    loop {
        if iterations >= cfg.max_iter {
            return Err(SdwError::NonConvergence {
                iterations,
                residual: prev_step.unwrap_or(f64::INFINITY),
            });
        }
        let mut next = apply_j(&xi, gap, plus);
        iterations += 1;
        check(&xi, &next, iterations)?;
        let step = sup_diff(&xi, &next);

        if step < cfg.tol || next.iter().all(|&v| v < TRIVIAL_LEVEL) {
            let trivial = next.iter().all(|&v| v < TRIVIAL_LEVEL);
            let residual = sup_diff(&next, &apply_j(&next, gap, plus));
            let b_sq = b_squared(&next);
            let plateau_ok = next[0] >= cfg.plateau_level;
            return Ok(SdwSolution {
                xi: next,
                b_sq,
                iterations,
                residual,
                plateau_ok,
                trivial,
                accepted_extrapolations: accepted,
            });
        }

        if cfg.extrapolate && iterations % 10 == 0 && step > 100.0 * cfg.tol {
            if let Some(prev) = prev_step {
                let rate = step / prev;
                if rate > 0.0 && rate < 1.0 {
                    let factor = 0.8 * rate / (1.0 - rate);
                    let cand: Vec<f64> = next
                        .iter()
                        .zip(&xi)
                        .map(|(nw, old)| (nw - factor * (old - nw)).max(0.0))
                        .collect();
                    let image = apply_j(&cand, gap, plus);
                    iterations += 1;
                    if image
                        .iter()
                        .zip(&cand)
                        .all(|(j, c)| *j <= c + MONOTONE_SLACK)
                    {
                        next = image;
                        accepted += 1;
                    }
                }
            }
        }
        prev_step = Some(step);
        xi = next;
    }
}

/// Energy bound of a converged solution. With `volume_scaled` the result
/// carries the `R^4` factor of the normalized Fermi volume.
pub fn sdw_energy(
    def: &Deformation,
    grid: &RadialGrid,
    solution: &SdwSolution,
    ops: &OperatorPair,
    volume_scaled: bool,
) -> SdwEnergy {
    if solution.trivial {
        return SdwEnergy::zero();
    }
    let g = gap_vector(grid, def);
    let gap_term = 2.0 * PI * grid.inner(&g, &solution.b_sq);
    let t = ops.plus.apply(&solution.xi);
    let exchange_term = grid.inner(&t, &solution.xi);
    let tb = ops.minus.apply(&solution.b_sq);
    let neglected_term = grid.inner(&tb, &solution.b_sq);
    let delta_e_scaled = gap_term - exchange_term;
    let mut prefactor = 4.0 * PI * constants().a_v * def.r_sq().powi(2) / def.r_s;
    if volume_scaled {
        prefactor *= def.volume_scale.powi(4);
    }
    let mut warnings = Vec::new();
    if neglected_term > 0.1 * delta_e_scaled.abs() {
        warnings.push(format!(
            "neglected (T- b^2, b^2) = {neglected_term:.3e} exceeds 10% of |dE| = {:.3e}",
            delta_e_scaled.abs()
        ));
    }
    if !solution.plateau_ok {
        warnings.push(format!(
            "plateau not reached: xi(x_min) = {:.6}",
            solution.xi[0]
        ));
    }
    SdwEnergy {
        delta_e_scaled,
        delta_e: prefactor * delta_e_scaled,
        neglected_term,
        gap_term,
        exchange_term,
        warnings,
    }
}

/// Everything produced by one solve at fixed deformation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolvedPoint {
    pub deformation: Deformation,
    pub grid: RadialGrid,
    pub solution: SdwSolution,
    pub energy: SdwEnergy,
    /// Decades added below the default lower bound to reach the plateau.
    pub extensions: usize,
}

/// Build the grid, assemble, iterate and evaluate the bound. The grid is
/// extended a decade downward while the plateau is missed.
pub fn solve_deformation(
    def: &Deformation,
    grid_cfg: &GridConfig,
    solver_cfg: &SolverConfig,
    volume_scaled: bool,
) -> Result<SolvedPoint> {
    let mut cfg = *grid_cfg;
    let mut extensions = 0;
    loop {
        let grid = build_grid(def, &cfg)?;
        let ops = assemble_operators(&grid)?;
        let g = gap_vector(&grid, def);
        let solution = solve_fixed_point(&grid, &g, &ops.plus, solver_cfg)?;
        if solution.plateau_ok || solution.trivial || extensions >= solver_cfg.max_extensions {
            let energy = sdw_energy(def, &grid, &solution, &ops, volume_scaled);
            return Ok(SolvedPoint {
                deformation: *def,
                grid,
                solution,
                energy,
                extensions,
            });
        }
        extensions += 1;
        cfg.lower = LowerBound::Fixed(grid.x_min / 10.0);
    }
}
