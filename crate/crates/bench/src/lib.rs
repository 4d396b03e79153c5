//! Benchmark fixtures.

use sdw_core::asymptotics::eps0;
use sdw_core::kernel::{assemble_operators, build_grid, GridConfig, OperatorPair, RadialGrid};
use sdw_core::solver::gap_vector;
use sdw_core::Deformation;

/// Deformation at the asymptotic optimum for `h = 1/2`.
pub fn deformation_at(r_s: f64) -> Deformation {
    Deformation::new(r_s, eps0(r_s, 0.5), 0.5).expect("valid deformation")
}

pub struct Problem {
    pub grid: RadialGrid,
    pub ops: OperatorPair,
    pub gap: Vec<f64>,
}

pub fn problem(r_s: f64) -> Problem {
    let def = deformation_at(r_s);
    let grid = build_grid(&def, &GridConfig::default()).expect("grid");
    let ops = assemble_operators(&grid).expect("operators");
    let gap = gap_vector(&grid, &def);
    Problem { grid, ops, gap }
}
