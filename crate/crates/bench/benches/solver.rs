use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sdw_bench::{deformation_at, problem};
use sdw_core::fermi_gas::{delta_e_fg_quadrature, QuadratureSettings};
use sdw_core::kernel::{assemble_operators, build_grid, GridConfig};
use sdw_core::solver::{solve_fixed_point, SolverConfig};
use sdw_core::Deformation;

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for r_s in [1.0, 0.01] {
        let grid = build_grid(&deformation_at(r_s), &GridConfig::default()).unwrap();
        g.bench_function(format!("r_s={r_s} n={}", grid.len()), |b| {
            b.iter(|| assemble_operators(black_box(&grid)).unwrap())
        });
    }
    g.finish();
}

fn fixed_point(c: &mut Criterion) {
    let mut g = c.benchmark_group("fixed_point");
    for r_s in [3.0, 0.1] {
        let p = problem(r_s);
        for extrapolate in [true, false] {
            let cfg = SolverConfig {
                extrapolate,
                ..SolverConfig::default()
            };
            g.bench_function(format!("r_s={r_s} extrapolate={extrapolate}"), |b| {
                b.iter(|| solve_fixed_point(&p.grid, &p.gap, &p.ops.plus, black_box(&cfg)).unwrap())
            });
        }
    }
    g.finish();
}

fn fermi_gas(c: &mut Criterion) {
    let mut g = c.benchmark_group("fermi_gas");
    g.sample_size(10);
    let def = Deformation::new(4.0, 0.1, 0.5).unwrap();
    let q = QuadratureSettings::default();
    g.bench_function("quadrature r_s=4 eps=0.1", |b| {
        b.iter(|| delta_e_fg_quadrature(black_box(&def), &q).unwrap())
    });
    g.finish();
}

criterion_group!(benches, assembly, fixed_point, fermi_gas);
criterion_main!(benches);
