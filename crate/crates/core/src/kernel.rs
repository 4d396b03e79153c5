//! Scaled axial coordinate, the disk interaction kernel, the logarithmic
//! grid and the Nyström discretization of the exchange operators.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{gamma_prime, plateau_scale};
use crate::error::{Result, SdwError};
use crate::params::Deformation;
use crate::quadrature::GaussLegendre;

/// Interaction of two unit disks at axial separation `x`, averaged over both
/// disks. Logarithmic at the origin, `1/x^2` at large separation.
pub fn disk_kernel(x: f64) -> f64 {
    let t = x.abs();
    if t == 0.0 {
        return f64::INFINITY;
    }
    let u = t + (t * t + 4.0).sqrt();
    2.0 * (2.0 / (t * u)).ln_1p() - 4.0 / (u * u)
}

/// `disk_kernel(t) + 2 ln t` for `t >= 0`; finite at 0 with value -1.
pub fn kernel_regular(t: f64) -> f64 {
    let u = t + (t * t + 4.0).sqrt();
    2.0 * (t * u + 2.0).ln() - 2.0 * u.ln() - 4.0 / (u * u)
}

/// `int_0^a disk_kernel(t) dt`.
pub fn kernel_primitive(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let rule = GaussLegendre::new(16);
    // the regular part is smooth on the unit scale
    let panels = a.ceil().min(4096.0) as usize;
    let step = a / panels as f64;
    let mut reg = 0.0;
    for k in 0..panels {
        reg += rule.integrate(k as f64 * step, (k + 1) as f64 * step, kernel_regular);
    }
    -2.0 * (a * a.ln() - a) + reg
}

/// Exchange potential of the unit sphere at distance `k` from its centre.
pub fn sphere_potential(k: f64) -> f64 {
    assert!(k >= 0.0, "distance must be nonnegative");
    if k == 1.0 {
        return 2.0 * PI;
    }
    // ln((1+k)/|1-k|) = 2 artanh(min(k, 1/k))
    let at = if k < 1.0 {
        k.atanh()
    } else {
        (1.0 / k).atanh()
    };
    if k < 1e-8 {
        return 4.0 * PI - 4.0 * PI * k * k / 3.0;
    }
    2.0 * PI + 2.0 * PI * (1.0 - k * k) / k * at
}

/// Kinetic plus single-particle exchange cost in the scaled coordinate,
/// `gamma x - 2 x ln x`.
pub fn gap_function(x: f64, def: &Deformation) -> f64 {
    gap(x, def.gamma)
}

pub(crate) fn gap(x: f64, gamma: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    gamma * x - 2.0 * x * x.ln()
}

/// Lower end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LowerBound {
    /// This many decades below the asymptotic plateau scale.
    BelowPlateau {
        decades: f64,
    },
    Fixed(f64),
}

/// Upper end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UpperBound {
    /// Smallest cut whose neglected tail stays under `tail_tol`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridConfig {
    pub points_per_decade: usize,
    pub lower: LowerBound,
    pub upper: UpperBound,
    pub tail_tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            points_per_decade: 24,
            lower: LowerBound::BelowPlateau { decades: 3.0 },
            upper: UpperBound::Auto,
            tail_tol: 1e-10,
        }
    }
}

pub const MIN_NODE: f64 = 1e-300;
pub const MAX_NODES: usize = 16_384;
const END_ORDER: usize = 6;

/// Nodes uniform in `ln x` with end-corrected trapezoidal weights for
/// `int dx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub points_per_decade: usize,
    /// Spacing in `ln x`.
    pub log_step: f64,
    /// Bound on the dropped mass beyond `x_max`.
    pub tail_bound: f64,
}

impl RadialGrid {
    pub fn log_spaced(x_min: f64, x_max: f64, points_per_decade: usize) -> Result<Self> {
        if points_per_decade < 8 {
            return Err(SdwError::Grid(format!(
                "points_per_decade must be at least 8, got {points_per_decade}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_min < MIN_NODE || x_min >= x_max {
            return Err(SdwError::Grid(format!(
                "need {MIN_NODE:e} <= x_min < x_max < inf, got [{x_min:e}, {x_max:e}]"
            )));
        }
        let decades = (x_max / x_min).log10();
        if !decades.is_finite() {
            return Err(SdwError::Grid(format!(
                "range [{x_min:e}, {x_max:e}] not representable"
            )));
        }
        let n = ((decades * points_per_decade as f64).ceil() as usize).max(4 * END_ORDER);
        if n + 1 > MAX_NODES {
            return Err(SdwError::Grid(format!(
                "{} nodes exceed the dense limit {MAX_NODES}",
                n + 1
            )));
        }
        let (s0, s1) = (x_min.ln(), x_max.ln());
        let h = (s1 - s0) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|k| (s0 + k as f64 * h).exp()).collect();
        nodes[0] = x_min;
        nodes[n] = x_max;

        let mut c = vec![h; n + 1];
        c[0] = 0.5 * h;
        c[n] = 0.5 * h;
        let left: Vec<f64> = (1..=END_ORDER as i32).map(f64::from).collect();
        let right: Vec<f64> = (0..END_ORDER as i32).map(|k| f64::from(1 - k)).collect();
        let a = end_correction(h, &left, true)?;
        let b = end_correction(h, &right, false)?;
        for j in 0..END_ORDER {
            c[j] += h * a[j];
            c[n - j] += h * b[j];
        }
        let weights: Vec<f64> = c.iter().zip(&nodes).map(|(c, x)| c * x).collect();
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(SdwError::Grid("nonpositive quadrature weight".into()));
        }
        Ok(Self {
            nodes,
            weights,
            x_min,
            x_max,
            points_per_decade,
            log_step: h,
            tail_bound: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted inner product `sum w f g`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,weight")?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            writeln!(out, "{x:.11e},{w:.11e}")?;
        }
        Ok(())
    }
}

// Trapezoid end corrections in ln x, exact for exp(m s) over the family
// given. Left corrections sit on nodes 0.., right ones on nodes n, n-1, ...
fn end_correction(h: f64, rates: &[f64], left: bool) -> Result<Vec<f64>> {
    let p = rates.len();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for (r, &m) in rates.iter().enumerate() {
        for (j, a_rj) in a[r].iter_mut().enumerate() {
            let e = if left { m } else { -m };
            *a_rj = h * (e * j as f64 * h).exp();
        }
        b[r] = -if m == 0.0 {
            0.0
        } else if left {
            1.0 / m - h / (m * h).exp_m1() - 0.5 * h
        } else {
            h * (m * h).exp() / (m * h).exp_m1() - 0.5 * h - 1.0 / m
        };
    }
    solve_dense(a, b).ok_or_else(|| SdwError::Grid("singular end-correction system".into()))
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Upper cut for a given tail tolerance: `pi (1/x_max - r) <= tol`.
pub fn auto_cut(r: f64, tail_tol: f64) -> f64 {
    (1.0 / r).min(1.0 / (tail_tol / PI + r))
}

pub fn build_grid(def: &Deformation, cfg: &GridConfig) -> Result<RadialGrid> {
    let x_min = match cfg.lower {
        LowerBound::BelowPlateau { decades } => {
            (plateau_scale(gamma_prime(def.gamma)) * 10f64.powf(-decades)).max(MIN_NODE)
        }
        LowerBound::Fixed(v) => v,
    };
    let limit = 1.0 / def.r;
    let x_max = match cfg.upper {
        UpperBound::Auto => auto_cut(def.r, cfg.tail_tol),
        UpperBound::Fixed(v) => {
            if v > limit * (1.0 + 1e-12) {
                return Err(SdwError::Grid(format!(
                    "x_max = {v:e} beyond the operator limit 1/r = {limit:e}"
                )));
            }
            v.min(limit)
        }
    };
    let tail = (PI * (1.0 / x_max - def.r)).max(0.0);
    // the difference above loses digits when r dominates
    let slack = 8.0 * f64::EPSILON * PI / x_max;
    if tail > cfg.tail_tol + slack {
        return Err(SdwError::Grid(format!(
            "tail bound {tail:e} above tolerance {:e}",
            cfg.tail_tol
        )));
    }
    let mut grid = RadialGrid::log_spaced(x_min, x_max, cfg.points_per_decade)?;
    grid.tail_bound = tail;
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Dense Nyström matrix: `(T f)_i = sum_j matrix[i][j] f_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    n: usize,
    matrix: Vec<f64>,
    sign: Sign,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(f, &mut out);
        out
    }

    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.par_iter_mut()
            .zip(self.matrix.par_chunks(self.n))
            .for_each(|(o, row)| *o = row.iter().zip(f).map(|(a, b)| a * b).sum());
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for row in self.matrix.chunks(self.n) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.11e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorPair {
    pub plus: DiscreteOperator,
    pub minus: DiscreteOperator,
}

// Local cutoff width in grid steps, and its support in widths.
const CUTOFF_STEPS: f64 = 6.0;
const CUTOFF_REACH: f64 = 10.0;
const DYADIC_LEVELS: usize = 64;
// -2 zeta'(-2): neighbour correction for the log singularity.
const LOG_CORRECTION: f64 = 0.060_896_914_116_786_54;
// 2 zeta(-3): same for the |t| kink of the regular part.
const KINK_CORRECTION: f64 = 1.0 / 60.0;
const ROW_CHECK_TOL: f64 = 1e-9;

/// `int G(x_i - x') phi(ln x' - ln x_i) dx'` over the grid range, with a
/// Gaussian cutoff `phi` of width `width` in `ln x`.
fn cutoff_integral(rule: &GaussLegendre, x: f64, lo: f64, hi: f64, width: f64) -> f64 {
    let s = x.ln();
    let reach = CUTOFF_REACH * width;
    let mut total = 0.0;
    for (dir, ext) in [
        (1.0, (hi.ln() - s).min(reach)),
        (-1.0, (s - lo.ln()).min(reach)),
    ] {
        if ext <= 0.0 {
            continue;
        }
        let mut edges: Vec<f64> = (2..=8).rev().map(|k| ext * k as f64 / 8.0).collect();
        let mut e = ext / 4.0;
        for _ in 0..DYADIC_LEVELS {
            e *= 0.5;
            edges.push(e);
        }
        edges.push(0.0);
        for pair in edges.windows(2).rev() {
            total += rule.integrate(pair[1], pair[0], |d| {
                let delta = dir * d;
                let z = delta / width;
                disk_kernel(x * delta.exp_m1()) * (-0.5 * z * z).exp() * x * delta.exp()
            });
        }
    }
    total
}

fn neighbour_correction(t: f64) -> f64 {
    (LOG_CORRECTION - KINK_CORRECTION * t) * (-(0.5 * t).powi(4)).exp()
}

/// Assemble both exchange operators on `grid`.
pub fn assemble_operators(grid: &RadialGrid) -> Result<OperatorPair> {
    let n = grid.len();
    let x = &grid.nodes;
    let w = &grid.weights;
    let width = CUTOFF_STEPS * grid.log_step;
    let reach = (CUTOFF_STEPS * CUTOFF_REACH).ceil() as usize;
    let fine = GaussLegendre::new(16);
    let coarse = GaussLegendre::new(8);

    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x[i];
            let mut m = vec![0.0; n];
            for j in 0..n {
                if j != i {
                    m[j] = w[j] * disk_kernel(xi - x[j]);
                }
            }
            for j in [i.wrapping_sub(1), i + 1] {
                if j < n {
                    m[j] += neighbour_correction((xi - x[j]).abs()) * w[j];
                }
            }
            let singular = cutoff_integral(&fine, xi, grid.x_min, grid.x_max, width);
            let check = cutoff_integral(&coarse, xi, grid.x_min, grid.x_max, width);
            if !singular.is_finite() || (singular - check).abs() > ROW_CHECK_TOL * singular.abs() {
                return Err(SdwError::SingularRow {
                    row: i,
                    x: xi,
                    estimate: (singular - check).abs(),
                });
            }
            let si = xi.ln();
            let lo = i.saturating_sub(reach);
            let hi = (i + reach).min(n - 1);
            let mut local = 0.0;
            for j in lo..=hi {
                if j != i {
                    let z = (x[j].ln() - si) / width;
                    local += m[j] * (-0.5 * z * z).exp();
                }
            }
            m[i] = singular - local;
            let mut plus = vec![0.0; n];
            let mut minus = vec![0.0; n];
            for j in 0..n {
                let direct = PI * m[j];
                let reflected = PI * w[j] * disk_kernel(xi + x[j]);
                plus[j] = direct + reflected;
                minus[j] = if j == i {
                    direct - reflected
                } else {
                    (direct - reflected).max(0.0)
                };
            }
            if !(minus[i] >= 0.0) {
                return Err(SdwError::SingularRow {
                    row: i,
                    x: xi,
                    estimate: minus[i],
                });
            }
            Ok((plus, minus))
        })
        .collect();

    let mut plus = Vec::with_capacity(n * n);
    let mut minus = Vec::with_capacity(n * n);
    for row in rows {
        let (p, m) = row?;
        plus.extend_from_slice(&p);
        minus.extend_from_slice(&m);
    }
    Ok(OperatorPair {
        plus: DiscreteOperator {
            n,
            matrix: plus,
            sign: Sign::Plus,
        },
        minus: DiscreteOperator {
            n,
            matrix: minus,
            sign: Sign::Minus,
        },
    })
}

pub fn assemble_operator(grid: &RadialGrid, sign: Sign) -> Result<DiscreteOperator> {
    let pair = assemble_operators(grid)?;
    Ok(match sign {
        Sign::Plus => pair.plus,
        Sign::Minus => pair.minus,
    })
}
