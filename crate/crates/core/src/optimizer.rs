//! Total energy at fixed deformation, minimization over `eps`, and scans.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{eps0, eps0_refined, scaled_constant};
use crate::error::{Result, SdwError};
use crate::fermi_gas::delta_e_fg_leading;
use crate::kernel::GridConfig;
use crate::params::Deformation;
use crate::solver::{solve_deformation, SolvedPoint, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerConfig {
    /// Initial bracket is `[seed / f, seed * f]`.
    pub bracket_factor: f64,
    /// Relative tolerance on `eps`.
    pub rel_tol: f64,
    pub max_expansions: usize,
    /// Points of the fallback log scan.
    pub scan_points: usize,
    pub max_eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            bracket_factor: 20.0,
            rel_tol: 1e-3,
            max_expansions: 2,
            scan_points: 20,
            max_eps: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct PipelineConfig {
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub optimizer: OptimizerConfig,
    /// Multiply the SDW energy by `R^4` of the normalized Fermi volume.
    pub volume_scaled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub r_s: f64,
    pub h: f64,
    pub eps_star: f64,
    /// Asymptotic optimum at this `h`.
    pub eps0: f64,
    pub eps_ratio: f64,
    pub delta_e_fg: f64,
    pub delta_e_sdw: f64,
    pub delta_e_total: f64,
    pub scaled_energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub neglected_term: f64,
    pub plateau_ok: bool,
    pub trivial: bool,
    /// Total energy not negative: no SDW resolved at this point.
    pub no_sdw: bool,
    pub grid_points: usize,
    pub warnings: Vec<String>,
}

/// Energy of one deformation; no minimization.
pub fn total_energy(r_s: f64, eps: f64, h: f64, cfg: &PipelineConfig) -> Result<EnergyReport> {
    let def = Deformation::new(r_s, eps, h)?;
    let point = solve_deformation(&def, &cfg.grid, &cfg.solver, cfg.volume_scaled)?;
    Ok(energy_report(&point))
}

/// Summary of an already solved deformation.
pub fn energy_report(point: &SolvedPoint) -> EnergyReport {
    let Deformation { r_s, eps, h, .. } = point.deformation;
    let def = point.deformation;
    let fg = delta_e_fg_leading(&def);
    let sdw = point.energy.delta_e;
    let total = fg + sdw;
    let e0 = eps0(r_s, h);
    let mut warnings = point.energy.warnings.clone();
    if point.solution.trivial {
        warnings.push("amplitude collapsed to the Fermi-gas fixed point".into());
    }
    EnergyReport {
        r_s,
        h,
        eps_star: eps,
        eps0: e0,
        eps_ratio: eps / e0,
        delta_e_fg: fg,
        delta_e_sdw: sdw,
        delta_e_total: total,
        scaled_energy: total * r_s * r_s / eps.powi(3),
        iterations: point.solution.iterations,
        residual: point.solution.residual,
        neglected_term: point.energy.neglected_term,
        plateau_ok: point.solution.plateau_ok,
        trivial: point.solution.trivial,
        no_sdw: !(total < 0.0),
        grid_points: point.grid.len(),
        warnings,
    }
}

struct Memo<'a> {
    r_s: f64,
    h: f64,
    cfg: &'a PipelineConfig,
    seen: Vec<(f64, EnergyReport)>,
}

impl Memo<'_> {
    fn eval(&mut self, ln_eps: f64) -> Result<f64> {
        if let Some((_, r)) = self.seen.iter().find(|(l, _)| *l == ln_eps) {
            return Ok(r.delta_e_total);
        }
        let r = total_energy(self.r_s, ln_eps.exp(), self.h, self.cfg)?;
        let v = r.delta_e_total;
        self.seen.push((ln_eps, r));
        Ok(v)
    }

    fn best(&self) -> Option<&EnergyReport> {
        self.seen.iter().map(|(_, r)| r).min_by(|a, b| {
            a.delta_e_total
                .total_cmp(&b.delta_e_total)
                .then(a.eps_star.total_cmp(&b.eps_star))
        })
    }

    fn samples(&self) -> Vec<(f64, f64)> {
        let mut s: Vec<(f64, f64)> = self
            .seen
            .iter()
            .map(|(l, r)| (l.exp(), r.delta_e_total))
            .collect();
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        s
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

// Golden-section search on [a, b]; returns false if the minimum sits at an edge.
fn golden(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<bool> {
    let fa = f(a)?;
    let fb = f(b)?;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let interior = fc.min(fd) < fa.min(fb);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(interior)
}

/// Minimize the total energy over `eps` at fixed `(r_s, h)`: golden-section
/// search in `ln eps` around the refined asymptotic seed.
pub fn optimize_epsilon(r_s: f64, h: f64, cfg: &PipelineConfig) -> Result<EnergyReport> {
    if !(0.005..=6.0).contains(&r_s) {
        return Err(SdwError::Domain(format!(
            "r_s = {r_s} outside the supported range [0.005, 6]"
        )));
    }
    Deformation::new(r_s, 0.5, h)?;
    let oc = &cfg.optimizer;
    if !(oc.bracket_factor > 1.0 && oc.rel_tol > 0.0 && oc.max_eps > 0.0 && oc.max_eps < 1.0) {
        return Err(SdwError::Domain(format!(
            "invalid optimizer settings {oc:?}"
        )));
    }
    let mut memo = Memo {
        r_s,
        h,
        cfg,
        seen: Vec::new(),
    };
    let seed = eps0_refined(r_s, h).ln();
    let half = oc.bracket_factor.ln();
    let top = oc.max_eps.ln();
    let (mut lo, mut hi) = (seed - half, (seed + half).min(top));
    let tol = oc.rel_tol;

    let mut found = false;
    for attempt in 0..=oc.max_expansions {
        let ok = golden(|l| memo.eval(l), lo, hi, tol).unwrap_or(false);
        let best = memo.best().map(|r| r.eps_star.ln()).unwrap_or(seed);
        let width = hi - lo;
        let at_low = best - lo < 2.0 * tol;
        let at_high = hi - best < 2.0 * tol && hi < top;
        if ok && !at_low && !at_high {
            found = true;
            break;
        }
        if attempt == oc.max_expansions {
            break;
        }
        if at_high {
            lo = hi - 0.5 * width;
            hi = (hi + width).min(top);
        } else {
            hi = lo + 0.5 * width;
            lo -= width;
        }
    }

    if !found {
        // not unimodal on the bracket: coarse scan, then refine around its best
        let n = oc.scan_points.max(3);
        let (a, b) = (seed - half, (seed + half).min(top));
        let grid: Vec<f64> = (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect();
        let mut vals = Vec::with_capacity(n);
        for &l in &grid {
            vals.push(memo.eval(l).unwrap_or(f64::INFINITY));
        }
        let k = (0..n)
            .min_by(|&i, &j| vals[i].total_cmp(&vals[j]))
            .unwrap_or(0);
        if !vals[k].is_finite() || k == 0 || k == n - 1 {
            return Err(SdwError::Bracket {
                message: format!("no interior minimum for r_s = {r_s}, h = {h}"),
                samples: memo.samples(),
            });
        }
        golden(|l| memo.eval(l), grid[k - 1], grid[k + 1], tol)?;
    }
    memo.best().cloned().ok_or_else(|| SdwError::Bracket {
        message: "no successful evaluation".into(),
        samples: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HInfluence {
    pub r_s: f64,
    /// `dE(h = 1/2) / dE(h = 0)` at the respective optima.
    pub energy_ratio: f64,
    pub eps_ratio: f64,
    pub half: EnergyReport,
    pub zero: EnergyReport,
}

pub fn h_influence(r_s: f64, cfg: &PipelineConfig) -> Result<HInfluence> {
    let half = optimize_epsilon(r_s, 0.5, cfg)?;
    let zero = optimize_epsilon(r_s, 0.0, cfg)?;
    Ok(HInfluence {
        r_s,
        energy_ratio: half.delta_e_total / zero.delta_e_total,
        eps_ratio: half.eps_star / zero.eps_star,
        half,
        zero,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub r_s: f64,
    pub h: f64,
    pub eps0: f64,
    /// Asymptotic `dE r_s^2 / eps^3`.
    pub scaled_asymptotic: f64,
    pub result: std::result::Result<EnergyReport, SdwError>,
}

/// Optimize every `(r_s, h)` pair. Rows are independent and come back
/// sorted by `r_s`, then `h`, with input order breaking ties.
pub fn scan(r_s_list: &[f64], h_list: &[f64], cfg: &PipelineConfig) -> Result<Vec<ScanRow>> {
    if r_s_list.is_empty() || h_list.is_empty() {
        return Err(SdwError::Domain(
            "scan needs nonempty r_s and h lists".into(),
        ));
    }
    let mut pairs: Vec<(f64, f64)> = r_s_list
        .iter()
        .flat_map(|&r| h_list.iter().map(move |&h| (r, h)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs
        .par_iter()
        .map(|&(r_s, h)| ScanRow {
            r_s,
            h,
            eps0: eps0(r_s, h),
            scaled_asymptotic: scaled_constant(h),
            result: optimize_epsilon(r_s, h, cfg),
        })
        .collect())
}
