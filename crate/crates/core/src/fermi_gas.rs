//! Fermi-gas energy of the deformed occupied volume: the leading-order
//! closed form and a direct axisymmetric quadrature used as its oracle.
//!
//! The deformed volume is the unit sphere with region `A` (cylinder outside
//! the sphere) added and region `B` (cap outside the cylinder) removed, so
//! only the small regions need numerical work.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SdwError};
use crate::kernel::sphere_potential;
use crate::params::{constants, Deformation};
use crate::quadrature::GaussLegendre;

/// Leading order in `eps`: `(2 pi^2 a_V eps^3 / r_s) [alpha (gamma - 1) - 1/9 + h]`.
pub fn delta_e_fg_leading(def: &Deformation) -> f64 {
    2.0 * PI * PI * constants().a_v * def.eps.powi(3) / def.r_s
        * (def.alpha * (def.gamma - 1.0) - 1.0 / 9.0 + def.h)
}

/// Height minimizing the leading-order cost.
pub fn optimal_h(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(SdwError::Domain(format!(
            "optimal h needs gamma > 1, got {gamma}"
        )));
    }
    Ok(0.5 - 1.0 / (4.0 * (gamma - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSettings {
    /// Gauss-Legendre points per panel; the error estimate reruns with four fewer.
    pub order: usize,
    /// Uniform panels per direction before end grading.
    pub axial_panels: usize,
    pub radial_panels: usize,
    /// Geometric grading levels at region boundaries.
    pub depth: usize,
    /// Grading levels toward the coincidence point in the potential.
    pub refine_depth: usize,
    pub ratio: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            order: 12,
            axial_panels: 1,
            radial_panels: 1,
            depth: 8,
            refine_depth: 16,
            ratio: 0.2,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureSettings {
    fn validate(&self) -> Result<()> {
        if self.order < 6
            || self.axial_panels == 0
            || self.radial_panels == 0
            || !(self.ratio > 0.0 && self.ratio < 1.0)
            || !(self.rel_tol > 0.0 && self.rel_tol < 1.0)
        {
            return Err(SdwError::Domain(format!(
                "invalid quadrature settings {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FgEnergyBreakdown {
    pub kinetic: f64,
    pub exchange: f64,
    pub total: f64,
    pub k_fg: f64,
    pub v_fg: f64,
    /// Estimated absolute errors of `k_fg` and `v_fg`.
    pub k_error: f64,
    pub v_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FgDifference {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    Zero,
    Const(f64),
    Sphere,
}

impl Edge {
    fn at(self, z: f64) -> f64 {
        match self {
            Edge::Zero => 0.0,
            Edge::Const(r) => r,
            Edge::Sphere => (1.0 - z * z).max(0.0).sqrt(),
        }
    }
}

/// Axisymmetric region `z_lo < z < z_hi`, `inner(z) < rho < outer(z)`.
#[derive(Debug, Clone, Copy)]
struct Region {
    z_lo: f64,
    z_hi: f64,
    inner: Edge,
    outer: Edge,
}

// Nodes and weights on [a, b]: `pieces` uniform panels, the first graded
// toward a and the last toward b.
fn graded(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    pieces: usize,
    depth: usize,
    ratio: f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if b <= a {
        return out;
    }
    let pieces = pieces.max(1) * 2;
    let width = (b - a) / pieces as f64;
    for p in 0..pieces {
        let lo = a + p as f64 * width;
        let hi = if p + 1 == pieces { b } else { lo + width };
        if p == 0 {
            push_toward(rule, &mut out, lo, hi, true, depth, ratio);
        } else if p + 1 == pieces {
            push_toward(rule, &mut out, lo, hi, false, depth, ratio);
        } else {
            out.extend(rule.mapped(lo, hi));
        }
    }
    out
}

fn push_toward(
    rule: &GaussLegendre,
    out: &mut Vec<(f64, f64)>,
    a: f64,
    b: f64,
    at_a: bool,
    depth: usize,
    ratio: f64,
) {
    let len = b - a;
    let mut e = 1.0;
    let mut edges = vec![1.0];
    for _ in 0..depth {
        e *= ratio;
        edges.push(e);
    }
    edges.push(0.0);
    for pair in edges.windows(2).rev() {
        let (u, v) = (pair[1], pair[0]);
        let (lo, hi) = if at_a {
            (a + u * len, a + v * len)
        } else {
            (b - v * len, b - u * len)
        };
        out.extend(rule.mapped(lo, hi));
    }
}

// Antiderivative in w = rho'^2 of the azimuthally integrated inverse square
// distance, with y = w + c^2 - rho^2.
fn lambda(w: f64, rho: f64, c: f64) -> f64 {
    let y = w + c * c - rho * rho;
    let a2 = 4.0 * rho * rho * c * c;
    let s = (y * y + a2).sqrt();
    if y >= 0.0 {
        (y + s).ln()
    } else {
        a2.ln() - (s - y).ln()
    }
}

// Grading levels needed to resolve a feature of width `scale` on a span.
fn depth_for(scale: f64, span: f64, q: &QuadratureSettings) -> usize {
    let levels = ((0.1 * scale / span).max(1e-300).ln() / q.ratio.ln()).ceil();
    (levels.max(2.0) as usize).min(q.refine_depth)
}

struct Engine<'a> {
    rule: &'a GaussLegendre,
    q: &'a QuadratureSettings,
}

impl Engine<'_> {
    /// `int_Q dk' / |k - k'|^2` at `k = (rho, z)`.
    fn potential(&self, reg: &Region, rho: f64, z: f64) -> f64 {
        if reg.z_hi <= reg.z_lo {
            return 0.0;
        }
        let slab = |zp: f64, c: f64| {
            let (lo, hi) = (reg.inner.at(zp), reg.outer.at(zp));
            if hi <= lo {
                0.0
            } else {
                lambda(hi * hi, rho, c) - lambda(lo * lo, rho, c)
            }
        };
        let q = self.q;
        let inside = z > reg.z_lo && z < reg.z_hi;
        let mut total = 0.0;
        for dir in [-1.0, 1.0] {
            // offsets c from z along this direction, z' = z + dir * c
            let (c0, c1) = if dir > 0.0 {
                ((reg.z_lo - z).max(0.0), reg.z_hi - z)
            } else {
                ((z - reg.z_hi).max(0.0), z - reg.z_lo)
            };
            if c1 <= c0 {
                continue;
            }
            let start_depth = if inside {
                q.refine_depth
            } else {
                depth_for(c0, c1 - c0, q)
            };
            // breakpoints where a spherical edge passes through radius rho
            let mut marks: Vec<(f64, usize)> = vec![(c0, start_depth)];
            if rho < 1.0 {
                let zs = (1.0 - rho * rho).sqrt();
                for edge in [reg.inner, reg.outer] {
                    if matches!(edge, Edge::Sphere) {
                        for zc in [zs, -zs] {
                            let c = dir * (zc - z);
                            if c > c0 && c < c1 {
                                marks.push((c, depth_for(rho * c, c1 - c0, q)));
                            }
                        }
                    }
                }
            }
            marks.sort_by(|a, b| a.0.total_cmp(&b.0));
            marks.push((c1, q.depth));
            let mut nodes = Vec::new();
            for pair in marks.windows(2) {
                let ((a, da), (b, db)) = (pair[0], pair[1]);
                if b <= a {
                    continue;
                }
                let mid = 0.5 * (a + b);
                push_toward(self.rule, &mut nodes, a, mid, true, da, q.ratio);
                push_toward(self.rule, &mut nodes, mid, b, false, db, q.ratio);
            }
            for (c, w) in nodes {
                total += w * slab(z + dir * c, c);
            }
        }
        PI * total
    }

    /// `int_Q f(rho, z) dk`; rows in z are evaluated in parallel and summed
    /// in a fixed order.
    fn integrate<F>(&self, reg: &Region, f: F) -> f64
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let zs = graded(
            self.rule,
            reg.z_lo,
            reg.z_hi,
            self.q.axial_panels,
            self.q.depth,
            self.q.ratio,
        );
        let rows: Vec<f64> = zs
            .par_iter()
            .map(|&(z, wz)| {
                let (lo, hi) = (reg.inner.at(z), reg.outer.at(z));
                if hi <= lo {
                    return 0.0;
                }
                let mut s = 0.0;
                for (rho, wr) in graded(
                    self.rule,
                    lo,
                    hi,
                    self.q.radial_panels,
                    self.q.depth,
                    self.q.ratio,
                ) {
                    s += wr * rho * f(rho, z);
                }
                wz * s
            })
            .collect();
        2.0 * PI * rows.iter().sum::<f64>()
    }

    /// Per-spin corrections of the deformed volume relative to the sphere:
    /// `(K - 4 pi / 5, V - 4 pi^2)`.
    fn corrections(&self, def: &Deformation) -> (f64, f64) {
        let z0 = 1.0 - def.eps;
        let z1 = z0 + def.h * def.eps;
        let a = Region {
            z_lo: z0,
            z_hi: z1,
            inner: Edge::Sphere,
            outer: Edge::Const(def.r),
        };
        let b = Region {
            z_lo: z1,
            z_hi: 1.0,
            inner: Edge::Zero,
            outer: Edge::Sphere,
        };
        let k2 = |rho: f64, z: f64| rho * rho + z * z;
        let dk = self.integrate(&a, k2) - self.integrate(&b, k2);
        let vs = |rho: f64, z: f64| sphere_potential((rho * rho + z * z).sqrt());
        let dv = self.integrate(&a, vs) - self.integrate(&b, vs);
        let wd = |rho: f64, z: f64| self.potential(&a, rho, z) - self.potential(&b, rho, z);
        let dd = self.integrate(&a, wd) - self.integrate(&b, wd);
        (dk, 2.0 * dv + dd)
    }

    fn sphere(&self) -> (f64, f64) {
        let s = Region {
            z_lo: -1.0,
            z_hi: 1.0,
            inner: Edge::Zero,
            outer: Edge::Sphere,
        };
        let k = self.integrate(&s, |rho, z| rho * rho + z * z);
        let v = self.integrate(&s, |rho, z| self.potential(&s, rho, z));
        (k, v)
    }
}

fn with_rules<T>(q: &QuadratureSettings, run: impl Fn(&Engine) -> T) -> (T, T) {
    let fine = GaussLegendre::new(q.order);
    let coarse = GaussLegendre::new(q.order - 4);
    let a = run(&Engine { rule: &fine, q });
    let b = run(&Engine { rule: &coarse, q });
    (a, b)
}

/// Kinetic and exchange integrals of the unit sphere (both spins), by the
/// same quadrature as the deformed case, without using the sphere potential.
pub fn sphere_integrals(q: &QuadratureSettings) -> Result<FgEnergyBreakdown> {
    q.validate()?;
    let ((k, v), (kc, vc)) = with_rules(q, |e| e.sphere());
    Ok(breakdown(
        1.0,
        1.0,
        2.0 * k,
        2.0 * v,
        2.0 * (k - kc).abs(),
        2.0 * (v - vc).abs(),
    ))
}

fn breakdown(
    r_s: f64,
    scale: f64,
    k_fg: f64,
    v_fg: f64,
    k_error: f64,
    v_error: f64,
) -> FgEnergyBreakdown {
    let c = constants();
    let kinetic = c.a_k * scale.powi(5) * k_fg / (r_s * r_s);
    let exchange = -c.a_v * scale.powi(4) * v_fg / r_s;
    FgEnergyBreakdown {
        kinetic,
        exchange,
        total: kinetic + exchange,
        k_fg,
        v_fg,
        k_error,
        v_error,
    }
}

/// Kinetic and exchange integrals of the deformed volume (both spins), with
/// the volume normalization applied to the energies.
pub fn fg_integrals_quadrature(
    def: &Deformation,
    q: &QuadratureSettings,
) -> Result<FgEnergyBreakdown> {
    q.validate()?;
    let ((dk, dv), (dkc, dvc)) = with_rules(q, |e| e.corrections(def));
    let k_fg = 2.0 * (4.0 * PI / 5.0 + dk);
    let v_fg = 2.0 * (4.0 * PI * PI + dv);
    let out = breakdown(
        def.r_s,
        def.volume_scale,
        k_fg,
        v_fg,
        2.0 * (dk - dkc).abs(),
        2.0 * (dv - dvc).abs(),
    );
    let worst = (out.k_error / out.k_fg).max(out.v_error / out.v_fg);
    if worst > q.rel_tol {
        return Err(SdwError::Quadrature {
            what: "Fermi-gas integrals".into(),
            estimate: worst,
            target: q.rel_tol,
        });
    }
    Ok(out)
}

/// Smallest deformation for which the quadrature difference is trusted.
pub const MIN_QUADRATURE_EPS: f64 = 0.02;

/// `E_FG(deformed) - E_FG(sphere)` by quadrature. Only the regions where the
/// two volumes differ are integrated numerically, so the sphere parts cancel
/// exactly.
pub fn delta_e_fg_quadrature(def: &Deformation, q: &QuadratureSettings) -> Result<FgDifference> {
    if def.eps < MIN_QUADRATURE_EPS {
        return Err(SdwError::Domain(format!(
            "quadrature needs eps >= {MIN_QUADRATURE_EPS}, got {}; use the leading-order form",
            def.eps
        )));
    }
    q.validate()?;
    let c = constants();
    let ((dk, dv), (dkc, dvc)) = with_rules(q, |e| e.corrections(def));
    let r = def.volume_scale;
    let energy = |dk: f64, dv: f64| {
        let k_fg = 2.0 * (4.0 * PI / 5.0 + dk);
        let v_fg = 2.0 * (4.0 * PI * PI + dv);
        let deformed =
            c.a_k * r.powi(5) * k_fg / (def.r_s * def.r_s) - c.a_v * r.powi(4) * v_fg / def.r_s;
        let sphere = c.a_k * 8.0 * PI / 5.0 / (def.r_s * def.r_s) - c.a_v * 8.0 * PI * PI / def.r_s;
        deformed - sphere
    };
    let value = energy(dk, dv);
    let error = (value - energy(dkc, dvc)).abs();
    if error > 0.1 * value.abs() {
        return Err(SdwError::Quadrature {
            what: "Fermi-gas energy difference".into(),
            estimate: error,
            target: 0.1 * value.abs(),
        });
    }
    Ok(FgDifference { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn leading_order_example() {
        let def = Deformation::new(1.0, 0.01, 0.5).unwrap();
        let v = delta_e_fg_leading(&def);
        assert!((v - 3.57e-7).abs() <= 0.02 * 3.57e-7, "{v}");
    }

    #[test]
    fn leading_order_is_cubic() {
        let a = Deformation::new(1.0, 1e-6, 0.5).unwrap();
        let b = Deformation::new(1.0, 1e-7, 0.5).unwrap();
        let ra = delta_e_fg_leading(&a) / 1e-18;
        let rb = delta_e_fg_leading(&b) / 1e-21;
        assert!(ra > 0.0 && rb > 0.0);
        // ln(2/eps) drift only
        assert!((ra / rb - 1.0).abs() < 0.1);
    }

    #[test]
    fn flat_top_costs_four_times_more() {
        let r_s = 1e-4;
        let zero = Deformation::new(r_s, 1e-3, 0.0).unwrap();
        let half = Deformation::new(r_s, 1e-3, 0.5).unwrap();
        let ratio = delta_e_fg_leading(&zero) / delta_e_fg_leading(&half);
        assert!((ratio - 4.0).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn scaling_through_gamma() {
        // equal gamma from two (r_s, eps) pairs
        let a = Deformation::new(1.0, 1e-3, 0.3).unwrap();
        let eps_b: f64 = 1e-4;
        let target = a.gamma - (2.0 / eps_b).ln();
        let r_s_b = constants().ratio_kv / (PI * target);
        let b = Deformation::new(r_s_b, eps_b, 0.3).unwrap();
        assert_relative_eq!(a.gamma, b.gamma, max_relative = 1e-13);
        assert_relative_eq!(
            delta_e_fg_leading(&a) * a.r_s / 1e-9,
            delta_e_fg_leading(&b) * b.r_s / 1e-12,
            max_relative = 1e-12
        );
    }

    #[test]
    fn argmin_matches_optimal_h() {
        let def = Deformation::new(0.5, 1e-3, 0.5).unwrap();
        let best = (0..=1000)
            .map(|k| k as f64 / 1000.0)
            .min_by(|&x, &y| {
                let ex = delta_e_fg_leading(&Deformation::new(0.5, 1e-3, x).unwrap());
                let ey = delta_e_fg_leading(&Deformation::new(0.5, 1e-3, y).unwrap());
                ex.total_cmp(&ey)
            })
            .unwrap();
        assert!((best - optimal_h(def.gamma).unwrap()).abs() <= 1e-3);
    }

    #[test]
    fn optimal_h_values() {
        assert_eq!(optimal_h(2.0).unwrap(), 0.25);
        assert!((optimal_h(1e12).unwrap() - 0.5).abs() < 1e-11);
        assert!(optimal_h(1.0).is_err());
        let def = Deformation::new(4.0, 0.1, 0.5).unwrap();
        let h = optimal_h(def.gamma).unwrap();
        assert!((0.35..=0.5).contains(&h), "{h}");
    }

    #[test]
    fn lambda_branches_agree() {
        // both forms of the antiderivative near y = 0
        for (w, rho, c) in [(0.25, 0.5, 0.1), (0.2501, 0.5, 0.01), (0.2499, 0.5, 0.01)] {
            let y: f64 = w + c * c - rho * rho;
            let a2 = 4.0 * rho * rho * c * c;
            let direct = (y + (y * y + a2).sqrt()).ln();
            assert_relative_eq!(lambda(w, rho, c), direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn potential_of_sphere() {
        let q = QuadratureSettings::default();
        let rule = GaussLegendre::new(q.order);
        let e = Engine { rule: &rule, q: &q };
        let s = Region {
            z_lo: -1.0,
            z_hi: 1.0,
            inner: Edge::Zero,
            outer: Edge::Sphere,
        };
        for k in [0.0, 0.3, 0.9, 0.999, 0.999_999, 1.0, 1.001, 1.2, 3.0] {
            for th in [0.1f64, 0.7, 1.3] {
                let (rho, z) = (k * th.sin(), k * th.cos());
                assert_relative_eq!(
                    e.potential(&s, rho, z),
                    sphere_potential(k),
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn region_volume() {
        // integrating 1 over the cylinder-minus-sphere region
        let q = QuadratureSettings::default();
        let rule = GaussLegendre::new(q.order);
        let e = Engine { rule: &rule, q: &q };
        let (eps, h) = (0.1, 0.6);
        let z0: f64 = 1.0 - eps;
        let r = (1.0 - z0 * z0).sqrt();
        let a = Region {
            z_lo: z0,
            z_hi: z0 + h * eps,
            inner: Edge::Sphere,
            outer: Edge::Const(r),
        };
        let got = e.integrate(&a, |_, _| 1.0);
        let want = adaptive(
            |z: f64| PI * (r * r - (1.0 - z * z)),
            z0,
            z0 + h * eps,
            1e-16,
            1e-14,
            100,
        )
        .value;
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn quadrature_refuses_small_eps() {
        let def = Deformation::new(4.0, 0.01, 0.5).unwrap();
        assert!(matches!(
            delta_e_fg_quadrature(&def, &QuadratureSettings::default()),
            Err(SdwError::Domain(_))
        ));
    }

    proptest! {
        #[test]
        fn deformation_costs_energy(r_s in 1e-3f64..6.0, eps in 1e-6f64..0.5, h in 0.0f64..=1.0) {
            prop_assert!(delta_e_fg_leading(&Deformation::new(r_s, eps, h).unwrap()) > 0.0);
        }
    }

    #[test]
    fn refinement_within_estimate() {
        let def = Deformation::new(4.0, 0.2, 0.5).unwrap();
        let coarse = QuadratureSettings::default();
        let fine = QuadratureSettings {
            axial_panels: 2,
            radial_panels: 2,
            ..coarse
        };
        let a = fg_integrals_quadrature(&def, &coarse).unwrap();
        let b = fg_integrals_quadrature(&def, &fine).unwrap();
        assert!(
            (a.k_fg - b.k_fg).abs() <= a.k_error.max(1e-14 * a.k_fg),
            "{} vs {}",
            (a.k_fg - b.k_fg).abs(),
            a.k_error
        );
        assert!(
            (a.v_fg - b.v_fg).abs() <= a.v_error,
            "{} vs {}",
            (a.v_fg - b.v_fg).abs(),
            a.v_error
        );
    }
}
