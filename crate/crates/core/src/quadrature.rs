//! One-dimensional quadrature building blocks.

use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * t);
        }
        sum * half
    }

    /// Mapped nodes and weights for [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(t, w)| (mid + half * t, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel edges on `[0, len]`, listed from `len` down to 0, refined
/// geometrically toward 0 by `ratio` for `depth` levels. The last panel
/// reaches 0 exactly.
pub fn graded_edges(len: f64, ratio: f64, depth: usize) -> Vec<f64> {
    let mut edges = Vec::with_capacity(depth + 2);
    let mut e = len;
    edges.push(e);
    for _ in 0..depth {
        e *= ratio;
        edges.push(e);
    }
    edges.push(0.0);
    edges
}

/// Integrate `f(d)` for `d` in `[0, len]` with panels graded toward `d = 0`.
pub fn integrate_toward_zero<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    len: f64,
    ratio: f64,
    depth: usize,
    mut f: F,
) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let edges = graded_edges(len, ratio, depth);
    let mut sum = 0.0;
    // Smallest panels first keeps the summation order stable.
    for pair in edges.windows(2).rev() {
        sum += rule.integrate(pair[1], pair[0], &mut f);
    }
    sum
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive Gauss-Kronrod (7/15) integration with interval bisection.
/// Handles integrable endpoint singularities by repeated refinement.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Adaptive {
    if a == b {
        return Adaptive {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let (v, e) = kronrod15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let value: f64 = parts.iter().map(|p| p.2).sum();
        let error: f64 = parts.iter().map(|p| p.3).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Adaptive {
                value,
                error,
                converged: true,
            };
        }
        if parts.len() >= max_intervals {
            return Adaptive {
                value,
                error,
                converged: false,
            };
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| {
                if p.3 > best.1 {
                    (i, p.3)
                } else {
                    best
                }
            });
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval exhausted in floating point.
            let value: f64 = parts.iter().map(|p| p.2).sum::<f64>() + kronrod15(&mut f, lo, hi).0;
            return Adaptive {
                value,
                error,
                converged: false,
            };
        }
        let (v1, e1) = kronrod15(&mut f, lo, mid);
        let (v2, e2) = kronrod15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        for n in [1, 2, 5, 12, 16, 24] {
            let rule = GaussLegendre::new(n);
            for p in 0..(2 * n) {
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(p as i32));
                let want = if p % 2 == 1 {
                    0.0
                } else {
                    2.0 / (p as f64 + 1.0)
                };
                assert!((got - want).abs() < 1e-14, "n={n} p={p} {got} {want}");
            }
            let s: f64 = rule.weights().iter().sum();
            assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn graded_log_integral() {
        let rule = GaussLegendre::new(16);
        let v = integrate_toward_zero(&rule, 1.0, 0.5, 60, |d| d.ln());
        assert_relative_eq!(v, -1.0, epsilon = 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = adaptive(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12, 1e-12, 2000);
        assert!(r.converged);
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-10);
        let r = adaptive(|x| x.ln(), 0.0, 2.0, 1e-13, 1e-13, 2000);
        assert_relative_eq!(r.value, 2.0 * 2f64.ln() - 2.0, epsilon = 1e-11);
    }

    #[test]
    fn azimuthal_identity() {
        // int_0^{2pi} dphi / (A - B cos phi) = 2 pi / sqrt(A^2 - B^2)
        let (a, b) = (3.0, 1.0);
        let r = adaptive(
            |p: f64| 1.0 / (a - b * p.cos()),
            0.0,
            2.0 * PI,
            1e-14,
            1e-14,
            200,
        );
        assert!((r.value - 2.0 * PI / 8f64.sqrt()).abs() < 1e-10);
    }
}
