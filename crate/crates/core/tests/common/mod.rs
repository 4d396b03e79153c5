//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdw_core::quadrature::adaptive;

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Mean and standard error of a randomly shifted Halton estimate over
/// `[0,1)^dim`.
pub fn shifted_halton<F: FnMut(&[f64]) -> f64>(
    dim: usize,
    points: usize,
    shifts: usize,
    seed: u64,
    mut f: F,
) -> (f64, f64) {
    assert!(dim <= PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(shifts);
    let mut u = vec![0.0; dim];
    for _ in 0..shifts {
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let mut sum = 0.0;
        for i in 1..=points as u64 {
            for d in 0..dim {
                u[d] = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
            }
            sum += f(&u);
        }
        means.push(sum / points as f64);
    }
    let m = means.iter().sum::<f64>() / shifts as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (shifts as f64 - 1.0);
    (m, (var / shifts as f64).sqrt())
}

fn disk_point(u: f64, v: f64) -> (f64, f64) {
    let r = u.sqrt();
    let t = 2.0 * PI * v;
    (r * t.cos(), r * t.sin())
}

/// Disk-averaged inverse square distance at axial offset `x`.
pub fn disk_kernel_qmc(x: f64, points: usize, shifts: usize, seed: u64) -> (f64, f64) {
    shifted_halton(4, points, shifts, seed, |u| {
        let (a, b) = disk_point(u[0], u[1]);
        let (c, d) = disk_point(u[2], u[3]);
        1.0 / (x * x + (a - c).powi(2) + (b - d).powi(2))
    })
}

/// Per-spin exchange integral of the unit sphere. With `k' = k + d n`, the
/// inverse square distance cancels the radial Jacobian, leaving
/// `(32 pi^2 / 3) P(k + d n in S)` for `k` in the ball, `d` in `[0, 2]`.
pub fn sphere_exchange_qmc(points: usize, shifts: usize, seed: u64) -> (f64, f64) {
    let (m, se) = shifted_halton(6, points, shifts, seed, |u| {
        let r = u[0].cbrt();
        let ct = 2.0 * u[1] - 1.0;
        let st = (1.0 - ct * ct).sqrt();
        let ph = 2.0 * PI * u[2];
        let k = [r * st * ph.cos(), r * st * ph.sin(), r * ct];
        let d = 2.0 * u[3];
        let cn = 2.0 * u[4] - 1.0;
        let sn = (1.0 - cn * cn).sqrt();
        let pn = 2.0 * PI * u[5];
        let q = [
            k[0] + d * sn * pn.cos(),
            k[1] + d * sn * pn.sin(),
            k[2] + d * cn,
        ];
        if q.iter().map(|c| c * c).sum::<f64>() < 1.0 {
            1.0
        } else {
            0.0
        }
    });
    let scale = 32.0 * PI * PI / 3.0;
    (scale * m, scale * se)
}

/// `pi int_a^b [G(x - t) + sign G(x + t)] f(t) dt` by adaptive quadrature,
/// split at the log singularity.
pub fn operator_reference<F: Fn(f64) -> f64>(x: f64, a: f64, b: f64, sign: f64, f: F) -> f64 {
    use sdw_core::kernel::disk_kernel;
    let tol = 1e-13;
    let mut v = 0.0;
    // integrate in the distance from x so the log singularity sits at s = 0
    if x > a {
        v += adaptive(|s| disk_kernel(s) * f(x - s), 0.0, x - a, 0.0, tol, 20_000).value;
    }
    if b > x {
        v += adaptive(|s| disk_kernel(s) * f(x + s), 0.0, b - x, 0.0, tol, 20_000).value;
    }
    // the reflected kernel varies on the scale x near t = 0
    let mid = (10.0 * x).clamp(a, b);
    v += sign * adaptive(|t| disk_kernel(x + t) * f(t), a, mid, 0.0, tol, 20_000).value;
    v += sign * adaptive(|t| disk_kernel(x + t) * f(t), mid, b, 0.0, tol, 20_000).value;
    PI * v
}

/// Outcome line for an acceptance criterion.
pub struct Verdict {
    pub name: &'static str,
    pub checks: Vec<(String, bool)>,
}

impl Verdict {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    pub fn finish(self) {
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.1)
            .map(|c| c.0.as_str())
            .collect();
        for (what, ok) in &self.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "FAILED" });
        }
        if failed.is_empty() {
            println!("{}: PASS", self.name);
        } else {
            println!(
                "{}: FAIL ({} of {} checks failed)",
                self.name,
                failed.len(),
                self.checks.len()
            );
            panic!("{} failed: {}", self.name, failed.join("; "));
        }
    }
}
