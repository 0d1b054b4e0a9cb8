//! Shared fixtures: the 2×4 nonnegative bilevel problem and its brute-force
//! solution.
#![allow(dead_code)]

use bilevel::objectives::LinearModel;
use bilevel::sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// `min ‖x‖₁ s.t. x ∈ argmin_{x ≥ 0} ½‖Ax − b‖²` with `A` 2×4 and `b = Ax̂`,
/// `x̂ ≥ 0`.
pub struct Tiny {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Tiny {
    pub fn new(seed: u64) -> Self {
        let mut r = rng(seed);
        let a = uniform_vec(&mut r, 8, -1.0, 1.0);
        let xh = uniform_vec(&mut r, 4, 0.0, 1.0);
        let b = (0..2).map(|i| (0..4).map(|j| a[4 * i + j] * xh[j]).sum()).collect();
        Tiny { a, b }
    }

    /// Rows as separate components.
    pub fn model(&self) -> LinearModel {
        LinearModel::new(CsrMatrix::from_dense(2, 4, &self.a).unwrap(), self.b.clone())
            .unwrap()
            .with_row_partition()
            .unwrap()
    }

    pub fn f0(&self, x: &[f64]) -> f64 {
        (0..2)
            .map(|i| {
                let r: f64 = (0..4).map(|j| self.a[4 * i + j] * x[j]).sum::<f64>() - self.b[i];
                0.5 * r * r
            })
            .sum()
    }

    fn gram(&self, i: usize, j: usize) -> f64 {
        self.a[i] * self.a[j] + self.a[4 + i] * self.a[4 + j]
    }

    fn atb(&self, i: usize) -> f64 {
        self.a[i] * self.b[0] + self.a[4 + i] * self.b[1]
    }

    /// Largest eigenvalue of `AᵀA`, the Lipschitz constant of `∇f0`.
    pub fn lipschitz(&self) -> f64 {
        // Nonzero spectrum of AᵀA equals that of the 2×2 matrix AAᵀ.
        let row = |i: usize, k: usize| (0..4).map(|j| self.a[4 * i + j] * self.a[4 * k + j]).sum::<f64>();
        let (p, q, r) = (row(0, 0), row(0, 1), row(1, 1));
        0.5 * (p + r) + (0.25 * (p - r) * (p - r) + q * q).sqrt()
    }

    /// Optimal value of the nonnegative least-squares problem, by checking
    /// the KKT conditions on every support of size at most two.
    pub fn f0_star(&self) -> f64 {
        let mut best = self.f0(&[0.0; 4]);
        let mut supports: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                supports.push(vec![i, j]);
            }
        }
        for s in supports {
            let x = match s[..] {
                [i] => {
                    let mut x = [0.0; 4];
                    x[i] = self.atb(i) / self.gram(i, i);
                    x
                }
                [i, j] => {
                    let (g11, g12, g22) = (self.gram(i, i), self.gram(i, j), self.gram(j, j));
                    let det = g11 * g22 - g12 * g12;
                    if det.abs() < 1e-14 {
                        continue;
                    }
                    let mut x = [0.0; 4];
                    x[i] = (g22 * self.atb(i) - g12 * self.atb(j)) / det;
                    x[j] = (g11 * self.atb(j) - g12 * self.atb(i)) / det;
                    x
                }
                _ => unreachable!(),
            };
            if x.iter().any(|&v| v < -1e-12) {
                continue;
            }
            let grad: Vec<f64> =
                (0..4).map(|i| (0..4).map(|j| self.gram(i, j) * x[j]).sum::<f64>() - self.atb(i)).collect();
            let kkt = (0..4).all(|i| if s.contains(&i) { grad[i].abs() < 1e-9 } else { grad[i] > -1e-9 });
            if kkt {
                best = best.min(self.f0(&x));
            }
        }
        best
    }

    /// Minimizer of `‖x‖₁` over `{x ≥ 0 : Ax = b}`, by enumerating the
    /// vertices of the polytope.
    pub fn solution(&self) -> (Vec<f64>, f64) {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for i in 0..4 {
            for j in i + 1..4 {
                let (a11, a12, a21, a22) = (self.a[i], self.a[j], self.a[4 + i], self.a[4 + j]);
                let det = a11 * a22 - a12 * a21;
                if det.abs() < 1e-12 {
                    continue;
                }
                let zi = (self.b[0] * a22 - a12 * self.b[1]) / det;
                let zj = (a11 * self.b[1] - a21 * self.b[0]) / det;
                if zi < -1e-12 || zj < -1e-12 {
                    continue;
                }
                let mut x = vec![0.0; 4];
                x[i] = zi.max(0.0);
                x[j] = zj.max(0.0);
                let v = x[i] + x[j];
                if best.as_ref().is_none_or(|b| v < b.1) {
                    best = Some((x, v));
                }
            }
        }
        best.expect("the feasible polytope has a vertex")
    }
}

/// Small noisy Shepp–Logan problem: phantom, projector and data with 10%
/// relative error. Noise is drawn for the unit-intensity head; phantom and
/// data are then scaled by `INTENSITY`.
pub const INTENSITY: f64 = 200.0;

pub struct Simulated {
    pub truth: bilevel::Image,
    pub radon: bilevel::tomo::Radon,
    pub data: bilevel::tomo::Sinogram,
}

impl Simulated {
    pub fn new(side: usize, n_angles: usize, seed: u64) -> Self {
        use bilevel::tomo::*;
        let unit = shepp_logan(side).unwrap();
        let radon = Radon::new(Geometry::half_turn(n_angles, side).unwrap(), side).unwrap();
        let clean = radon.apply(&unit).unwrap();
        let noisy = simulate_poisson(clean.data(), 0.1, seed).unwrap();
        let data = Sinogram::new(*radon.geometry(), noisy.data.iter().map(|v| INTENSITY * v).collect()).unwrap();
        let truth = Phantom::shepp_logan().scaled(INTENSITY).rasterize(side).unwrap();
        Simulated { truth, radon, data }
    }

    pub fn model(&self, subsets: usize) -> LinearModel {
        self.radon.model(&self.data, subsets).unwrap()
    }
}
