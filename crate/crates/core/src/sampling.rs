//! Deterministic samplers: quasi-uniform points on spheres and seeded
//! random matrices.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const DEFAULT_SEED: u64 = 42;

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Additive recurrence constants `1/φ_d^i` of the generalized golden ratio
/// `φ_d^{d+1} = φ_d + 1`.
fn kronecker_alphas(d: usize) -> Vec<f64> {
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|i| phi.powi(-(i as i32)).fract()).collect()
}

/// `count` unit vectors in `ℝ^n`, quasi-uniform on the sphere.
///
/// A Kronecker low-discrepancy sequence in the unit cube is pushed through
/// Box–Muller and normalized. The sequence is fixed, so repeated calls
/// return identical points.
pub fn sphere_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    let m = n + n % 2;
    let alphas = kronecker_alphas(m);
    let mut out = Vec::with_capacity(count);
    let mut k = 1u64;
    while out.len() < count {
        let u: Vec<f64> = alphas
            .iter()
            .map(|a| (0.5 + k as f64 * a).fract().max(1e-300))
            .collect();
        k += 1;
        let mut g = Vec::with_capacity(m);
        for pair in u.chunks(2) {
            let r = (-2.0 * pair[0].ln()).sqrt();
            let th = std::f64::consts::TAU * pair[1];
            g.push(r * th.cos());
            g.push(r * th.sin());
        }
        g.truncate(n);
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(g.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed element of `SO(n)`.
pub fn random_rotation<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let qr = gaussian_matrix(rng, n, n).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}
