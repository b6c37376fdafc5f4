//! Example generators: the revolved parabola crossing a plane, a product
//! configuration with a prescribed fiber twist, and random gauges.

use std::f64::consts::PI;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::homotopy::{GridDims, HomotopyData, NodeRecord};
use super::{c, fiber_realize, unit, unitary_fiber_frame, CMat};
use crate::cayley::{cross_into, Dim};
use crate::{Error, Result};

/// Largest admissible offset; keeps the inner circle away from the axis.
pub const RHO_MAX: f64 = 0.5;
const BULGE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filling {
    /// `u = (r cos z, r sin z, (1 − t)h(r))`.
    Linear,
    /// Linear filling plus a vertical `t(1 − t)·sin(πτ)·sin z` bump.
    Bulged,
}

#[derive(Debug, Clone)]
pub struct ParabolaExample {
    pub rho: f64,
    /// Radii of the intersection circles in the plane `z = 0`.
    pub radii: Vec<f64>,
    /// Homotopy from the inner to the outer circle, present for `ρ > 0`.
    pub data: Option<HomotopyData>,
}

fn cross(dim: Dim, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dim.n()];
    cross_into(dim, a, b, &mut out);
    out
}

fn embed(dim: Dim, v: [f64; 3]) -> Vec<f64> {
    let mut out = vec![0.0; dim.n()];
    out[..3].copy_from_slice(&v);
    out
}

fn axis(dim: Dim, i: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim.n()];
    out[i - 1] = 1.0;
    out
}

/// Marked plane `TΣ ∩ v^⊥` for a surface with unit normal `nrm` inside
/// `span{e1, e2, e3}`. In 7-D the surface is thickened by `span{h, nrm × h}`.
fn marks(dim: Dim, nrm: &[f64], vhat: &[f64], h: usize) -> Vec<Vec<f64>> {
    let mut m = vec![cross(dim, nrm, vhat)];
    if dim == Dim::Seven {
        let hv = axis(dim, h);
        m.push(cross(dim, nrm, &hv));
        m.push(hv);
    }
    m
}

/// The paraboloid `z = (r − 1)² − ρ` against the plane `z = 0`.
///
/// For `ρ > 0` the surfaces cross along the circles `r = 1 ∓ √ρ`, traversed
/// counterclockwise; the homotopy runs over the annulus between them. In
/// 7-D the plane becomes `span{e1, e2, e4, e7}` and the paraboloid is
/// thickened by `span{e5, N × e5}`.
pub fn parabola_example(rho: f64, dim: Dim, filling: Filling, grid: GridDims) -> Result<ParabolaExample> {
    if rho < 0.0 {
        return Err(Error::NoIntersection(rho));
    }
    if !(rho <= RHO_MAX) {
        return Err(Error::InvalidParameter(format!("rho must not exceed {RHO_MAX}, got {rho}")));
    }
    if rho == 0.0 {
        return Ok(ParabolaExample { rho, radii: vec![1.0], data: None });
    }
    let s = rho.sqrt();
    let (r1, r2) = (1.0 - s, 1.0 + s);
    let hgt = |r: f64| (r - 1.0).powi(2) - rho;
    let dh = |r: f64| 2.0 * (r - 1.0);
    let kappa = match filling {
        Filling::Linear => 0.0,
        Filling::Bulged => BULGE,
    };

    let mut nodes = Vec::with_capacity(grid.node_count());
    for a in 0..=grid.a {
        let tau = a as f64 / grid.a as f64;
        let r = r1 + tau * (r2 - r1);
        for b in 0..=grid.b {
            let t = b as f64 / grid.b as f64;
            let bump = kappa * t * (1.0 - t) * (PI * tau).sin();
            for cc in 0..grid.c {
                let z = grid.z(cc);
                let point = embed(dim, [r * z.cos(), r * z.sin(), (1.0 - t) * hgt(r) + bump * z.sin()]);
                let tangent = embed(dim, [-r * z.sin(), r * z.cos(), bump * z.cos()]);
                let frame = unitary_fiber_frame(dim, &tangent);
                nodes.push(NodeRecord { point, tangent, frame });
            }
        }
    }
    let mut mark1 = Vec::with_capacity((grid.a + 1) * grid.c);
    let mut mark2 = Vec::with_capacity((grid.a + 1) * grid.c);
    for a in 0..=grid.a {
        let r = r1 + (r2 - r1) * a as f64 / grid.a as f64;
        for cc in 0..grid.c {
            let z = grid.z(cc);
            let vhat = embed(dim, [-z.sin(), z.cos(), 0.0]);
            let n1 = unit(&embed(dim, [-dh(r) * z.cos(), -dh(r) * z.sin(), 1.0]));
            mark1.push(marks(dim, &n1, &vhat, 5));
            mark2.push(marks(dim, &axis(dim, 3), &vhat, 4));
        }
    }
    let data = HomotopyData::new(dim, grid, "ccw", nodes, mark1, mark2)?;
    Ok(ParabolaExample { rho, radii: vec![r1, r2], data: Some(data) })
}

/// Constant fiber over `e1` with the first marked plane
/// `diag(e^{i·k·z/2}, 1, …)ℝⁿ` and the second `i` times it; the `S` cycle
/// has index `k` and `P` has index 0.
pub fn twisted_product_example(dim: Dim, half_turns: i64, grid: GridDims) -> Result<HomotopyData> {
    let tangent = axis(dim, 1);
    let frame = unitary_fiber_frame(dim, &tangent);
    let n = dim.fiber_rank();
    let mut nodes = Vec::with_capacity(grid.node_count());
    for a in 0..=grid.a {
        for _b in 0..=grid.b {
            for cc in 0..grid.c {
                let mut point = axis(dim, 2);
                point[1] = a as f64 / grid.a as f64;
                point[0] = grid.z(cc);
                nodes.push(NodeRecord { point, tangent: tangent.clone(), frame: frame.clone() });
            }
        }
    }
    let plane = |z: f64, rot: Complex64| -> Vec<Vec<f64>> {
        (0..n)
            .map(|j| {
                let mut w = vec![c(0.0, 0.0); n];
                w[j] = if j == 0 { Complex64::from_polar(1.0, half_turns as f64 * z / 2.0) } else { c(1.0, 0.0) } * rot;
                fiber_realize(dim, &tangent, &frame, &w)
            })
            .collect()
    };
    let mut mark1 = Vec::new();
    let mut mark2 = Vec::new();
    for _a in 0..=grid.a {
        for cc in 0..grid.c {
            mark1.push(plane(grid.z(cc), c(1.0, 0.0)));
            mark2.push(plane(grid.z(cc), c(0.0, 1.0)));
        }
    }
    HomotopyData::new(dim, grid, "product", nodes, mark1, mark2)
}

fn random_hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&a + a.adjoint()) * c(0.5 * scale, 0.0)
}

fn exp_i_hermitian(h: CMat) -> CMat {
    let e = SymmetricEigen::new(h);
    let d = DVector::from_iterator(e.eigenvalues.len(), e.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, l)));
    &e.eigenvectors * CMat::from_diagonal(&d) * e.eigenvectors.adjoint()
}

/// Smooth random unitary gauge `exp(iH(τ, t, z))` that does not depend on
/// `t` on the faces `τ ∈ {0, 1}`.
pub fn random_face_gauge<R: Rng>(rng: &mut R, n: usize, grid: GridDims) -> impl Fn(usize, usize, usize) -> CMat {
    let hs: Vec<CMat> = (0..5).map(|_| random_hermitian(rng, n, 0.8)).collect();
    move |a, b, cc| {
        let tau = a as f64 / grid.a as f64;
        let t = b as f64 / grid.b as f64;
        let z = grid.z(cc);
        let w = [1.0, z.cos(), z.sin(), tau, (PI * tau).sin() * t];
        let mut h = CMat::zeros(n, n);
        for (hk, wk) in hs.iter().zip(w) {
            h += hk * c(wk, 0.0);
        }
        exp_i_hermitian(h)
    }
}
