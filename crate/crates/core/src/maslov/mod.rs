//! Maslov index of loops of Lagrangian planes in `ℂⁿ`, the relative index of
//! two intersection curves and the invariant `T`.
//!
//! A Lagrangian plane is stored as a unitary `U` with plane `U·ℝⁿ`; the
//! index of a loop is the winding number of `det(U)²`.

mod homotopy;
mod parabola;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cayley::{cross_into, dot_slice, Dim};
use crate::{Error, Result};

pub use homotopy::{
    boundary_loop, normalize_s, relative_index, retwist, trivialize, Cycle, GaugedHomotopy, GridDims,
    HomotopyData, NodeRecord, RelativeIndex, SIDE_SAMPLES,
};
pub use parabola::{
    parabola_example, random_face_gauge, twisted_product_example, Filling, ParabolaExample, RHO_MAX,
};

pub type CMat = DMatrix<Complex64>;

pub const MIN_LOOP_FRAMES: usize = 8;
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Max entry of `UᴴU − 1`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let g = u.adjoint() * u;
    let mut m: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let e = if i == j { g[(i, j)] - 1.0 } else { g[(i, j)] };
            m = m.max(e.norm());
        }
    }
    m
}

/// Nearest unitary (polar factor) and the smallest singular value.
pub fn polar(m: &CMat) -> (CMat, f64) {
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    (svd.u.unwrap() * svd.v_t.unwrap(), smin)
}

const CLUSTER_TOL: f64 = 1e-7;

/// Eigen-decomposition of a unitary matrix through its commuting Hermitian
/// parts `X = (U + Uᴴ)/2` and `Y = (U − Uᴴ)/2i`: diagonalize `X`, then `Y`
/// inside each cluster of equal `X` eigenvalues. Complex Schur iteration
/// can stall on nearly scalar input, which this avoids.
pub(crate) fn normal_eigen(m: &CMat) -> (CMat, Vec<Complex64>) {
    let n = m.nrows();
    let half = c(0.5, 0.0);
    let x = (m + m.adjoint()) * half;
    let y = (m - m.adjoint()) * c(0.0, -0.5);
    let ex = SymmetricEigen::new(x);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ex.eigenvalues[i].total_cmp(&ex.eigenvalues[j]));
    let mut q = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        q.set_column(dst, &ex.eigenvectors.column(src));
    }
    let xs: Vec<f64> = order.iter().map(|&i| ex.eigenvalues[i]).collect();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && xs[end] - xs[end - 1] < CLUSTER_TOL {
            end += 1;
        }
        if end - start > 1 {
            let qc = q.columns(start, end - start).into_owned();
            let b = qc.adjoint() * &y * &qc;
            let b = (&b + b.adjoint()) * half;
            let eb = SymmetricEigen::new(b);
            q.columns_mut(start, end - start).copy_from(&(qc * eb.eigenvectors));
        }
        start = end;
    }
    let ev = (0..n)
        .map(|j| {
            let col = q.column(j);
            let l = (col.adjoint() * m * col)[(0, 0)];
            l / l.norm()
        })
        .collect();
    (q, ev)
}

/// `exp(s·log U)` for unitary `U` with the principal logarithm.
pub fn unitary_power(u: &CMat, s: f64) -> CMat {
    let (q, ev) = normal_eigen(u);
    let d = DVector::from_iterator(ev.len(), ev.iter().map(|l| (l.ln() * s).exp()));
    &q * CMat::from_diagonal(&d) * q.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianFrame {
    u: CMat,
}

impl LagrangianFrame {
    pub fn new(u: CMat) -> Result<Self> {
        if !u.is_square() || u.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!("frame is {}×{}", u.nrows(), u.ncols())));
        }
        let d = unitarity_defect(&u);
        if d > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!("frame is not unitary (defect {d:e})")));
        }
        Ok(LagrangianFrame { u })
    }

    /// The real plane `ℝ^n ⊂ ℂ^n`.
    pub fn real(n: usize) -> Self {
        LagrangianFrame { u: CMat::identity(n, n) }
    }

    /// Unitary frame of the plane spanned over `ℝ` by the columns of `v`.
    pub fn from_basis(v: &CMat) -> Result<Self> {
        if !v.is_square() {
            return Err(Error::DimensionMismatch(format!("basis is {}×{}", v.nrows(), v.ncols())));
        }
        let g = v.adjoint() * v;
        let scale = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let iso = g.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if iso > 1e-8 * scale {
            return Err(Error::InvalidParameter(format!(
                "basis does not span a Lagrangian plane (isotropy defect {:e})",
                iso / scale
            )));
        }
        let (u, smin) = polar(v);
        if smin <= 1e-10 * scale.sqrt() {
            return Err(Error::InvalidParameter("basis is rank deficient".into()));
        }
        Ok(LagrangianFrame { u })
    }

    /// Plane `diag(e^{iθ_j})·ℝⁿ`.
    pub fn from_angles(angles: &[f64]) -> Self {
        let d = DVector::from_iterator(angles.len(), angles.iter().map(|&a| Complex64::from_polar(1.0, a)));
        LagrangianFrame { u: CMat::from_diagonal(&d) }
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    pub fn det_sq(&self) -> Complex64 {
        let d = self.u.determinant();
        d * d
    }

    /// `g·L` for unitary `g`.
    pub fn transformed(&self, g: &CMat) -> Self {
        LagrangianFrame { u: g * &self.u }
    }

    /// Real `2n` vectors `(Re, Im)` of the frame columns.
    pub fn real_columns(&self) -> Vec<DVector<f64>> {
        let n = self.n();
        (0..n)
            .map(|j| DVector::from_fn(2 * n, |i, _| if i < n { self.u[(i, j)].re } else { self.u[(i - n, j)].im }))
            .collect()
    }

    /// Largest sine of the principal angles to `other` (0 for equal planes).
    pub fn distance(&self, other: &LagrangianFrame) -> f64 {
        let w = self.u.adjoint() * &other.u;
        let ww = &w * w.transpose();
        let (_, ev) = normal_eigen(&ww);
        ev.iter().map(|l| (l.arg() / 2.0).sin().abs()).fold(0.0, f64::max)
    }
}

/// Closed loop of Lagrangian planes; the last frame connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianLoop {
    frames: Vec<LagrangianFrame>,
}

impl LagrangianLoop {
    pub fn new(frames: Vec<LagrangianFrame>) -> Result<Self> {
        if frames.len() < MIN_LOOP_FRAMES {
            return Err(Error::TooFewSamples { got: frames.len(), min: MIN_LOOP_FRAMES });
        }
        let n = frames[0].n();
        if frames.iter().any(|f| f.n() != n) {
            return Err(Error::DimensionMismatch("frames of different rank in one loop".into()));
        }
        Ok(LagrangianLoop { frames })
    }

    /// Samples `f(k/m)`, `k = 0..m`, of a unitary-valued map on `[0, 1)`.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> CMat) -> Result<Self> {
        let frames = (0..m)
            .map(|k| LagrangianFrame::new(f(k as f64 / m as f64)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }

    pub fn frames(&self) -> &[LagrangianFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn n(&self) -> usize {
        self.frames[0].n()
    }

    /// Same planes traversed backwards from the same base point.
    pub fn reversed(&self) -> Self {
        let mut f = self.frames.clone();
        f[1..].reverse();
        LagrangianLoop { frames: f }
    }

    /// Starts the loop at sample `k`.
    pub fn rotated(&self, k: usize) -> Self {
        let mut f = self.frames.clone();
        let m = f.len();
        f.rotate_left(k % m);
        LagrangianLoop { frames: f }
    }

    /// `self` followed by `other`; both should start at the same plane.
    pub fn concat(&self, other: &LagrangianLoop) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch("loops of different rank".into()));
        }
        let mut f = self.frames.clone();
        f.extend(other.frames.iter().cloned());
        Ok(LagrangianLoop { frames: f })
    }
}

/// Phase increment of `det²` between two neighbouring planes, summed from
/// the eigenvalues `e^{iψ_j}` of `WWᵀ`, `W = U_aᴴU_b`. Also returns
/// `max|ψ_j|/2`, the largest principal angle.
pub fn plane_increment(a: &LagrangianFrame, b: &LagrangianFrame) -> (f64, f64) {
    let w = a.u.adjoint() * &b.u;
    let ww = &w * w.transpose();
    let (_, ev) = normal_eigen(&ww);
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for l in ev {
        let psi = l.arg();
        sum += psi;
        worst = worst.max(psi.abs() / 2.0);
    }
    (sum, worst)
}

/// Per-step phase increments of `det²` around the loop.
pub fn maslov_increments(l: &LagrangianLoop) -> Result<Vec<f64>> {
    let m = l.frames.len();
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let (d, angle) = plane_increment(&l.frames[k], &l.frames[(k + 1) % m]);
        if angle >= std::f64::consts::FRAC_PI_4 {
            return Err(Error::NyquistViolation { index: k, angle });
        }
        out.push(d);
    }
    Ok(out)
}

/// Winding number of `det(U)²` around the loop.
pub fn maslov_index(l: &LagrangianLoop) -> Result<i64> {
    let total: f64 = maslov_increments(l)?.iter().sum();
    Ok((total / std::f64::consts::TAU).round() as i64)
}

/// `|#even − #odd|` together with the signed count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TInvariant {
    pub value: u64,
    pub signed: i64,
}

pub fn invariant_t(indices: &[i64]) -> TInvariant {
    let even = indices.iter().filter(|m| m.rem_euclid(2) == 0).count() as i64;
    let odd = indices.len() as i64 - even;
    TInvariant { value: (even - odd).unsigned_abs(), signed: even - odd }
}

/// `v̂ × x`, the complex structure on the fiber `v^⊥`.
pub fn fiber_j(dim: Dim, vhat: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dim.n()];
    cross_into(dim, vhat, x, &mut out);
    out
}

pub(crate) fn unit(v: &[f64]) -> Vec<f64> {
    let n = dot_slice(v, v).sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Complex coordinates `z_a = (E_a, x) + i(JE_a, x)` of `x` in a unitary
/// frame of the fiber over `v̂`.
pub fn fiber_coords(dim: Dim, vhat: &[f64], frame: &[Vec<f64>], x: &[f64]) -> Vec<Complex64> {
    frame
        .iter()
        .map(|e| c(dot_slice(e, x), dot_slice(&fiber_j(dim, vhat, e), x)))
        .collect()
}

/// Vector with coordinates `w` in the frame.
pub fn fiber_realize(dim: Dim, vhat: &[f64], frame: &[Vec<f64>], w: &[Complex64]) -> Vec<f64> {
    let mut out = vec![0.0; dim.n()];
    for (e, z) in frame.iter().zip(w) {
        let je = fiber_j(dim, vhat, e);
        for i in 0..out.len() {
            out[i] += z.re * e[i] + z.im * je[i];
        }
    }
    out
}

/// Deterministic unitary frame `E_1..E_n` of `v^⊥`: greedy choice among the
/// coordinate axes of the one with the largest component left after
/// removing `v` and the span of the previous `E, JE`.
pub fn unitary_fiber_frame(dim: Dim, v: &[f64]) -> Vec<Vec<f64>> {
    let d = dim.n();
    let vhat = unit(v);
    let mut frame: Vec<Vec<f64>> = Vec::new();
    let mut basis: Vec<Vec<f64>> = vec![vhat.clone()];
    while frame.len() < dim.fiber_rank() {
        let mut best: Option<Vec<f64>> = None;
        let mut best_norm = 0.0;
        for i in 0..d {
            let mut x = vec![0.0; d];
            x[i] = 1.0;
            for b in &basis {
                let s = dot_slice(&x, b);
                for k in 0..d {
                    x[k] -= s * b[k];
                }
            }
            let nx = dot_slice(&x, &x).sqrt();
            if nx > best_norm + 1e-12 {
                best_norm = nx;
                best = Some(x);
            }
        }
        let e = unit(&best.expect("fiber has room"));
        let je = unit(&fiber_j(dim, &vhat, &e));
        basis.push(e.clone());
        basis.push(je);
        frame.push(e);
    }
    frame
}

/// Max deviation of `{E_a, JE_a}` from an orthonormal basis of `v^⊥`.
pub fn frame_defect(dim: Dim, v: &[f64], frame: &[Vec<f64>]) -> f64 {
    let vhat = unit(v);
    let mut vs: Vec<Vec<f64>> = Vec::new();
    for e in frame {
        vs.push(e.clone());
        vs.push(fiber_j(dim, &vhat, e));
    }
    let mut m: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        m = m.max(dot_slice(a, &vhat).abs());
        for (j, b) in vs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            m = m.max((dot_slice(a, b) - target).abs());
        }
    }
    m
}
