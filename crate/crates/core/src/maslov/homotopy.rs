//! Homotopy data between two intersection curves, its unitary
//! trivialization and the boundary cycles `S` and `P`.
//!
//! Grid node `(a, b, c)` sits at `τ = a/A`, `t = b/B`, `z = 2πc/C`. Row
//! `b = 0` lies in the first surface and carries its marked Lagrangian
//! planes, row `b = B` lies in the second. The columns `a = 0` (first curve)
//! and `a = A` (second curve) do not depend on `b`.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    c, fiber_coords, fiber_realize, frame_defect, maslov_index, polar, unit, unitarity_defect, unitary_power, CMat,
    LagrangianFrame, LagrangianLoop,
};
use crate::cayley::{dot_slice, Dim};
use crate::{Error, Result};

pub const HOMOTOPY_FORMAT: &str = "g2loop-homotopy";
pub const HOMOTOPY_VERSION: u32 = 1;
/// Samples on each side segment of the `P` cycle.
pub const SIDE_SAMPLES: usize = 32;
/// Smallest singular value of a frame overlap accepted by transport.
const TRANSPORT_MIN_OVERLAP: f64 = 0.5;
const INPUT_TOL: f64 = 1e-8;
const FACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl Default for GridDims {
    fn default() -> Self {
        GridDims { a: 16, b: 16, c: 64 }
    }
}

impl GridDims {
    pub fn node_count(&self) -> usize {
        (self.a + 1) * (self.b + 1) * self.c
    }

    pub fn node(&self, a: usize, b: usize, c: usize) -> usize {
        (a * (self.b + 1) + b) * self.c + c
    }

    pub fn mark(&self, a: usize, c: usize) -> usize {
        a * self.c + c
    }

    pub fn z(&self, c: usize) -> f64 {
        TAU * c as f64 / self.c as f64
    }
}

/// Base point of the lift `(u, ∂_z u)` and a unitary frame of the fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub point: Vec<f64>,
    pub tangent: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyData {
    pub format: String,
    pub version: u32,
    pub dim: Dim,
    pub grid: GridDims,
    /// Caller-supplied component label of the pair of curves.
    pub label: String,
    pub nodes: Vec<NodeRecord>,
    /// Real bases of the marked planes on row `b = 0`, indexed `a·C + c`.
    pub mark1: Vec<Vec<Vec<f64>>>,
    /// Same on row `b = B`.
    pub mark2: Vec<Vec<Vec<f64>>>,
}

fn bad(msg: String) -> Error {
    Error::InvalidHomotopy(msg)
}

fn max_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

impl HomotopyData {
    pub fn new(
        dim: Dim,
        grid: GridDims,
        label: impl Into<String>,
        nodes: Vec<NodeRecord>,
        mark1: Vec<Vec<Vec<f64>>>,
        mark2: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let h = HomotopyData {
            format: HOMOTOPY_FORMAT.into(),
            version: HOMOTOPY_VERSION,
            dim,
            grid,
            label: label.into(),
            nodes,
            mark1,
            mark2,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn node(&self, a: usize, b: usize, c: usize) -> &NodeRecord {
        &self.nodes[self.grid.node(a, b, c)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != HOMOTOPY_FORMAT {
            return Err(bad(format!("unexpected format `{}`", self.format)));
        }
        let g = self.grid;
        if g.a < 1 || g.b < 1 || g.c < super::MIN_LOOP_FRAMES {
            return Err(bad(format!("grid {}×{}×{} too small", g.a, g.b, g.c)));
        }
        if self.nodes.len() != g.node_count() {
            return Err(bad(format!("{} nodes, grid needs {}", self.nodes.len(), g.node_count())));
        }
        let marks = (g.a + 1) * g.c;
        if self.mark1.len() != marks || self.mark2.len() != marks {
            return Err(bad(format!("mark rows need {marks} entries")));
        }
        let (d, n) = (self.dim.n(), self.dim.fiber_rank());
        for (i, r) in self.nodes.iter().enumerate() {
            if r.point.len() != d || r.tangent.len() != d || r.frame.len() != n || r.frame.iter().any(|e| e.len() != d) {
                return Err(bad(format!("node {i} has wrong shape")));
            }
            let s = dot_slice(&r.tangent, &r.tangent).sqrt();
            if !(s > crate::loopspace::IMMERSION_EPS) {
                return Err(bad(format!("node {i} has degenerate tangent")));
            }
            let fd = frame_defect(self.dim, &r.tangent, &r.frame);
            if !(fd < INPUT_TOL) {
                return Err(bad(format!("node {i} frame is not unitary (defect {fd:e})")));
            }
        }
        for a in [0, g.a] {
            for c in 0..g.c {
                let r0 = self.node(a, 0, c);
                for b in 1..=g.b {
                    let r = self.node(a, b, c);
                    let scale = 1.0 + dot_slice(&r0.tangent, &r0.tangent).sqrt();
                    if max_diff(&r.point, &r0.point) > FACE_TOL * scale
                        || max_diff(&r.tangent, &r0.tangent) > FACE_TOL * scale
                    {
                        return Err(bad(format!("face τ={} depends on t at (b={b}, c={c})", a / g.a)));
                    }
                }
            }
        }
        for (row, marks, b) in [(1, &self.mark1, 0), (2, &self.mark2, g.b)] {
            for a in 0..=g.a {
                for c in 0..g.c {
                    let m = &marks[g.mark(a, c)];
                    if m.len() != n || m.iter().any(|x| x.len() != d) {
                        return Err(bad(format!("mark{row} at (a={a}, c={c}) has wrong shape")));
                    }
                    let r = self.node(a, b, c);
                    let vhat = unit(&r.tangent);
                    for x in m {
                        let nx = dot_slice(x, x).sqrt();
                        if dot_slice(x, &vhat).abs() > INPUT_TOL * nx {
                            return Err(bad(format!("mark{row} at (a={a}, c={c}) is not normal to the tangent")));
                        }
                    }
                    LagrangianFrame::from_basis(&mark_coords(self.dim, &vhat, &r.frame, m))
                        .map_err(|e| bad(format!("mark{row} at (a={a}, c={c}): {e}")))?;
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let h: HomotopyData = serde_json::from_str(s)?;
        if h.version != HOMOTOPY_VERSION {
            return Err(Error::Parse(format!("unsupported homotopy version {}", h.version)));
        }
        h.validate()?;
        Ok(h)
    }

    /// The same homotopy with the roles of the two surfaces exchanged
    /// (`t ↦ 1 − t`).
    pub fn swapped(&self) -> Self {
        let g = self.grid;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for a in 0..=g.a {
            for b in 0..=g.b {
                for c in 0..g.c {
                    nodes.push(self.node(a, g.b - b, c).clone());
                }
            }
        }
        HomotopyData { nodes, mark1: self.mark2.clone(), mark2: self.mark1.clone(), ..self.clone() }
    }

    /// Replaces every input frame `E` by `E·G(a, b, c)`.
    pub fn regauged(&self, gauge: impl Fn(usize, usize, usize) -> CMat) -> Result<Self> {
        let g = self.grid;
        let mut out = self.clone();
        for a in 0..=g.a {
            for b in 0..=g.b {
                for c in 0..g.c {
                    let gm = gauge(a, b, c);
                    if unitarity_defect(&gm) > 1e-10 {
                        return Err(Error::InvalidParameter("gauge is not unitary".into()));
                    }
                    let r = &mut out.nodes[g.node(a, b, c)];
                    r.frame = apply_gauge(self.dim, &r.tangent, &r.frame, &gm);
                }
            }
        }
        Ok(out)
    }
}

fn mark_coords(dim: Dim, vhat: &[f64], frame: &[Vec<f64>], m: &[Vec<f64>]) -> CMat {
    let n = frame.len();
    let cols: Vec<Vec<_>> = m.iter().map(|x| fiber_coords(dim, vhat, frame, x)).collect();
    CMat::from_fn(n, n, |i, j| cols[j][i])
}

fn apply_gauge(dim: Dim, tangent: &[f64], frame: &[Vec<f64>], g: &CMat) -> Vec<Vec<f64>> {
    let vhat = unit(tangent);
    (0..g.ncols())
        .map(|j| {
            let col: Vec<_> = g.column(j).iter().cloned().collect();
            fiber_realize(dim, &vhat, frame, &col)
        })
        .collect()
}

/// Nearest-unitary transport of `prev` into the fiber of `node`. Returns the
/// new frame and its coordinates in the node's own frame.
fn transport(dim: Dim, prev: &[Vec<f64>], node: &NodeRecord, at: (usize, usize, usize)) -> Result<(Vec<Vec<f64>>, CMat)> {
    let vhat = unit(&node.tangent);
    let m = mark_coords(dim, &vhat, &node.frame, prev);
    let (g, smin) = polar(&m);
    if smin < TRANSPORT_MIN_OVERLAP {
        return Err(Error::NonTrivializable(format!(
            "fibers at node {at:?} and its predecessor are too far apart (overlap {smin:.3})"
        )));
    }
    Ok((apply_gauge(dim, &node.tangent, &node.frame, &g), g))
}

/// Homotopy data in a unitary trivialization: per-node gauges relative to
/// the input frames and the marked planes in trivialized coordinates.
#[derive(Debug, Clone)]
pub struct GaugedHomotopy {
    pub dim: Dim,
    pub grid: GridDims,
    pub label: String,
    gauges: Vec<CMat>,
    psi1: Vec<LagrangianFrame>,
    psi2: Vec<LagrangianFrame>,
    twist: i64,
    face_residual: f64,
}

/// Symplectic normalization at one corner node: bases `b` of the first
/// marked plane and `a'` of the second with `ω(b_j, a'_m) = δ_jm`, so that
/// `S = [b | a']⁻¹` sends the planes to `ℝⁿ` and `iℝⁿ`.
#[derive(Debug, Clone)]
pub struct CornerMap {
    pub b: Vec<DVector<f64>>,
    pub a: Vec<DVector<f64>>,
}

fn omega0(x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let n = x.len() / 2;
    (0..n).map(|i| x[i] * y[n + i] - x[n + i] * y[i]).sum()
}

fn to_complex(v: &DVector<f64>) -> Vec<num_complex::Complex64> {
    let n = v.len() / 2;
    (0..n).map(|i| c(v[i], v[n + i])).collect()
}

impl CornerMap {
    pub fn new(l1: &LagrangianFrame, l2: &LagrangianFrame) -> Result<Self> {
        let b = l1.real_columns();
        let a = l2.real_columns();
        let n = b.len();
        let omega = DMatrix::from_fn(n, n, |j, m| omega0(&b[j], &a[m]));
        let smin = omega.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
        if smin < 1e-8 {
            return Err(Error::NonTrivializable(format!(
                "marked planes are not transversal at the corner (σ_min {smin:e})"
            )));
        }
        let inv = omega.try_inverse().expect("checked invertible");
        let ap = (0..n)
            .map(|m| {
                let mut v = DVector::zeros(2 * n);
                for (l, al) in a.iter().enumerate() {
                    v += al * inv[(l, m)];
                }
                v
            })
            .collect();
        Ok(CornerMap { b, a: ap })
    }

    /// Real `2n × 2n` matrix of `S`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.b.len();
        let cols: Vec<DVector<f64>> = self.b.iter().chain(&self.a).cloned().collect();
        DMatrix::from_columns(&cols).try_inverse().unwrap_or_else(|| DMatrix::zeros(2 * n, 2 * n))
    }

    /// Plane `S⁻¹(e^{iθ}ℝⁿ)`.
    pub fn rotated_plane(&self, theta: f64) -> Result<LagrangianFrame> {
        let n = self.b.len();
        let (co, si) = (theta.cos(), theta.sin());
        let cols: Vec<Vec<_>> = (0..n).map(|j| to_complex(&(&self.b[j] * co + &self.a[j] * si))).collect();
        LagrangianFrame::from_basis(&CMat::from_fn(n, n, |i, j| cols[j][i]))
    }

    /// How far `S` is from sending the planes to `ℝⁿ` and `iℝⁿ`.
    pub fn residual(&self, l1: &LagrangianFrame, l2: &LagrangianFrame) -> f64 {
        let s = self.matrix();
        let n = self.b.len();
        let mut r: f64 = 0.0;
        for v in l1.real_columns() {
            let w = &s * v;
            r = r.max((n..2 * n).map(|i| w[i].abs()).fold(0.0, f64::max) / w.norm());
        }
        for v in l2.real_columns() {
            let w = &s * v;
            r = r.max((0..n).map(|i| w[i].abs()).fold(0.0, f64::max) / w.norm());
        }
        r
    }
}

impl GaugedHomotopy {
    pub fn n(&self) -> usize {
        self.dim.fiber_rank()
    }

    /// Accumulated retwist units.
    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn gauge(&self, a: usize, b: usize, c: usize) -> &CMat {
        &self.gauges[self.grid.node(a, b, c)]
    }

    /// First marked plane at `(a, 0, c)` in trivialized coordinates.
    pub fn psi1(&self, a: usize, c: usize) -> &LagrangianFrame {
        &self.psi1[self.grid.mark(a, c)]
    }

    pub fn psi2(&self, a: usize, c: usize) -> &LagrangianFrame {
        &self.psi2[self.grid.mark(a, c)]
    }

    /// Deviation from constancy of the frames along the faces `τ ∈ {0, 1}`.
    pub fn face_residual(&self) -> f64 {
        self.face_residual
    }

    /// Corner map on face `a ∈ {0, A}` at slice `c`.
    pub fn corner(&self, a: usize, c: usize) -> Result<CornerMap> {
        CornerMap::new(self.psi1(a, c), self.psi2(a, c))
    }

    /// Worst corner residual over both faces and all slices.
    pub fn corner_residual(&self) -> Result<f64> {
        let mut r: f64 = 0.0;
        for a in [0, self.grid.a] {
            for c in 0..self.grid.c {
                r = r.max(self.corner(a, c)?.residual(self.psi1(a, c), self.psi2(a, c)));
            }
        }
        Ok(r)
    }
}

/// Unitary trivialization by nearest-unitary transport.
///
/// Sweep: around the `z` circle at the corner `(0, 0)` with the holonomy
/// spread evenly over the slices, then along `τ` on the row `t = 0`, then
/// along `t` in every column. Since the faces `τ ∈ {0, 1}` do not move in
/// `t`, the resulting frames are constant along them.
pub fn trivialize(h: &HomotopyData) -> Result<GaugedHomotopy> {
    h.validate()?;
    let g = h.grid;
    let dim = h.dim;
    let mut frames: Vec<Vec<Vec<f64>>> = vec![Vec::new(); g.node_count()];
    let mut gauges: Vec<CMat> = vec![CMat::identity(1, 1); g.node_count()];

    let n = dim.fiber_rank();
    let mut zf = vec![h.node(0, 0, 0).frame.clone()];
    let mut zg = vec![CMat::identity(n, n)];
    for cc in 1..g.c {
        let (f, gm) = transport(dim, &zf[cc - 1], h.node(0, 0, cc), (0, 0, cc))?;
        zf.push(f);
        zg.push(gm);
    }
    let (_, hol) = transport(dim, &zf[g.c - 1], h.node(0, 0, 0), (0, 0, 0))?;
    for cc in 0..g.c {
        let p = unitary_power(&hol, -(cc as f64) / g.c as f64);
        let r = h.node(0, 0, cc);
        zf[cc] = apply_gauge(dim, &r.tangent, &zf[cc], &p);
        zg[cc] = &zg[cc] * &p;
    }
    for cc in 0..g.c {
        let i = g.node(0, 0, cc);
        frames[i] = zf[cc].clone();
        gauges[i] = zg[cc].clone();
        for a in 1..=g.a {
            let (f, gm) = transport(dim, &frames[g.node(a - 1, 0, cc)], h.node(a, 0, cc), (a, 0, cc))?;
            let j = g.node(a, 0, cc);
            frames[j] = f;
            gauges[j] = gm;
        }
        for a in 0..=g.a {
            for b in 1..=g.b {
                let (f, gm) = transport(dim, &frames[g.node(a, b - 1, cc)], h.node(a, b, cc), (a, b, cc))?;
                let j = g.node(a, b, cc);
                frames[j] = f;
                gauges[j] = gm;
            }
        }
    }

    let mut face_residual: f64 = 0.0;
    for a in [0, g.a] {
        for cc in 0..g.c {
            let r0 = h.node(a, 0, cc);
            let f0 = &frames[g.node(a, 0, cc)];
            for b in 1..=g.b {
                let f = &frames[g.node(a, b, cc)];
                let m = mark_coords(dim, &unit(&r0.tangent), f0, f);
                face_residual = face_residual.max((m - CMat::identity(n, n)).norm());
            }
        }
    }
    if face_residual > FACE_TOL {
        return Err(Error::NonTrivializable(format!("frames drift along a constant face ({face_residual:e})")));
    }

    let mut psi1 = Vec::with_capacity((g.a + 1) * g.c);
    let mut psi2 = Vec::with_capacity((g.a + 1) * g.c);
    for a in 0..=g.a {
        for cc in 0..g.c {
            for (b, marks, out) in [(0, &h.mark1, &mut psi1), (g.b, &h.mark2, &mut psi2)] {
                let r = h.node(a, b, cc);
                let m = mark_coords(dim, &unit(&r.tangent), &frames[g.node(a, b, cc)], &marks[g.mark(a, cc)]);
                out.push(LagrangianFrame::from_basis(&m)?);
            }
        }
    }
    Ok(GaugedHomotopy {
        dim,
        grid: g,
        label: h.label.clone(),
        gauges,
        psi1,
        psi2,
        twist: 0,
        face_residual,
    })
}

/// Multiplies the trivialization by `diag(e^{ikz}, 1, …, 1)` over every
/// slice; the index of the `S` cycle changes by `2k`.
pub fn retwist(gh: &GaugedHomotopy, k: i64) -> GaugedHomotopy {
    let g = gh.grid;
    let n = gh.n();
    let mut out = gh.clone();
    for cc in 0..g.c {
        let mut ph = CMat::identity(n, n);
        ph[(0, 0)] = num_complex::Complex64::from_polar(1.0, k as f64 * g.z(cc));
        let inv = ph.adjoint();
        for a in 0..=g.a {
            let i = g.mark(a, cc);
            out.psi1[i] = gh.psi1[i].transformed(&ph);
            out.psi2[i] = gh.psi2[i].transformed(&ph);
            for b in 0..=g.b {
                let j = g.node(a, b, cc);
                out.gauges[j] = &gh.gauges[j] * &inv;
            }
        }
    }
    out.twist += k;
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cycle {
    /// The fiber circle at the corner `(τ, t) = (0, 0)`.
    S,
    /// The boundary of the square at slice `c`.
    P(usize),
}

/// Loop of Lagrangian planes over a boundary cycle.
///
/// `P(c)`: first marked plane along `τ` at `t = 0`; on `τ = 1` the planes
/// `S⁻¹(e^{iπt/2}ℝⁿ)` from the first marked plane to the second; the second
/// marked plane back along `τ` at `t = 1`; on `τ = 0` the same rotation
/// traversed from `t = 1` down to `t = 0`.
pub fn boundary_loop(gh: &GaugedHomotopy, cycle: Cycle) -> Result<LagrangianLoop> {
    let g = gh.grid;
    match cycle {
        Cycle::S => LagrangianLoop::new((0..g.c).map(|cc| gh.psi1(0, cc).clone()).collect()),
        Cycle::P(cc) => {
            if cc >= g.c {
                return Err(Error::BadCycle(format!("slice {cc} outside 0..{}", g.c)));
            }
            let mut f = Vec::with_capacity(2 * (g.a + SIDE_SAMPLES));
            let right = gh.corner(g.a, cc)?;
            let left = gh.corner(0, cc)?;
            let theta = |s: usize| FRAC_PI_2 * s as f64 / SIDE_SAMPLES as f64;
            for a in 0..=g.a {
                f.push(gh.psi1(a, cc).clone());
            }
            for s in 1..SIDE_SAMPLES {
                f.push(right.rotated_plane(theta(s))?);
            }
            for a in (0..=g.a).rev() {
                f.push(gh.psi2(a, cc).clone());
            }
            for s in (1..SIDE_SAMPLES).rev() {
                f.push(left.rotated_plane(theta(s))?);
            }
            LagrangianLoop::new(f)
        }
    }
}

/// Retwists so that the `S` cycle has index zero.
pub fn normalize_s(gh: &GaugedHomotopy) -> Result<GaugedHomotopy> {
    let mu = maslov_index(&boundary_loop(gh, Cycle::S)?)?;
    if mu.rem_euclid(2) == 1 {
        return Err(Error::OddSTwist(mu));
    }
    if mu == 0 {
        return Ok(gh.clone());
    }
    Ok(retwist(gh, -mu / 2))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelativeIndex {
    pub value: i64,
    /// Index of the `S` cycle before normalization.
    pub mu_s: i64,
    /// `μ(P)` on every slice.
    pub per_slice: Vec<i64>,
    /// Reduction mod 4, reported in 3-D.
    pub mod4: Option<i64>,
    pub label: String,
}

/// `μ(P)` after trivialization and `S`-normalization, checked to agree on
/// every slice.
pub fn relative_index(h: &HomotopyData) -> Result<RelativeIndex> {
    let gh = trivialize(h)?;
    let mu_s = maslov_index(&boundary_loop(&gh, Cycle::S)?)?;
    let gh = normalize_s(&gh)?;
    let per_slice = (0..gh.grid.c)
        .into_par_iter()
        .map(|cc| maslov_index(&boundary_loop(&gh, Cycle::P(cc))?))
        .collect::<Result<Vec<i64>>>()?;
    let value = per_slice[0];
    if per_slice.iter().any(|&m| m != value) {
        return Err(Error::SliceDependence(per_slice));
    }
    Ok(RelativeIndex {
        value,
        mu_s,
        per_slice,
        mod4: (h.dim == Dim::Three).then(|| value.rem_euclid(4)),
        label: h.label.clone(),
    })
}
