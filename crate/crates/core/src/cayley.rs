//! Cayley numbers, the vector product on their imaginary part and the
//! associative three-form.
//!
//! Multiplication is the Cayley–Dickson doubling of the quaternions,
//! `(a, b)(c, d) = (ac − d̄b, da + bc̄)`, with `e1 e2 = e3`. The basis is
//! `1, e1, e2, e3` for the first quaternion factor and `e4 .. e7` for
//! `(0, 1), (0, i), (0, j), (0, k)`. In this convention the associative
//! form reads
//!
//! ```text
//! φ = e123 + e145 + e246 + e347 − e167 + e257 − e356
//! ```
//!
//! The vector product is the normalized commutator `½(uv − vu)`, which
//! makes `u × (u × v) = −|u|² v + (u·v) u` hold with the Euclidean metric.
//! The three-dimensional mode uses the ordinary vector product and the
//! volume form.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension of the model space: the imaginary quaternions or octonions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "7")]
    Seven,
}

impl Dim {
    pub fn n(self) -> usize {
        match self {
            Dim::Three => 3,
            Dim::Seven => 7,
        }
    }

    /// Complex rank of the normal fiber `t^⊥` (1 in 3-D, 3 in 7-D).
    pub fn fiber_rank(self) -> usize {
        (self.n() - 1) / 2
    }

    pub fn from_usize(n: usize) -> Result<Dim> {
        match n {
            3 => Ok(Dim::Three),
            7 => Ok(Dim::Seven),
            _ => Err(Error::DimensionMismatch(format!(
                "dimension must be 3 or 7, got {n}"
            ))),
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.n())
    }
}

type Quat = [f64; 4];

fn qmul(a: Quat, b: Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn qconj(a: Quat) -> Quat {
    [a[0], -a[1], -a[2], -a[3]]
}

fn qadd(a: Quat, b: Quat) -> Quat {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn qsub(a: Quat, b: Quat) -> Quat {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

/// A Cayley number `c0 + c1 e1 + … + c7 e7`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Octonion(pub [f64; 8]);

impl Octonion {
    pub const fn zero() -> Self {
        Octonion([0.0; 8])
    }

    pub const fn one() -> Self {
        Octonion([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn real(x: f64) -> Self {
        let mut c = [0.0; 8];
        c[0] = x;
        Octonion(c)
    }

    /// Basis element `e_i`, `i = 0` being the unit.
    pub fn basis(i: usize) -> Self {
        assert!(i < 8, "octonion basis index {i} out of range");
        let mut c = [0.0; 8];
        c[i] = 1.0;
        Octonion(c)
    }

    fn halves(&self) -> (Quat, Quat) {
        let c = &self.0;
        ([c[0], c[1], c[2], c[3]], [c[4], c[5], c[6], c[7]])
    }

    fn from_halves(a: Quat, b: Quat) -> Self {
        Octonion([a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]])
    }

    pub fn conj(&self) -> Self {
        let mut c = self.0;
        for x in c.iter_mut().skip(1) {
            *x = -*x;
        }
        Octonion(c)
    }

    /// `½(l + l̄)`, i.e. the real part.
    pub fn trace(&self) -> f64 {
        0.5 * (self.0[0] + self.conj().0[0])
    }

    /// `tr(a b̄)`, which is the Euclidean inner product of the components.
    pub fn dot(&self, other: &Octonion) -> f64 {
        (*self * other.conj()).trace()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Octonion(self.0.map(|x| x * s))
    }

    /// Raw commutator `ab − ba`.
    pub fn commutator(&self, other: &Octonion) -> Self {
        *self * *other - *other * *self
    }

    /// Imaginary part as a 7-vector.
    pub fn im(&self) -> ImVector {
        let mut c = [0.0; 7];
        c.copy_from_slice(&self.0[1..]);
        ImVector { dim: Dim::Seven, c }
    }
}

impl Mul for Octonion {
    type Output = Octonion;

    fn mul(self, rhs: Octonion) -> Octonion {
        let (a, b) = self.halves();
        let (c, d) = rhs.halves();
        Octonion::from_halves(
            qsub(qmul(a, c), qmul(qconj(d), b)),
            qadd(qmul(d, a), qmul(b, qconj(c))),
        )
    }
}

impl Add for Octonion {
    type Output = Octonion;
    fn add(self, rhs: Octonion) -> Octonion {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x += y;
        }
        Octonion(c)
    }
}

impl Sub for Octonion {
    type Output = Octonion;
    fn sub(self, rhs: Octonion) -> Octonion {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(rhs.0) {
            *x -= y;
        }
        Octonion(c)
    }
}

impl Neg for Octonion {
    type Output = Octonion;
    fn neg(self) -> Octonion {
        self.scale(-1.0)
    }
}

impl Index<usize> for Octonion {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// An imaginary quaternion (3-D mode) or imaginary octonion (7-D mode).
///
/// Only the first `dim.n()` slots are meaningful; the rest stay zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImVector {
    dim: Dim,
    c: [f64; 7],
}

impl ImVector {
    pub fn zero(dim: Dim) -> Self {
        ImVector { dim, c: [0.0; 7] }
    }

    pub fn new3(v: [f64; 3]) -> Self {
        let mut c = [0.0; 7];
        c[..3].copy_from_slice(&v);
        ImVector { dim: Dim::Three, c }
    }

    pub fn new7(v: [f64; 7]) -> Self {
        ImVector { dim: Dim::Seven, c: v }
    }

    pub fn from_slice(dim: Dim, v: &[f64]) -> Result<Self> {
        if v.len() != dim.n() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} components, got {}",
                dim.n(),
                v.len()
            )));
        }
        let mut c = [0.0; 7];
        c[..v.len()].copy_from_slice(v);
        Ok(ImVector { dim, c })
    }

    /// Basis vector `e_i` with `1 ≤ i ≤ dim`.
    pub fn basis(dim: Dim, i: usize) -> Self {
        assert!(
            (1..=dim.n()).contains(&i),
            "basis index {i} out of range for dim {dim}"
        );
        let mut c = [0.0; 7];
        c[i - 1] = 1.0;
        ImVector { dim, c }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.c[..self.dim.n()]
    }

    pub fn to_octonion(&self) -> Octonion {
        let mut o = [0.0; 8];
        o[1..].copy_from_slice(&self.c);
        Octonion(o)
    }

    pub fn dot(&self, other: &ImVector) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        ImVector {
            dim: self.dim,
            c: self.c.map(|x| x * s),
        }
    }

    pub fn normalized(&self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn cross(&self, other: &ImVector) -> ImVector {
        cross(self, other)
    }
}

impl Add for ImVector {
    type Output = ImVector;
    fn add(self, rhs: ImVector) -> ImVector {
        assert_eq!(self.dim, rhs.dim);
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(rhs.c) {
            *x += y;
        }
        ImVector { dim: self.dim, c }
    }
}

impl Sub for ImVector {
    type Output = ImVector;
    fn sub(self, rhs: ImVector) -> ImVector {
        assert_eq!(self.dim, rhs.dim);
        let mut c = self.c;
        for (x, y) in c.iter_mut().zip(rhs.c) {
            *x -= y;
        }
        ImVector { dim: self.dim, c }
    }
}

impl Neg for ImVector {
    type Output = ImVector;
    fn neg(self) -> ImVector {
        self.scale(-1.0)
    }
}

impl Index<usize> for ImVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

/// Vector product `½(uv − vu)`; the ordinary cross product in 3-D.
pub fn cross(u: &ImVector, v: &ImVector) -> ImVector {
    assert_eq!(u.dim, v.dim, "cross of vectors of different dimension");
    match u.dim {
        Dim::Seven => u
            .to_octonion()
            .commutator(&v.to_octonion())
            .scale(0.5)
            .im(),
        Dim::Three => {
            let (a, b) = (&u.c, &v.c);
            ImVector::new3([
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ])
        }
    }
}

/// `(u × v) · w`.
pub fn assoc_form(u: &ImVector, v: &ImVector, w: &ImVector) -> f64 {
    cross(u, v).dot(w)
}

/// Cyclically oriented triples `(i, j, k)` (zero-based) with `e_i × e_j = e_k`.
pub fn structure_triples(dim: Dim) -> &'static [[usize; 3]] {
    static SEVEN: OnceLock<Vec<[usize; 3]>> = OnceLock::new();
    const THREE: [[usize; 3]; 1] = [[0, 1, 2]];
    match dim {
        Dim::Three => &THREE,
        Dim::Seven => SEVEN.get_or_init(|| {
            let mut out = Vec::new();
            for i in 1..=7 {
                for j in (i + 1)..=7 {
                    let p = Octonion::basis(i) * Octonion::basis(j);
                    let k = (1..8).find(|&k| p.0[k] != 0.0).expect("nonzero product");
                    if k > j && p.0[k] > 0.0 {
                        out.push([i - 1, j - 1, k - 1]);
                    } else if k > j {
                        out.push([j - 1, i - 1, k - 1]);
                    }
                }
            }
            out
        }),
    }
}

/// Vector product on raw slices, `out = a × b`.
///
/// Same product as [`cross`], evaluated from the sparse structure
/// constants; used in the loop and flow kernels.
pub fn cross_into(dim: Dim, a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = dim.n();
    debug_assert!(a.len() == n && b.len() == n && out.len() == n);
    out.iter_mut().for_each(|x| *x = 0.0);
    for &[i, j, k] in structure_triples(dim) {
        // e_i × e_j = e_k and cyclic
        out[k] += a[i] * b[j] - a[j] * b[i];
        out[i] += a[j] * b[k] - a[k] * b[j];
        out[j] += a[k] * b[i] - a[i] * b[k];
    }
}

pub fn dot_slice(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(a × b) · c` on raw slices.
pub fn assoc_form_slice(dim: Dim, a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let mut s = 0.0;
    for &[i, j, k] in structure_triples(dim) {
        s += (a[i] * b[j] - a[j] * b[i]) * c[k]
            + (a[j] * b[k] - a[k] * b[j]) * c[i]
            + (a[k] * b[i] - a[i] * b[k]) * c[j];
    }
    s
}

/// An alternating trilinear form with constant coefficients on `ℝ^dim`.
///
/// Stored densely (`dim³` entries) with full antisymmetry maintained by
/// every constructor.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeForm {
    dim: Dim,
    t: Vec<f64>,
}

impl ThreeForm {
    pub fn zero(dim: Dim) -> Self {
        let n = dim.n();
        ThreeForm {
            dim,
            t: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.dim.n();
        (i * n + j) * n + k
    }

    /// Set `λ_{ijk}` (zero-based, distinct indices) and all its signed
    /// permutations.
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        assert!(i != j && j != k && i != k, "repeated index in a 3-form");
        for (p, s) in [
            ([i, j, k], 1.0),
            ([j, k, i], 1.0),
            ([k, i, j], 1.0),
            ([j, i, k], -1.0),
            ([i, k, j], -1.0),
            ([k, j, i], -1.0),
        ] {
            let at = self.idx(p[0], p[1], p[2]);
            self.t[at] = s * value;
        }
    }

    /// Component `λ(e_i, e_j, e_k)`, zero-based.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.t[self.idx(i, j, k)]
    }

    /// Build from the independent components `i < j < k` (zero-based).
    pub fn from_components(dim: Dim, comps: &[((usize, usize, usize), f64)]) -> Result<Self> {
        let n = dim.n();
        let mut f = ThreeForm::zero(dim);
        for &((i, j, k), v) in comps {
            if !(i < j && j < k && k < n) {
                return Err(Error::DimensionMismatch(format!(
                    "component ({i},{j},{k}) is not increasing within dim {n}"
                )));
            }
            f.set(i, j, k, v);
        }
        Ok(f)
    }

    /// The `C(dim, 3)` independent components, lexicographic in `i < j < k`.
    pub fn components(&self) -> Vec<((usize, usize, usize), f64)> {
        let n = self.dim.n();
        let mut out = Vec::with_capacity(35);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    out.push(((i, j, k), self.get(i, j, k)));
                }
            }
        }
        out
    }

    pub fn eval(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim.n();
        let mut s = 0.0;
        for i in 0..n {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let uv = u[i] * v[j];
                if uv == 0.0 {
                    continue;
                }
                let row = &self.t[(i * n + j) * n..(i * n + j + 1) * n];
                s += uv * dot_slice(row, w);
            }
        }
        s
    }

    pub fn eval_vec(&self, u: &ImVector, v: &ImVector, w: &ImVector) -> f64 {
        self.eval(u.as_slice(), v.as_slice(), w.as_slice())
    }

    /// Contraction `λ(l, ·, ·)` as a `dim × dim` antisymmetric matrix.
    pub fn contract(&self, l: &[f64]) -> DMatrix<f64> {
        let n = self.dim.n();
        DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| l[i] * self.get(i, j, k)).sum())
    }

    /// `(A^*λ)(u, v, w) = λ(Au, Av, Aw)`.
    pub fn pullback(&self, a: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim.n();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "pullback by a {}x{} matrix on dim {n}",
                a.nrows(),
                a.ncols()
            )));
        }
        let cols: Vec<Vec<f64>> = (0..n).map(|i| a.column(i).iter().copied().collect()).collect();
        let mut out = ThreeForm::zero(self.dim);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in (j + 1)..n {
                    out.set(i, j, k, self.eval(&cols[i], &cols[j], &cols[k]));
                }
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ThreeForm {
            dim: self.dim,
            t: self.t.iter().map(|x| x * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &ThreeForm) -> f64 {
        self.t
            .iter()
            .zip(&other.t)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The associative form in 7-D, the volume form in 3-D.
pub fn standard_three_form(dim: Dim) -> ThreeForm {
    let mut f = ThreeForm::zero(dim);
    for &[i, j, k] in structure_triples(dim) {
        f.set(i, j, k, 1.0);
    }
    f
}

/// Integer multiplication table of the basis `1, e1, …, e7`:
/// `e_i e_j = sign[i][j] · e_{index[i][j]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OctonionTable {
    pub version: u32,
    pub convention: String,
    pub basis: Vec<String>,
    pub sign: Vec<Vec<i32>>,
    pub index: Vec<Vec<usize>>,
}

pub fn multiplication_table() -> OctonionTable {
    let mut sign = vec![vec![0; 8]; 8];
    let mut index = vec![vec![0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let p = Octonion::basis(i) * Octonion::basis(j);
            let k = (0..8).find(|&k| p.0[k] != 0.0).expect("basis product is a basis element");
            sign[i][j] = p.0[k] as i32;
            index[i][j] = k;
        }
    }
    OctonionTable {
        version: 1,
        convention: "cayley-dickson (a,b)(c,d)=(ac-conj(d)b, da+b conj(c)); e1 e2 = e3".into(),
        basis: (0..8)
            .map(|i| if i == 0 { "1".to_string() } else { format!("e{i}") })
            .collect(),
        sign,
        index,
    }
}
