//! Geometry determined by a three-form: metric and vector product
//! reconstruction, the nondegeneracy condition, G₂ membership, adapted
//! bases and isotropic (coassociative) 4-planes.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix4, SMatrix};
use rand::Rng;

use crate::cayley::{cross, standard_three_form, Dim, ImVector, Octonion, ThreeForm};
use crate::error::{Error, Result};
use crate::sampling::{gaussian_vec, sphere_points};

/// A linear map of `ℝ⁷`.
pub type LinearMap7 = SMatrix<f64, 7, 7>;

/// Relative singular-value threshold for rank decisions.
pub const RANK_RTOL: f64 = 1e-8;
/// Tolerance on orthogonality preconditions of triples.
pub const TRIPLE_TOL: f64 = 1e-10;
/// Default number of directions probed by [`nondegeneracy_check`].
pub const NONDEGENERACY_SAMPLES: usize = 2048;
/// Default number of directions probed for maximality of isotropic planes.
pub const MAXIMALITY_PROBES: usize = 64;

/// Numerical rank with threshold `RANK_RTOL · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}

/// Symmetric positive definite metric on `ℝ^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    g: DMatrix<f64>,
}

impl Metric {
    pub fn identity(dim: Dim) -> Self {
        Metric {
            g: DMatrix::identity(dim.n(), dim.n()),
        }
    }

    pub fn from_matrix(g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != g.ncols() || !(g.nrows() == 3 || g.nrows() == 7) {
            return Err(Error::DimensionMismatch(format!(
                "metric must be 3x3 or 7x7, got {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        Ok(Metric { g })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn apply(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.g.nrows();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += u[i] * self.g[(i, j)] * v[j];
            }
        }
        s
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .all(|&e| e > 0.0)
    }
}

/// Signed shuffles of `{0..7}` into blocks of sizes 2, 2, 3.
fn shuffles_223() -> &'static [(i8, [usize; 7])] {
    static CELL: OnceLock<Vec<(i8, [usize; 7])>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = Vec::with_capacity(210);
        for a1 in 0..7 {
            for a2 in (a1 + 1)..7 {
                for b1 in 0..7 {
                    for b2 in (b1 + 1)..7 {
                        if [a1, a2].contains(&b1) || [a1, a2].contains(&b2) {
                            continue;
                        }
                        let rest: Vec<usize> =
                            (0..7).filter(|x| ![a1, a2, b1, b2].contains(x)).collect();
                        let p = [a1, a2, b1, b2, rest[0], rest[1], rest[2]];
                        let mut inv = 0;
                        for i in 0..7 {
                            for j in (i + 1)..7 {
                                if p[i] > p[j] {
                                    inv += 1;
                                }
                            }
                        }
                        out.push((if inv % 2 == 0 { 1 } else { -1 }, p));
                    }
                }
            }
        }
        out
    })
}

/// `B(m, n) = ⋆(λ(m,·,·) ∧ λ(n,·,·) ∧ λ)` against `e¹∧…∧e⁷`, on basis pairs.
pub fn conformal_pairing(form: &ThreeForm) -> Result<DMatrix<f64>> {
    if form.dim() != Dim::Seven {
        return Err(Error::DimensionMismatch(
            "the wedge pairing is defined in 7-D only".into(),
        ));
    }
    let sh = shuffles_223();
    let mut b = DMatrix::zeros(7, 7);
    for m in 0..7 {
        for n in m..7 {
            let mut s = 0.0;
            for (sign, p) in sh {
                let a = form.get(m, p[0], p[1]);
                if a == 0.0 {
                    continue;
                }
                let c = form.get(n, p[2], p[3]);
                if c == 0.0 {
                    continue;
                }
                s += *sign as f64 * a * c * form.get(p[4], p[5], p[6]);
            }
            b[(m, n)] = s;
            b[(n, m)] = s;
        }
    }
    Ok(b)
}

/// Bilinear vector product recovered from a form and a metric:
/// `g(bracket(a, b), c) = λ(a, b, c)`.
#[derive(Clone, Debug)]
pub struct Bracket {
    form: ThreeForm,
    ginv: DMatrix<f64>,
}

impl Bracket {
    pub fn dim(&self) -> Dim {
        self.form.dim()
    }

    pub fn apply(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let n = self.form.dim().n();
        let w = DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += a[i] * b[j] * self.form.get(i, j, k);
                }
            }
            s
        });
        (&self.ginv * w).iter().copied().collect()
    }
}

pub fn cross_from_form(form: &ThreeForm, g: &Metric) -> Result<Bracket> {
    let n = form.dim().n();
    if g.matrix().nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "metric is {}x{}, form has dim {n}",
            g.matrix().nrows(),
            g.matrix().ncols()
        )));
    }
    let sv = g.matrix().clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smax == 0.0 || smin <= 1e-12 * smax {
        return Err(Error::SingularMetric(smin));
    }
    let ginv = g
        .matrix()
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMetric(smin))?;
    Ok(Bracket {
        form: form.clone(),
        ginv,
    })
}

/// Residual vector of `[m,[m,n]] + g(m,m) n − g(m,n) m`.
fn double_cross_residual(br: &Bracket, g: &Metric, m: &[f64], n: &[f64]) -> (Vec<f64>, f64) {
    let inner = br.apply(m, n);
    let lhs = br.apply(m, &inner);
    let gmm = g.apply(m, m);
    let gmn = g.apply(m, n);
    let rhs: Vec<f64> = (0..m.len()).map(|i| -gmm * n[i] + gmn * m[i]).collect();
    let scale = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
    let res: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| l - r).collect();
    (res, scale)
}

/// Metric determined by a three-form.
///
/// In 7-D the conformal class comes from [`conformal_pairing`]; the
/// representative is the multiple for which the reconstructed vector
/// product satisfies `[m,[m,n]] = −(m,m) n + (m,n) m`. The scale is solved
/// on the probe pair `(e1, e2)` and checked on 50 further pairs; it may be
/// negative, since the pairing is taken against the coordinate volume and
/// the standard form induces the opposite orientation. In 3-D the
/// metric is the Euclidean one rescaled so that its volume form is `λ`.
pub fn metric_from_form(form: &ThreeForm) -> Result<Metric> {
    match form.dim() {
        Dim::Three => {
            let c = form.get(0, 1, 2);
            if c == 0.0 {
                return Err(Error::DegenerateForm("vanishing volume form".into()));
            }
            let s = c.abs().powf(2.0 / 3.0);
            Metric::from_matrix(DMatrix::identity(3, 3) * s)
        }
        Dim::Seven => {
            let b = conformal_pairing(form)?;
            let eig = b.clone().symmetric_eigen().eigenvalues;
            let (emin, emax) = (eig.min(), eig.max());
            let scale = emax.abs().max(emin.abs());
            if scale == 0.0 || emin * emax <= 0.0 || emin.abs().min(emax.abs()) < 1e-12 * scale {
                return Err(Error::DegenerateForm(format!(
                    "wedge pairing is not definite (eigenvalues in [{emin:e}, {emax:e}])"
                )));
            }
            let unit = Metric::from_matrix(b.clone())?;
            let br = cross_from_form(form, &unit)?;
            let (m, n) = (basis_vec(7, 0), basis_vec(7, 1));
            let inner = br.apply(&m, &n);
            let lhs = br.apply(&m, &inner);
            let rhs: Vec<f64> = (0..7)
                .map(|i| -unit.apply(&m, &m) * n[i] + unit.apply(&m, &n) * m[i])
                .collect();
            let num: f64 = lhs.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            let den: f64 = rhs.iter().map(|x| x * x).sum();
            if den == 0.0 || num == 0.0 {
                return Err(Error::DegenerateForm(
                    "probe pair does not determine the scale".into(),
                ));
            }
            // lhs scales as c^-2 and rhs as c under g = c B
            let c = (num / den).cbrt();
            let g = Metric::from_matrix(b * c)?;
            if !g.is_positive_definite() {
                return Err(Error::DegenerateForm("rescaled metric is not definite".into()));
            }
            let br = cross_from_form(form, &g)?;
            let mut rng = crate::sampling::seeded_rng(crate::sampling::DEFAULT_SEED);
            for _ in 0..50 {
                let m = gaussian_vec(&mut rng, 7);
                let n = gaussian_vec(&mut rng, 7);
                let (res, scale) = double_cross_residual(&br, &g, &m, &n);
                let r = res.iter().map(|x| x * x).sum::<f64>().sqrt();
                if r > 1e-8 * scale.max(1e-300) {
                    return Err(Error::DegenerateForm(format!(
                        "no rescaling satisfies the double-cross identity (residual {r:e})"
                    )));
                }
            }
            Ok(g)
        }
    }
}

fn basis_vec(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyReport {
    pub ok: bool,
    /// Largest kernel dimension of `λ(l,·,·)` seen over the samples.
    pub worst_kernel_dim: usize,
    pub samples: usize,
    pub failures: usize,
}

/// Checks that `λ(l,·,·)` has kernel exactly `span{l}` on
/// [`NONDEGENERACY_SAMPLES`] quasi-uniform unit directions.
pub fn nondegeneracy_check(form: &ThreeForm) -> NondegeneracyReport {
    nondegeneracy_check_with(form, NONDEGENERACY_SAMPLES)
}

pub fn nondegeneracy_check_with(form: &ThreeForm, samples: usize) -> NondegeneracyReport {
    let n = form.dim().n();
    let mut worst = 0;
    let mut failures = 0;
    for l in sphere_points(n, samples) {
        let kernel = n - numerical_rank(&form.contract(&l));
        worst = worst.max(kernel);
        if kernel != 1 {
            failures += 1;
        }
    }
    NondegeneracyReport {
        ok: failures == 0,
        worst_kernel_dim: worst,
        samples,
        failures,
    }
}

/// True iff `|λ(Ae_i, Ae_j, Ae_k) − λ_{ijk}| < tol` on all basis triples.
pub fn is_g2_element(a: &LinearMap7, form: &ThreeForm, tol: f64) -> bool {
    g2_defect(a, form) < tol
}

/// `max |λ(Ae_i, Ae_j, Ae_k) − λ_{ijk}|`.
pub fn g2_defect(a: &LinearMap7, form: &ThreeForm) -> f64 {
    let a = DMatrix::from_column_slice(7, 7, a.as_slice());
    match form.pullback(&a) {
        Ok(p) => p.max_abs_diff(form),
        Err(_) => f64::INFINITY,
    }
}

/// An admissible triple `(i, j, l)` for the adapted-basis construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple {
    pub i: ImVector,
    pub j: ImVector,
    pub l: ImVector,
}

impl Triple {
    pub fn new(i: ImVector, j: ImVector, l: ImVector) -> Self {
        Triple { i, j, l }
    }

    pub fn basis(i: usize, j: usize, l: usize) -> Self {
        Triple {
            i: ImVector::basis(Dim::Seven, i),
            j: ImVector::basis(Dim::Seven, j),
            l: ImVector::basis(Dim::Seven, l),
        }
    }

    fn check(&self) -> Result<(ImVector, ImVector, ImVector)> {
        for v in [&self.i, &self.j, &self.l] {
            if v.dim() != Dim::Seven {
                return Err(Error::BadTriple("triples live in 7-D".into()));
            }
            if v.norm() == 0.0 {
                return Err(Error::BadTriple("zero vector".into()));
            }
        }
        let (i, j, l) = (self.i.normalized(), self.j.normalized(), self.l.normalized());
        let k = cross(&i, &j);
        for (name, d) in [
            ("i·j", i.dot(&j)),
            ("i·l", i.dot(&l)),
            ("j·l", j.dot(&l)),
            ("(i×j)·l", k.dot(&l)),
        ] {
            if d.abs() > TRIPLE_TOL {
                return Err(Error::BadTriple(format!("{name} = {d:e}")));
            }
        }
        Ok((i, j, l))
    }
}

/// Random admissible triple (Gaussian directions, Gram–Schmidt).
pub fn random_triple<R: Rng>(rng: &mut R) -> Triple {
    let mut pick = |against: &[ImVector]| loop {
        let mut v = ImVector::from_slice(Dim::Seven, &gaussian_vec(rng, 7)).unwrap();
        for a in against {
            v = v - a.scale(v.dot(a));
        }
        if v.norm() > 1e-3 {
            return v.normalized();
        }
    };
    let i = pick(&[]);
    let j = pick(&[i]);
    let k = cross(&i, &j);
    let l = pick(&[i, j, k]);
    Triple { i, j, l }
}

/// Ordered basis `{1, i, j, k, l, i×l, j×l, k×l}` with `k = i × j`.
pub fn adapted_basis(t: &Triple) -> Result<[Octonion; 8]> {
    let (i, j, l) = t.check()?;
    let k = cross(&i, &j);
    let v = [i, j, k, l, cross(&i, &l), cross(&j, &l), cross(&k, &l)];
    let mut out = [Octonion::one(); 8];
    for (slot, x) in out.iter_mut().skip(1).zip(v) {
        *slot = x.to_octonion();
    }
    for a in 0..8 {
        for b in 0..8 {
            let d = out[a].dot(&out[b]) - if a == b { 1.0 } else { 0.0 };
            if d.abs() > 1e-9 {
                return Err(Error::BadTriple(format!(
                    "adapted basis not orthonormal at ({a},{b}): {d:e}"
                )));
            }
        }
    }
    Ok(out)
}

/// Structure constants `c[a][b][c] = (x_a x_b, x_c)` of an octonion basis.
pub fn structure_constants(basis: &[Octonion; 8]) -> Vec<f64> {
    let mut out = Vec::with_capacity(512);
    for a in basis {
        for b in basis {
            let p = *a * *b;
            for c in basis {
                out.push(p.dot(c));
            }
        }
    }
    out
}

/// Map carrying `adapted_basis(t1)` onto `adapted_basis(t2)`, restricted to
/// the imaginary part.
pub fn automorphism_from_triples(t1: &Triple, t2: &Triple) -> Result<LinearMap7> {
    let b1 = adapted_basis(t1)?;
    let b2 = adapted_basis(t2)?;
    let mut a = LinearMap7::zeros();
    for m in 1..8 {
        let src = b1[m].im();
        let dst = b2[m].im();
        for r in 0..7 {
            for c in 0..7 {
                a[(r, c)] += dst[r] * src[c];
            }
        }
    }
    Ok(a)
}

/// A 4-plane in `ℝ⁷` given by an orthonormal basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicPlane {
    basis: [ImVector; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalityReport {
    pub probes: usize,
    /// Smallest (over probes) largest `|λ|` on the enlarged 5-plane.
    pub min_violation: f64,
    pub maximal: bool,
}

impl IsotropicPlane {
    pub fn from_basis(basis: [ImVector; 4]) -> Result<Self> {
        let mut out: Vec<ImVector> = Vec::with_capacity(4);
        for v in basis {
            if v.dim() != Dim::Seven {
                return Err(Error::DimensionMismatch("plane vectors must be 7-D".into()));
            }
            let mut w = v;
            for u in &out {
                w = w - u.scale(w.dot(u));
            }
            if w.norm() < 1e-10 {
                return Err(Error::BadTriple("plane basis is linearly dependent".into()));
            }
            out.push(w.normalized());
        }
        Ok(IsotropicPlane {
            basis: [out[0], out[1], out[2], out[3]],
        })
    }

    pub fn basis(&self) -> &[ImVector; 4] {
        &self.basis
    }

    /// Largest `|λ|` over the four basis triples.
    pub fn max_form_value(&self, form: &ThreeForm) -> f64 {
        let b = &self.basis;
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for c in (a + 1)..4 {
                for d in (c + 1)..4 {
                    m = m.max(form.eval_vec(&b[a], &b[c], &b[d]).abs());
                }
            }
        }
        m
    }

    pub fn is_isotropic(&self, form: &ThreeForm, tol: f64) -> bool {
        self.max_form_value(form) < tol
    }

    pub fn project(&self, v: &ImVector) -> ImVector {
        let mut p = ImVector::zero(Dim::Seven);
        for b in &self.basis {
            p = p + b.scale(v.dot(b));
        }
        p
    }

    pub fn contains(&self, v: &ImVector, tol: f64) -> bool {
        (*v - self.project(v)).norm() <= tol * v.norm().max(1.0)
    }

    /// Adds `probes` quasi-uniform unit directions of `L^⊥` one at a time
    /// and records how far `λ` is from vanishing on the 5-plane.
    pub fn probe_maximality(&self, form: &ThreeForm, probes: usize) -> MaximalityReport {
        let mut min_violation = f64::INFINITY;
        let mut used = 0;
        for p in sphere_points(7, 4 * probes) {
            if used == probes {
                break;
            }
            let v = ImVector::from_slice(Dim::Seven, &p).unwrap();
            let w = v - self.project(&v);
            if w.norm() < 0.1 {
                continue;
            }
            let w = w.normalized();
            used += 1;
            let five = [self.basis[0], self.basis[1], self.basis[2], self.basis[3], w];
            let mut m: f64 = 0.0;
            for a in 0..5 {
                for b in (a + 1)..5 {
                    for c in (b + 1)..5 {
                        m = m.max(form.eval_vec(&five[a], &five[b], &five[c]).abs());
                    }
                }
            }
            min_violation = min_violation.min(m);
        }
        MaximalityReport {
            probes: used,
            min_violation,
            maximal: used == probes && min_violation > 1e-6,
        }
    }

    /// Matrix of `(L_a, A L_b)`, the restriction of `A` to the plane.
    pub fn restrict(&self, a: &LinearMap7) -> Matrix4<f64> {
        let mut r = Matrix4::zeros();
        for (col, lb) in self.basis.iter().enumerate() {
            let img = a * nalgebra::SVector::<f64, 7>::from_column_slice(lb.as_slice());
            for (row, la) in self.basis.iter().enumerate() {
                r[(row, col)] = la.as_slice().iter().zip(img.iter()).map(|(x, y)| x * y).sum();
            }
        }
        r
    }
}

/// `span{i, j, l, (i×j)×l}`.
pub fn isotropic_plane(t: &Triple) -> Result<IsotropicPlane> {
    let (i, j, l) = t.check()?;
    let k = cross(&i, &j);
    IsotropicPlane::from_basis([i, j, l, cross(&k, &l)])
}

/// Standard associative form, cached.
pub fn phi() -> &'static ThreeForm {
    static PHI: OnceLock<ThreeForm> = OnceLock::new();
    PHI.get_or_init(|| standard_three_form(Dim::Seven))
}
