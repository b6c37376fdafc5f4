//! Discrete loops, normal fields, the transgressed 2-form and the
//! almost-complex operator on the normal bundle.
//!
//! A loop is stored as `n` uniformly spaced samples `γ(z_k)`, `z_k = k·P/n`,
//! flattened row-major (`n × dim`). The period `P` is `2π` unless a loop is
//! explicitly reparametrized by arc length.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cayley::{assoc_form_slice, cross_into, dot_slice, Dim, ThreeForm};
use crate::g2struct::numerical_rank;
use crate::spectral::{antiderivative, interpolate, Spectral};
use crate::{Error, Result};

pub const MIN_SAMPLES: usize = 8;
/// Default immersion threshold on `|γ'|`.
pub const IMMERSION_EPS: f64 = 1e-8;
/// Relative tolerance for `X_k ⟂ γ'(z_k)`.
pub const NORMAL_TOL: f64 = 1e-10;

pub const LOOP_CSV_VERSION: u32 = 1;
pub const FIELD_JSON_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLoop {
    dim: Dim,
    period: f64,
    n: usize,
    pts: Vec<f64>,
}

fn check_len(dim: Dim, len: usize) -> Result<usize> {
    let d = dim.n();
    if len % d != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{len} values do not form rows of length {d}"
        )));
    }
    let n = len / d;
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples { got: n, min: MIN_SAMPLES });
    }
    Ok(n)
}

/// Forward coefficients of each column of an `n × d` flattened array.
fn column_coeffs(sp: &Spectral, d: usize, data: &[f64]) -> Vec<Vec<Complex64>> {
    let n = sp.n();
    (0..d)
        .map(|c| {
            let col: Vec<f64> = (0..n).map(|k| data[k * d + c]).collect();
            sp.forward(&col)
        })
        .collect()
}

fn from_columns(n: usize, cols: &[Vec<f64>]) -> Vec<f64> {
    let d = cols.len();
    let mut out = vec![0.0; n * d];
    for (c, col) in cols.iter().enumerate() {
        for k in 0..n {
            out[k * d + c] = col[k];
        }
    }
    out
}

/// Spectral derivatives of several orders of an `n × d` array sharing one
/// forward transform per column.
pub fn spectral_derivatives(sp: &Spectral, d: usize, data: &[f64], orders: &[usize]) -> Vec<Vec<f64>> {
    let coeffs = column_coeffs(sp, d, data);
    orders
        .iter()
        .map(|&o| {
            let cols: Vec<Vec<f64>> = coeffs.iter().map(|c| sp.derivative_from_coeffs(c, o)).collect();
            from_columns(sp.n(), &cols)
        })
        .collect()
}

impl DiscreteLoop {
    /// Loop on `[0, 2π)` from flattened samples.
    pub fn new(dim: Dim, pts: Vec<f64>) -> Result<Self> {
        Self::with_period(dim, TAU, pts)
    }

    pub fn with_period(dim: Dim, period: f64, pts: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        let n = check_len(dim, pts.len())?;
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("loop samples must be finite".into()));
        }
        Ok(DiscreteLoop { dim, period, n, pts })
    }

    pub fn from_fn(dim: Dim, n: usize, period: f64, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut pts = Vec::with_capacity(n * dim.n());
        for k in 0..n {
            let p = f(period * k as f64 / n as f64);
            if p.len() != dim.n() {
                return Err(Error::DimensionMismatch(format!(
                    "sample has {} components, expected {}",
                    p.len(),
                    dim.n()
                )));
            }
            pts.extend(p);
        }
        Self::with_period(dim, period, pts)
    }

    /// Unit-parameter circle `γ(z) = r(cos z, sin z, 0, …)` on `[0, 2π)`.
    pub fn circle(dim: Dim, radius: f64, n: usize) -> Result<Self> {
        Self::from_fn(dim, n, TAU, |z| {
            let mut p = vec![0.0; dim.n()];
            p[0] = radius * z.cos();
            p[1] = radius * z.sin();
            p
        })
    }

    /// Arc-length circle of radius `r` in the e1e2-plane (period `2πr`, unit speed).
    pub fn arclength_circle(dim: Dim, radius: f64, n: usize) -> Result<Self> {
        Self::from_fn(dim, n, TAU * radius, |s| {
            let mut p = vec![0.0; dim.n()];
            p[0] = radius * (s / radius).cos();
            p[1] = radius * (s / radius).sin();
            p
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dz(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        self.period * k as f64 / self.n as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.pts
    }

    pub fn points_mut(&mut self) -> &mut [f64] {
        &mut self.pts
    }

    pub fn into_points(self) -> Vec<f64> {
        self.pts
    }

    pub fn point(&self, k: usize) -> &[f64] {
        let d = self.dim.n();
        &self.pts[k * d..(k + 1) * d]
    }

    pub fn spectral(&self) -> Spectral {
        Spectral::new(self.n, self.period)
    }

    /// Samples of `dᵒγ/dzᵒ`, flattened `n × dim`.
    pub fn derivative(&self, order: usize) -> Result<Vec<f64>> {
        Ok(self.derivatives(&[order])?.remove(0))
    }

    pub fn derivatives(&self, orders: &[usize]) -> Result<Vec<Vec<f64>>> {
        if self.n < MIN_SAMPLES {
            return Err(Error::TooFewSamples { got: self.n, min: MIN_SAMPLES });
        }
        Ok(spectral_derivatives(&self.spectral(), self.dim.n(), &self.pts, orders))
    }

    pub fn tangent(&self) -> Result<Vec<f64>> {
        self.derivative(1)
    }

    pub fn speeds(&self) -> Result<Vec<f64>> {
        let d = self.dim.n();
        Ok(self.tangent()?.chunks(d).map(|t| dot_slice(t, t).sqrt()).collect())
    }

    pub fn check_immersed(&self, eps: f64) -> Result<()> {
        check_speeds(&self.speeds()?, eps)
    }

    /// Tangent samples after checking immersion against [`IMMERSION_EPS`].
    pub fn immersed_tangent(&self) -> Result<Vec<f64>> {
        let t = self.tangent()?;
        let d = self.dim.n();
        let sp: Vec<f64> = t.chunks(d).map(|v| dot_slice(v, v).sqrt()).collect();
        check_speeds(&sp, IMMERSION_EPS)?;
        Ok(t)
    }

    pub fn length(&self) -> Result<f64> {
        Ok(self.speeds()?.iter().sum::<f64>() * self.dz())
    }

    /// Band-limited interpolant evaluated at `z`.
    pub fn eval_at(&self, z: f64) -> Vec<f64> {
        let coeffs = column_coeffs(&self.spectral(), self.dim.n(), &self.pts);
        coeffs.iter().map(|c| interpolate(c, self.period, z)).collect()
    }

    /// Samples `γ(φ(z_k))` of the interpolant, keeping the period.
    pub fn reparametrize(&self, phi: impl Fn(f64) -> f64) -> Result<Self> {
        let coeffs = column_coeffs(&self.spectral(), self.dim.n(), &self.pts);
        let zs: Vec<f64> = (0..self.n).map(|k| phi(self.z(k))).collect();
        let pts = sample_columns(&coeffs, self.period, &zs);
        Self::with_period(self.dim, self.period, pts)
    }

    /// Unit-speed resampling: period becomes the length, `|γ'| = 1`.
    pub fn arclength_normalized(&self) -> Result<Self> {
        let (zs, length) = self.arclength_nodes()?;
        let coeffs = column_coeffs(&self.spectral(), self.dim.n(), &self.pts);
        let pts = sample_columns(&coeffs, self.period, &zs);
        Self::with_period(self.dim, length, pts)
    }

    /// Parameters `z_j` with `s(z_j) = j·L/n` and the length `L`.
    pub fn arclength_nodes(&self) -> Result<(Vec<f64>, f64)> {
        let speeds = self.speeds()?;
        check_speeds(&speeds, IMMERSION_EPS)?;
        let sp = self.spectral();
        let sc = sp.forward(&speeds);
        let p = self.period;
        let length = sc[0].re * p / self.n as f64;
        let s = |z: f64| antiderivative(&sc, p, z);
        let mut zs = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let target = length * j as f64 / self.n as f64;
            let (mut lo, mut hi) = (0.0, p);
            let mut z = p * j as f64 / self.n as f64;
            for _ in 0..100 {
                let f = s(z) - target;
                if f.abs() < 1e-15 * length.max(1.0) {
                    break;
                }
                if f > 0.0 {
                    hi = z;
                } else {
                    lo = z;
                }
                let v = interpolate(&sc, p, z);
                let mut next = z - f / v;
                if !(next > lo && next < hi) || v <= 0.0 {
                    next = 0.5 * (lo + hi);
                }
                if (next - z).abs() < 1e-16 * p {
                    z = next;
                    break;
                }
                z = next;
            }
            zs.push(z);
        }
        Ok((zs, length))
    }

    /// Writes `z,x1..x_dim` CSV preceded by a versioned comment line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# g2loop-loop v{} dim={} n={} period={}",
            LOOP_CSV_VERSION,
            self.dim.n(),
            self.n,
            self.period
        )?;
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["z".to_string()];
        header.extend((1..=self.dim.n()).map(|i| format!("x{i}")));
        wr.write_record(&header)?;
        for k in 0..self.n {
            let mut row = vec![format!("{}", self.z(k))];
            row.extend(self.point(k).iter().map(|x| format!("{x}")));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the CSV format of [`write_csv`](Self::write_csv). The period is
    /// taken from the uniform `z` column.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "z" {
            return Err(Error::Parse("loop csv must start with a `z` column".into()));
        }
        let dim = Dim::from_usize(headers.len() - 1)?;
        let mut zs = Vec::new();
        let mut pts = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
                .collect::<Result<_>>()?;
            zs.push(vals[0]);
            pts.extend_from_slice(&vals[1..]);
        }
        let n = zs.len();
        if n < MIN_SAMPLES {
            return Err(Error::TooFewSamples { got: n, min: MIN_SAMPLES });
        }
        let period = (zs[1] - zs[0]) * n as f64;
        for (k, z) in zs.iter().enumerate() {
            let expect = zs[0] + period * k as f64 / n as f64;
            if (z - expect).abs() > 1e-9 * period.abs().max(1.0) {
                return Err(Error::Parse(format!("z column is not uniform at row {k}")));
            }
        }
        Self::with_period(dim, period, pts)
    }
}

fn check_speeds(speeds: &[f64], eps: f64) -> Result<()> {
    for (index, &speed) in speeds.iter().enumerate() {
        if !(speed > eps) {
            return Err(Error::NotImmersed { index, speed });
        }
    }
    Ok(())
}

fn sample_columns(coeffs: &[Vec<Complex64>], period: f64, zs: &[f64]) -> Vec<f64> {
    let d = coeffs.len();
    let mut out = vec![0.0; zs.len() * d];
    for (k, &z) in zs.iter().enumerate() {
        for (c, cc) in coeffs.iter().enumerate() {
            out[k * d + c] = interpolate(cc, period, z);
        }
    }
    out
}

/// Vector field along a loop, orthogonal to its tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    dim: Dim,
    n: usize,
    v: Vec<f64>,
}

impl NormalField {
    /// Validates `|⟨X_k, γ'_k⟩| < 1e−10·|γ'_k||X_k|`.
    pub fn new(gamma: &DiscreteLoop, v: Vec<f64>) -> Result<Self> {
        Self::check_shape(gamma, &v)?;
        let t = gamma.immersed_tangent()?;
        let d = gamma.dim.n();
        for k in 0..gamma.n {
            let tk = &t[k * d..(k + 1) * d];
            let xk = &v[k * d..(k + 1) * d];
            let scale = dot_slice(tk, tk).sqrt() * dot_slice(xk, xk).sqrt();
            let defect = dot_slice(tk, xk).abs();
            if defect > NORMAL_TOL * scale {
                return Err(Error::NotNormal { index: k, defect: defect / scale });
            }
        }
        Ok(NormalField { dim: gamma.dim, n: gamma.n, v })
    }

    pub fn zero(gamma: &DiscreteLoop) -> Self {
        NormalField { dim: gamma.dim, n: gamma.n, v: vec![0.0; gamma.pts.len()] }
    }

    fn check_shape(gamma: &DiscreteLoop, v: &[f64]) -> Result<()> {
        if v.len() != gamma.pts.len() {
            return Err(Error::DimensionMismatch(format!(
                "field has {} values, loop has {}",
                v.len(),
                gamma.pts.len()
            )));
        }
        Ok(())
    }

    fn check_on(&self, gamma: &DiscreteLoop) -> Result<()> {
        if self.dim != gamma.dim || self.n != gamma.n {
            return Err(Error::DimensionMismatch(format!(
                "field is {}×{}, loop is {}×{}",
                self.n,
                self.dim.n(),
                gamma.n,
                gamma.dim.n()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let d = self.dim.n();
        &self.v[k * d..(k + 1) * d]
    }

    pub fn max_norm(&self) -> f64 {
        self.v.chunks(self.dim.n()).map(|x| dot_slice(x, x).sqrt()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &NormalField) -> NormalField {
        let v = self.v.iter().zip(&other.v).map(|(a, b)| a + b).collect();
        NormalField { dim: self.dim, n: self.n, v }
    }

    pub fn scaled(&self, s: f64) -> NormalField {
        NormalField { dim: self.dim, n: self.n, v: self.v.iter().map(|a| a * s).collect() }
    }

    /// Field `X∘φ` on `gamma_phi = γ∘φ`, reprojected onto its normal bundle.
    pub fn reparametrize(
        &self,
        gamma: &DiscreteLoop,
        gamma_phi: &DiscreteLoop,
        phi: impl Fn(f64) -> f64,
    ) -> Result<NormalField> {
        self.check_on(gamma)?;
        let coeffs = column_coeffs(&gamma.spectral(), self.dim.n(), &self.v);
        let zs: Vec<f64> = (0..gamma_phi.n).map(|k| phi(gamma_phi.z(k))).collect();
        project_normal(gamma_phi, &sample_columns(&coeffs, gamma.period, &zs))
    }

    pub fn to_json(&self) -> Result<String> {
        let f = FieldFile {
            format: "g2loop-field".into(),
            version: FIELD_JSON_VERSION,
            dim: self.dim.n(),
            n: self.n,
            vectors: self.v.chunks(self.dim.n()).map(|c| c.to_vec()).collect(),
        };
        Ok(serde_json::to_string_pretty(&f)?)
    }
}

/// On-disk layout of a field along a loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldFile {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub n: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl FieldFile {
    pub fn from_json(s: &str) -> Result<Self> {
        let f: FieldFile = serde_json::from_str(s)?;
        if f.format != "g2loop-field" {
            return Err(Error::Parse(format!("unexpected format `{}`", f.format)));
        }
        if f.vectors.len() != f.n || f.vectors.iter().any(|v| v.len() != f.dim) {
            return Err(Error::Parse("field shape does not match its header".into()));
        }
        Ok(f)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.vectors.concat()
    }
}

/// `X_k = V_k − (⟨V_k,t_k⟩/⟨t_k,t_k⟩)·t_k`.
pub fn project_normal(gamma: &DiscreteLoop, v: &[f64]) -> Result<NormalField> {
    NormalField::check_shape(gamma, v)?;
    let t = gamma.immersed_tangent()?;
    let d = gamma.dim.n();
    let mut out = v.to_vec();
    for k in 0..gamma.n {
        let tk = &t[k * d..(k + 1) * d];
        let c = dot_slice(&v[k * d..(k + 1) * d], tk) / dot_slice(tk, tk);
        for i in 0..d {
            out[k * d + i] -= c * tk[i];
        }
    }
    Ok(NormalField { dim: gamma.dim, n: gamma.n, v: out })
}

/// `ω(X, Y) = ∮ λ(γ', X, Y) dz`.
///
/// Uniform samples of a periodic integrand: the sample mean times the
/// period is both the trapezoidal and the spectral rule.
pub fn transgressed_form(gamma: &DiscreteLoop, x: &NormalField, y: &NormalField, form: &ThreeForm) -> Result<f64> {
    x.check_on(gamma)?;
    y.check_on(gamma)?;
    if form.dim() != gamma.dim {
        return Err(Error::DimensionMismatch("form and loop dimensions differ".into()));
    }
    let t = gamma.immersed_tangent()?;
    let d = gamma.dim.n();
    let s: f64 = (0..gamma.n)
        .map(|k| {
            let r = k * d..(k + 1) * d;
            form.eval(&t[r.clone()], &x.v[r.clone()], &y.v[r])
        })
        .sum();
    Ok(s * gamma.dz())
}

/// Same as [`transgressed_form`] with the structure's own form, using the
/// cross-product kernel.
pub fn transgressed_standard(gamma: &DiscreteLoop, x: &NormalField, y: &NormalField) -> Result<f64> {
    x.check_on(gamma)?;
    y.check_on(gamma)?;
    let t = gamma.immersed_tangent()?;
    let d = gamma.dim.n();
    let s: f64 = (0..gamma.n)
        .map(|k| {
            let r = k * d..(k + 1) * d;
            assoc_form_slice(gamma.dim, &t[r.clone()], &x.v[r.clone()], &y.v[r])
        })
        .sum();
    Ok(s * gamma.dz())
}

/// `(JX)_k = t̂_k × X_k`.
pub fn complex_structure(gamma: &DiscreteLoop, x: &NormalField) -> Result<NormalField> {
    x.check_on(gamma)?;
    let t = gamma.immersed_tangent()?;
    let d = gamma.dim.n();
    let mut out = vec![0.0; x.v.len()];
    let mut that = vec![0.0; d];
    for k in 0..gamma.n {
        let tk = &t[k * d..(k + 1) * d];
        let s = dot_slice(tk, tk).sqrt();
        for i in 0..d {
            that[i] = tk[i] / s;
        }
        cross_into(gamma.dim, &that, &x.v[k * d..(k + 1) * d], &mut out[k * d..(k + 1) * d]);
    }
    Ok(NormalField { dim: x.dim, n: x.n, v: out })
}

/// `∮ ⟨X, Y⟩ dz`.
pub fn l2_pairing(gamma: &DiscreteLoop, x: &NormalField, y: &NormalField) -> Result<f64> {
    x.check_on(gamma)?;
    y.check_on(gamma)?;
    let d = gamma.dim.n();
    let s: f64 = x.v.chunks(d).zip(y.v.chunks(d)).map(|(a, b)| dot_slice(a, b)).sum();
    Ok(s * gamma.dz())
}

/// `∮ ⟨X, Y⟩ |γ'| dz`, the pairing against arc length.
pub fn arclength_pairing(gamma: &DiscreteLoop, x: &NormalField, y: &NormalField) -> Result<f64> {
    x.check_on(gamma)?;
    y.check_on(gamma)?;
    let sp = gamma.speeds()?;
    let d = gamma.dim.n();
    let s: f64 = x
        .v
        .chunks(d)
        .zip(y.v.chunks(d))
        .zip(&sp)
        .map(|((a, b), w)| w * dot_slice(a, b))
        .sum();
    Ok(s * gamma.dz())
}

/// Smallest rank of `λ(t_k, ·, ·)` over the samples; full rank is `dim − 1`.
pub fn min_contraction_rank(gamma: &DiscreteLoop, form: &ThreeForm) -> Result<usize> {
    let t = gamma.immersed_tangent()?;
    Ok(t.chunks(gamma.dim.n()).map(|tk| numerical_rank(&form.contract(tk))).min().unwrap_or(0))
}

pub fn nondegeneracy_probe(gamma: &DiscreteLoop, form: &ThreeForm) -> Result<bool> {
    Ok(min_contraction_rank(gamma, form)? == gamma.dim.n() - 1)
}

/// Random trigonometric loop: a circle of radius 1 in a random plane plus
/// harmonics `1..=modes` with amplitudes `amp/k²`. Retries until immersed.
pub fn random_loop<R: Rng>(rng: &mut R, dim: Dim, n: usize, modes: usize, amp: f64) -> Result<DiscreteLoop> {
    let d = dim.n();
    loop {
        let u = crate::sampling::gaussian_vec(rng, d);
        let w = crate::sampling::gaussian_vec(rng, d);
        let (e1, e2) = orthonormal_pair(&u, &w);
        let cs: Vec<(Vec<f64>, Vec<f64>)> = (0..modes)
            .map(|_| (crate::sampling::gaussian_vec(rng, d), crate::sampling::gaussian_vec(rng, d)))
            .collect();
        let g = DiscreteLoop::from_fn(dim, n, TAU, |z| {
            let mut p: Vec<f64> = (0..d).map(|i| e1[i] * z.cos() + e2[i] * z.sin()).collect();
            for (k, (a, b)) in cs.iter().enumerate() {
                let kk = (k + 1) as f64;
                let s = amp / (kk * kk);
                for i in 0..d {
                    p[i] += s * (a[i] * (kk * z).cos() + b[i] * (kk * z).sin());
                }
            }
            p
        })?;
        if g.check_immersed(0.05).is_ok() {
            return Ok(g);
        }
    }
}

fn orthonormal_pair(u: &[f64], w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nu = dot_slice(u, u).sqrt();
    let e1: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let c = dot_slice(w, &e1);
    let mut e2: Vec<f64> = w.iter().zip(&e1).map(|(a, b)| a - c * b).collect();
    let n2 = dot_slice(&e2, &e2).sqrt();
    e2.iter_mut().for_each(|x| *x /= n2);
    (e1, e2)
}

/// Random band-limited field projected onto the normal bundle.
pub fn random_normal_field<R: Rng>(rng: &mut R, gamma: &DiscreteLoop, modes: usize) -> Result<NormalField> {
    let d = gamma.dim.n();
    let cs: Vec<(Vec<f64>, Vec<f64>)> = (0..=modes)
        .map(|_| (crate::sampling::gaussian_vec(rng, d), crate::sampling::gaussian_vec(rng, d)))
        .collect();
    let mut v = vec![0.0; gamma.n * d];
    for k in 0..gamma.n {
        let z = TAU * k as f64 / gamma.n as f64;
        for (m, (a, b)) in cs.iter().enumerate() {
            let mz = m as f64 * z;
            for i in 0..d {
                v[k * d + i] += a[i] * mz.cos() + b[i] * mz.sin();
            }
        }
    }
    project_normal(gamma, &v)
}

/// Random orientation-preserving diffeomorphism `φ(z) = z + Σ a_m sin(mz + b_m)`
/// of the circle of the given period, with `Σ m|a_m| ≤ strength < 1` in
/// rescaled units.
pub fn random_circle_diffeo<R: Rng>(rng: &mut R, period: f64, modes: usize, strength: f64) -> impl Fn(f64) -> f64 {
    let raw: Vec<(f64, f64)> = (1..=modes).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..TAU))).collect();
    let total: f64 = raw.iter().enumerate().map(|(m, (a, _))| (m + 1) as f64 * a.abs()).sum();
    let scale = if total > 0.0 { strength / total } else { 0.0 };
    let w = TAU / period;
    move |z: f64| {
        let mut s = z;
        for (m, (a, b)) in raw.iter().enumerate() {
            s += scale * a / w * ((m + 1) as f64 * w * z + b).sin();
        }
        s
    }
}
