//! The filament flow `γ̇ = γ' × γ''` on closed loops, integrated with the
//! classical fourth-order Runge–Kutta method on spectral derivatives, and
//! its three first integrals.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cayley::{assoc_form_slice, cross_into, dot_slice, Dim};
use crate::loopspace::{spectral_derivatives, DiscreteLoop, IMMERSION_EPS};
use crate::spectral::Spectral;
use crate::{Error, Result};

pub const REPORT_CSV_VERSION: u32 = 1;

/// Default constant in the dispersive step bound `dt < c·Δz²/max|γ'|`.
pub const CFL_DEFAULT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub cfl: f64,
    pub immersion_eps: f64,
    /// Apply the 2/3-rule mode filter after every step.
    pub filter: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { cfl: CFL_DEFAULT, immersion_eps: IMMERSION_EPS, filter: false }
    }
}

#[derive(Debug, Clone)]
pub struct FilamentState {
    gamma: DiscreteLoop,
    time: f64,
    tangent: Vec<f64>,
    sp: Spectral,
}

/// `γ'` and `γ' × γ''` for raw samples, plus the speed range.
fn velocity(sp: &Spectral, dim: Dim, pts: &[f64]) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let d = dim.n();
    let mut ders = spectral_derivatives(sp, d, pts, &[1, 2]);
    let g2 = ders.pop().unwrap();
    let g1 = ders.pop().unwrap();
    let mut v = vec![0.0; pts.len()];
    let (mut smin, mut smax) = (f64::INFINITY, 0.0_f64);
    for k in 0..sp.n() {
        let r = k * d..(k + 1) * d;
        let s = dot_slice(&g1[r.clone()], &g1[r.clone()]).sqrt();
        smin = smin.min(s);
        smax = smax.max(s);
        cross_into(dim, &g1[r.clone()], &g2[r.clone()], &mut v[r]);
    }
    (g1, v, smin, smax)
}

impl FilamentState {
    pub fn new(gamma: DiscreteLoop) -> Result<Self> {
        Self::at_time(gamma, 0.0)
    }

    pub fn at_time(gamma: DiscreteLoop, time: f64) -> Result<Self> {
        let tangent = gamma.immersed_tangent()?;
        let sp = gamma.spectral();
        Ok(FilamentState { gamma, time, tangent, sp })
    }

    pub fn gamma(&self) -> &DiscreteLoop {
        &self.gamma
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Cached `T = γ'` samples.
    pub fn tangent(&self) -> &[f64] {
        &self.tangent
    }

    pub fn dim(&self) -> Dim {
        self.gamma.dim()
    }

    /// Largest step accepted by the dispersive bound.
    pub fn max_dt(&self, cfg: &FlowConfig) -> f64 {
        let d = self.dim().n();
        let smax = self.tangent.chunks(d).map(|t| dot_slice(t, t).sqrt()).fold(0.0, f64::max);
        cfg.cfl * self.gamma.dz().powi(2) / smax
    }
}

/// `v_k = γ'(z_k) × γ''(z_k)`.
pub fn rhs(s: &FilamentState) -> Result<Vec<f64>> {
    let (_, v, smin, _) = velocity(&s.sp, s.dim(), s.gamma.points());
    if !(smin > IMMERSION_EPS) {
        return Err(Error::NotImmersed { index: 0, speed: smin });
    }
    Ok(v)
}

fn rk4(sp: &Spectral, dim: Dim, y: &[f64], dt: f64, eps: f64) -> Result<Vec<f64>> {
    let f = |x: &[f64]| -> Result<Vec<f64>> {
        let (_, v, smin, _) = velocity(sp, dim, x);
        if !(smin > eps) {
            return Err(Error::StepRejected(format!("loop lost immersion (min |γ'| = {smin:e})")));
        }
        Ok(v)
    };
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(yi, ki)| yi + a * ki).collect() };
    let k1 = f(y)?;
    let k2 = f(&axpy(0.5 * dt, &k1))?;
    let k3 = f(&axpy(0.5 * dt, &k2))?;
    let k4 = f(&axpy(dt, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

fn advance(s: &FilamentState, dt: f64, cfg: &FlowConfig) -> Result<FilamentState> {
    let dim = s.dim();
    let mut y = rk4(&s.sp, dim, s.gamma.points(), dt, cfg.immersion_eps)?;
    if cfg.filter {
        let d = dim.n();
        for c in 0..d {
            let mut col: Vec<f64> = (0..s.sp.n()).map(|k| y[k * d + c]).collect();
            s.sp.filter_two_thirds(&mut col);
            for (k, x) in col.into_iter().enumerate() {
                y[k * d + c] = x;
            }
        }
    }
    let gamma = DiscreteLoop::with_period(dim, s.gamma.period(), y)?;
    let tangent = gamma.tangent()?;
    let smin = tangent.chunks(dim.n()).map(|t| dot_slice(t, t).sqrt()).fold(f64::INFINITY, f64::min);
    if !(smin > cfg.immersion_eps) {
        return Err(Error::StepRejected(format!("loop lost immersion (min |γ'| = {smin:e})")));
    }
    Ok(FilamentState { gamma, time: s.time + dt, tangent, sp: s.sp.clone() })
}

/// One RK4 step after checking `dt > 0` and the dispersive bound.
pub fn step(s: &FilamentState, dt: f64, cfg: &FlowConfig) -> Result<FilamentState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::StepRejected(format!("dt must be positive, got {dt}")));
    }
    let bound = s.max_dt(cfg);
    if dt >= bound {
        return Err(Error::StepRejected(format!("dt = {dt} exceeds the stability bound {bound:.3e}")));
    }
    advance(s, dt, cfg)
}

/// `I₁ = ∮|γ'|²`, `I₂ = ½∮|T'|²`, `I₃ = ∮λ(T, T', T'')` with `T = γ'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub t: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// `∮|T||T'||T''|`, the natural size of `I₃`.
    pub i3_scale: f64,
}

pub fn conserved(s: &FilamentState) -> Result<Conserved> {
    let dim = s.dim();
    let d = dim.n();
    let ders = spectral_derivatives(&s.sp, d, s.gamma.points(), &[1, 2, 3]);
    let (g1, g2, g3) = (&ders[0], &ders[1], &ders[2]);
    let (mut i1, mut i2, mut i3, mut sc) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..s.sp.n() {
        let r = k * d..(k + 1) * d;
        let (a, b, c) = (&g1[r.clone()], &g2[r.clone()], &g3[r]);
        let na = dot_slice(a, a);
        if !(na.sqrt() > IMMERSION_EPS) {
            return Err(Error::NotImmersed { index: k, speed: na.sqrt() });
        }
        i1 += na;
        i2 += 0.5 * dot_slice(b, b);
        i3 += assoc_form_slice(dim, a, b, c);
        sc += (na * dot_slice(b, b) * dot_slice(c, c)).sqrt();
    }
    let dz = s.gamma.dz();
    Ok(Conserved { t: s.time, i1: i1 * dz, i2: i2 * dz, i3: i3 * dz, i3_scale: sc * dz })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub t: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Append-only record of the first integrals and their drifts relative to
/// the first entry. `d3` is measured against `max(|I₃(0)|, ∮|T||T'||T''|)`
/// since `I₃` vanishes on planar loops.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservedReport {
    rows: Vec<ReportRow>,
    base: Option<Conserved>,
}

impl ConservedReport {
    pub fn push(&mut self, c: Conserved) {
        let b = *self.base.get_or_insert(c);
        let rel = |x: f64, x0: f64, scale: f64| (x - x0).abs() / scale.max(f64::MIN_POSITIVE);
        self.rows.push(ReportRow {
            t: c.t,
            i1: c.i1,
            i2: c.i2,
            i3: c.i3,
            d1: rel(c.i1, b.i1, b.i1.abs()),
            d2: rel(c.i2, b.i2, b.i2.abs()),
            d3: rel(c.i3, b.i3, b.i3.abs().max(b.i3_scale)),
        });
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn max_drift(&self) -> [f64; 3] {
        self.rows
            .iter()
            .fold([0.0; 3], |m, r| [m[0].max(r.d1), m[1].max(r.d2), m[2].max(r.d3)])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# g2loop-conserved v{REPORT_CSV_VERSION}")?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "I1", "I2", "I3", "d1", "d2", "d3"])?;
        for r in &self.rows {
            wr.write_record(
                [r.t, r.i1, r.i2, r.i3, r.d1, r.d2, r.d3].iter().map(|x| format!("{x:e}")),
            )?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<FilamentState>,
    pub report: ConservedReport,
    pub final_state: FilamentState,
}

impl Trajectory {
    /// Snapshots as CSV rows `t, k, z, x1..x_dim`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.final_state.gamma;
        writeln!(
            w,
            "# g2loop-trajectory v{REPORT_CSV_VERSION} dim={} n={} period={:e}",
            g.dim(),
            g.n(),
            g.period()
        )?;
        let mut wr = csv::Writer::from_writer(w);
        let d = self.final_state.dim().n();
        let mut header = vec!["t".to_string(), "k".into(), "z".into()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        wr.write_record(&header)?;
        for s in &self.snapshots {
            for k in 0..s.gamma.n() {
                let mut row = vec![format!("{:e}", s.time), k.to_string(), format!("{:e}", s.gamma.z(k))];
                row.extend(s.gamma.point(k).iter().map(|x| format!("{x:e}")));
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Runs `n_steps` steps, recording a snapshot and the first integrals every
/// `report_every` steps (and at both ends).
pub fn simulate(s0: &FilamentState, dt: f64, n_steps: usize, report_every: usize, cfg: &FlowConfig) -> Result<Trajectory> {
    if report_every == 0 {
        return Err(Error::InvalidParameter("report interval must be positive".into()));
    }
    let mut report = ConservedReport::default();
    let mut snapshots = vec![s0.clone()];
    report.push(conserved(s0)?);
    let mut s = s0.clone();
    for i in 1..=n_steps {
        s = step(&s, dt, cfg)?;
        s.time = s0.time + i as f64 * dt;
        if i % report_every == 0 || i == n_steps {
            report.push(conserved(&s)?);
            snapshots.push(s.clone());
        }
    }
    Ok(Trajectory { snapshots, report, final_state: s })
}

/// Pointwise check of the local balance for `½|T'|²`.
///
/// The rate of the density is estimated by a central difference over one
/// forward and one backward RK4 step of size `dt`, and compared against the
/// first and the second `z`-derivative of `−λ(T, T', T'')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalLawReport {
    /// Max of the finite-difference rate.
    pub rate_scale: f64,
    /// `max|rate + ∂_z λ| / rate_scale`.
    pub residual_first: f64,
    /// `max|rate + ∂²_z λ| / rate_scale`.
    pub residual_second: f64,
}

fn density_and_flux(s: &FilamentState) -> (Vec<f64>, Vec<f64>) {
    let dim = s.dim();
    let d = dim.n();
    let ders = spectral_derivatives(&s.sp, d, s.gamma.points(), &[1, 2, 3]);
    let mut e = Vec::with_capacity(s.sp.n());
    let mut l = Vec::with_capacity(s.sp.n());
    for k in 0..s.sp.n() {
        let r = k * d..(k + 1) * d;
        e.push(0.5 * dot_slice(&ders[1][r.clone()], &ders[1][r.clone()]));
        l.push(assoc_form_slice(dim, &ders[0][r.clone()], &ders[1][r.clone()], &ders[2][r]));
    }
    (e, l)
}

pub fn local_law_check(s: &FilamentState, dt: f64, cfg: &FlowConfig) -> Result<LocalLawReport> {
    let fwd = step(s, dt, cfg)?;
    let bwd = advance(s, -dt, cfg)?;
    let (ef, _) = density_and_flux(&fwd);
    let (eb, _) = density_and_flux(&bwd);
    let (_, lam) = density_and_flux(s);
    let l1 = s.sp.derivative(&lam, 1);
    let l2 = s.sp.derivative(&lam, 2);
    let rate: Vec<f64> = ef.iter().zip(&eb).map(|(a, b)| (a - b) / (2.0 * dt)).collect();
    let scale = rate.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let res = |g: &[f64]| rate.iter().zip(g).map(|(r, x)| (r + x).abs()).fold(0.0, f64::max) / scale;
    Ok(LocalLawReport { rate_scale: scale, residual_first: res(&l1), residual_second: res(&l2) })
}

/// `max_k |(T_{next} − T_{prev})/(2dt) − T × T''|` relative to `max|T × T''|`,
/// the tangent evolution `Ṫ = T × T''` checked by a central difference.
pub fn tangent_law_residual(s: &FilamentState, dt: f64, cfg: &FlowConfig) -> Result<f64> {
    let dim = s.dim();
    let d = dim.n();
    let fwd = step(s, dt, cfg)?;
    let bwd = advance(s, -dt, cfg)?;
    let ders = spectral_derivatives(&s.sp, d, s.gamma.points(), &[1, 3]);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut w = vec![0.0; d];
    for k in 0..s.sp.n() {
        let r = k * d..(k + 1) * d;
        cross_into(dim, &ders[0][r.clone()], &ders[1][r.clone()], &mut w);
        for i in 0..d {
            let fd = (fwd.tangent[r.start + i] - bwd.tangent[r.start + i]) / (2.0 * dt);
            worst = worst.max((fd - w[i]).abs());
            scale = scale.max(w[i].abs());
        }
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// Unit circle on `[0, 2π)` plus a normal perturbation of size `amp` built
/// from modes `2..=modes`: a radial part and, for `dim > 2`, out-of-plane
/// parts along `e3, …`.
pub fn perturbed_circle<R: Rng>(rng: &mut R, dim: Dim, n: usize, amp: f64, modes: usize) -> Result<DiscreteLoop> {
    let d = dim.n();
    let coeffs: Vec<Vec<(f64, f64)>> = (0..d - 1)
        .map(|_| (2..=modes).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
        .collect();
    let pert = |z: f64, j: usize| -> f64 {
        coeffs[j]
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let k = (m + 2) as f64;
                a * (k * z).cos() + b * (k * z).sin()
            })
            .sum()
    };
    let probe = 512;
    let mut peak: f64 = 0.0;
    for i in 0..probe {
        let z = std::f64::consts::TAU * i as f64 / probe as f64;
        let s: f64 = (0..d - 1).map(|j| pert(z, j).powi(2)).sum();
        peak = peak.max(s.sqrt());
    }
    let scale = if peak > 0.0 { amp / peak } else { 0.0 };
    DiscreteLoop::from_fn(dim, n, std::f64::consts::TAU, |z| {
        let rho = 1.0 + scale * pert(z, 0);
        let mut p = vec![0.0; d];
        p[0] = rho * z.cos();
        p[1] = rho * z.sin();
        for j in 1..d - 1 {
            p[j + 1] = scale * pert(z, j);
        }
        p
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::seeded_rng;

    #[test]
    fn arclength_circle_velocity() {
        for dim in [Dim::Three, Dim::Seven] {
            for r in [1.0, 2.0] {
                let s = FilamentState::new(DiscreteLoop::arclength_circle(dim, r, 32).unwrap()).unwrap();
                let v = rhs(&s).unwrap();
                for k in 0..32 {
                    let vk = &v[k * dim.n()..(k + 1) * dim.n()];
                    for (i, x) in vk.iter().enumerate() {
                        let expect = if i == 2 { 1.0 / r } else { 0.0 };
                        assert!((x - expect).abs() < 1e-12, "{x} vs {expect}");
                    }
                }
            }
        }
    }

    #[test]
    fn circle_integrals() {
        let s = FilamentState::new(DiscreteLoop::arclength_circle(Dim::Seven, 1.0, 64).unwrap()).unwrap();
        let c = conserved(&s).unwrap();
        assert!((c.i1 - std::f64::consts::TAU).abs() < 1e-12);
        assert!((c.i2 - std::f64::consts::PI).abs() < 1e-12);
        assert!(c.i3.abs() < 1e-12);
        let s = FilamentState::new(DiscreteLoop::arclength_circle(Dim::Three, 3.0, 64).unwrap()).unwrap();
        let c = conserved(&s).unwrap();
        assert!((c.i1 - std::f64::consts::TAU * 3.0).abs() < 1e-11);
        assert!((c.i2 - std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn step_guards() {
        let s = FilamentState::new(DiscreteLoop::arclength_circle(Dim::Three, 1.0, 32).unwrap()).unwrap();
        let cfg = FlowConfig::default();
        assert!(matches!(step(&s, -1.0, &cfg), Err(Error::StepRejected(_))));
        assert!(matches!(step(&s, 1.0, &cfg), Err(Error::StepRejected(_))));
        assert!(step(&s, 1e-3, &cfg).is_ok());
    }

    #[test]
    fn planar_loops_have_zero_third_integral() {
        let mut rng = seeded_rng(1);
        let g = perturbed_circle(&mut rng, Dim::Three, 64, 0.05, 4).unwrap();
        let flat: Vec<f64> = g.points().chunks(3).flat_map(|p| [p[0], p[1], 0.0]).collect();
        let s = FilamentState::new(DiscreteLoop::new(Dim::Three, flat).unwrap()).unwrap();
        assert!(conserved(&s).unwrap().i3.abs() < 1e-12);
    }

    #[test]
    fn perturbation_size() {
        let mut rng = seeded_rng(2);
        let g = perturbed_circle(&mut rng, Dim::Seven, 128, 0.05, 4).unwrap();
        let worst = g
            .points()
            .chunks(7)
            .enumerate()
            .map(|(k, p)| {
                let z = g.z(k);
                let mut q = p.to_vec();
                q[0] -= z.cos();
                q[1] -= z.sin();
                dot_slice(&q, &q).sqrt()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 0.05 + 1e-12 && worst > 0.04);
    }
}
