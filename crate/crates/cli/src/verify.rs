//! Invariant suite behind `g2 verify`.

use g2loop::cayley::{cross, multiplication_table, Dim, ImVector, Octonion, ThreeForm};
use g2loop::g2struct::{
    automorphism_from_triples, cross_from_form, g2_defect, isotropic_plane, metric_from_form, nondegeneracy_check,
    phi, random_triple, Metric, Triple, MAXIMALITY_PROBES,
};
use g2loop::sampling::{gaussian_vec, random_rotation, seeded_rng};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub const ALGEBRA_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    /// Worst observed defect; for count-type checks the number of failures.
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check { name, worst, tol, pass: worst <= tol }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1.0)
}

fn im7(v: &[f64]) -> ImVector {
    ImVector::from_slice(Dim::Seven, v).expect("length 7")
}

/// Composition, double-cross and orthogonality on seeded random samples.
fn algebra_checks(seed: u64) -> Vec<Check> {
    let mut rng = seeded_rng(seed);
    let (mut comp, mut dbl, mut orth) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..ALGEBRA_SAMPLES {
        let x = Octonion(gaussian_vec(&mut rng, 8).try_into().unwrap());
        let y = Octonion(gaussian_vec(&mut rng, 8).try_into().unwrap());
        let n = x.norm_sq() * y.norm_sq();
        comp = comp.max(rel((x * y).norm_sq(), n, n));

        let u = im7(&gaussian_vec(&mut rng, 7));
        let v = im7(&gaussian_vec(&mut rng, 7));
        let lhs = cross(&u, &cross(&u, &v));
        let rhs = v.scale(-u.dot(&u)) + u.scale(u.dot(&v));
        let s = u.dot(&u) * v.norm();
        for k in 0..7 {
            dbl = dbl.max(rel(lhs[k], rhs[k], s));
        }
        let w = cross(&u, &v);
        let s = u.norm() * v.norm();
        orth = orth.max(rel(w.dot(&u), 0.0, s * u.norm())).max(rel(w.dot(&v), 0.0, s * v.norm()));
    }
    vec![
        check("composition |xy|² = |x|²|y|²", comp, 1e-12),
        check("double cross u×(u×v) = −|u|²v + (u,v)u", dbl, 1e-12),
        check("orthogonality (u×v)·u = 0", orth, 1e-12),
    ]
}

fn reconstruction_checks(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let metric_err = match metric_from_form(phi()) {
        Ok(g) => (g.matrix() - DMatrix::identity(7, 7)).abs().max(),
        Err(_) => f64::INFINITY,
    };
    out.push(check("metric of φ is the identity", metric_err, 1e-9));

    let table = multiplication_table();
    let br = cross_from_form(phi(), &Metric::identity(Dim::Seven)).expect("standard form");
    let mut table_err: f64 = 0.0;
    for i in 1..8 {
        for j in (i + 1)..8 {
            let got = br.apply(ImVector::basis(Dim::Seven, i).as_slice(), ImVector::basis(Dim::Seven, j).as_slice());
            for (k, g) in got.iter().enumerate() {
                let want = if k + 1 == table.index[i][j] { table.sign[i][j] as f64 } else { 0.0 };
                table_err = table_err.max((g - want).abs());
            }
        }
    }
    out.push(check("bracket from φ matches the table (21 pairs)", table_err, 1e-10));

    let mut rng = seeded_rng(seed.wrapping_add(1));
    let mut equi: f64 = 0.0;
    for _ in 0..20 {
        let r = random_rotation(&mut rng, 7);
        let err = match phi().pullback(&r).and_then(|psi| {
            let g = metric_from_form(&psi)?;
            let b = cross_from_form(&psi, &g)?;
            Ok((g, b))
        }) {
            Ok((g, b)) => {
                let mut e = (g.matrix() - DMatrix::identity(7, 7)).abs().max();
                let u = gaussian_vec(&mut rng, 7);
                let v = gaussian_vec(&mut rng, 7);
                let ru = &r * DVector::from_column_slice(&u);
                let rv = &r * DVector::from_column_slice(&v);
                let w = cross(&im7(ru.as_slice()), &im7(rv.as_slice()));
                let want = r.transpose() * DVector::from_column_slice(w.as_slice());
                for (g, w) in b.apply(&u, &v).iter().zip(want.iter()) {
                    e = e.max((g - w).abs());
                }
                e
            }
            Err(_) => f64::INFINITY,
        };
        equi = equi.max(err);
    }
    out.push(check("SO(7) equivariance (20 rotations)", equi, 1e-9));
    out
}

fn nondegeneracy_checks() -> Vec<Check> {
    let good = nondegeneracy_check(phi());
    let bad = ThreeForm::from_components(Dim::Seven, &[((0, 1, 2), 1.0)]).expect("valid components");
    let bad_report = nondegeneracy_check(&bad);
    vec![
        check("rank λ(l,·,·) = 6 on 2048 directions", good.failures as f64, 0.0),
        check("degenerate form is rejected", if bad_report.ok { 1.0 } else { 0.0 }, 0.0),
    ]
}

fn isotropic_checks(seed: u64) -> Vec<Check> {
    let l = isotropic_plane(&Triple::basis(1, 2, 4)).expect("admissible triple");
    let probe = l.probe_maximality(phi(), MAXIMALITY_PROBES);
    let mut rng = seeded_rng(seed.wrapping_add(2));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = automorphism_from_triples(&random_triple(&mut rng), &random_triple(&mut rng));
        worst = worst.max(a.map(|a| g2_defect(&a, phi())).unwrap_or(f64::INFINITY));
    }
    vec![
        check("φ vanishes on span{e1,e2,e4,e7}", l.max_form_value(phi()), 1e-12),
        check("span{e1,e2,e4,e7} is maximal (64 probes)", if probe.maximal { 0.0 } else { 1.0 }, 0.0),
        check("triple automorphisms preserve φ (100 pairs)", worst, 1e-10),
    ]
}

pub fn run_suite(seed: u64) -> Vec<Check> {
    let mut all = algebra_checks(seed);
    all.extend(nondegeneracy_checks());
    all.extend(reconstruction_checks(seed));
    all.extend(isotropic_checks(seed));
    all
}
