use std::f64::consts::{PI, TAU};

use g2loop::cayley::Dim;
use g2loop::maslov::{
    boundary_loop, invariant_t, maslov_index, normalize_s, parabola_example, random_face_gauge, relative_index,
    retwist, trivialize, twisted_product_example, unitarity_defect, Cycle, CMat, Filling, GridDims, HomotopyData,
    LagrangianFrame, LagrangianLoop, RHO_MAX,
};
use g2loop::sampling::seeded_rng;
use g2loop::Error;
use nalgebra::linalg::SymmetricEigen;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

fn hermitian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&a + a.adjoint()) * Complex64::new(0.5 * scale, 0.0)
}

fn expi(h: CMat) -> CMat {
    let e = SymmetricEigen::new(h);
    let d = DVector::from_iterator(e.eigenvalues.len(), e.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, l)));
    &e.eigenvectors * CMat::from_diagonal(&d) * e.eigenvectors.adjoint()
}

/// `W(t)·diag(e^{iπ m_j t})` with a closed random `W`; closes up as a loop of
/// planes and has index `Σ m_j`.
struct Synthetic {
    hs: Vec<(CMat, CMat)>,
    m: Vec<i64>,
}

impl Synthetic {
    fn random<R: Rng>(rng: &mut R) -> Self {
        let n = rng.random_range(1..=4);
        let hs = (0..2).map(|_| (hermitian(rng, n, 0.4), hermitian(rng, n, 0.4))).collect();
        let m = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        Synthetic { hs, m }
    }

    fn at(&self, t: f64) -> CMat {
        let n = self.m.len();
        let mut h = CMat::zeros(n, n);
        for (q, (a, b)) in self.hs.iter().enumerate() {
            let w = TAU * (q + 1) as f64 * t;
            h += a * Complex64::new(w.cos(), 0.0) + b * Complex64::new(w.sin(), 0.0);
        }
        let d = DVector::from_iterator(n, self.m.iter().map(|&k| Complex64::from_polar(1.0, PI * k as f64 * t)));
        expi(h) * CMat::from_diagonal(&d)
    }

    fn expected(&self) -> i64 {
        self.m.iter().sum()
    }
}

fn cmax(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Winding of `det(U)²` by accumulating principal phase ratios.
fn det_sq_winding(l: &LagrangianLoop) -> i64 {
    let f = l.frames();
    let mut total = 0.0;
    for k in 0..f.len() {
        let a = f[k].det_sq();
        let b = f[(k + 1) % f.len()].det_sq();
        total += (b / a).arg();
    }
    (total / TAU).round() as i64
}

#[test]
fn synthetic_loops_match_winding_oracle() {
    let mut rng = seeded_rng(31);
    for case in 0..100 {
        let s = Synthetic::random(&mut rng);
        let l = LagrangianLoop::from_fn(256, |t| s.at(t)).unwrap();
        let mu = maslov_index(&l).unwrap();
        assert_eq!(mu, det_sq_winding(&l), "case {case}");
        assert_eq!(mu, s.expected(), "case {case}");
    }
}

#[test]
fn scalar_rotation_gives_rank() {
    for n in 1..=5 {
        for k in [-2i64, 1, 3] {
            let l = LagrangianLoop::from_fn(64, |t| {
                CMat::identity(n, n) * Complex64::from_polar(1.0, PI * k as f64 * t)
            })
            .unwrap();
            assert_eq!(maslov_index(&l).unwrap(), k * n as i64);
        }
    }
}

#[test]
fn reversal_concatenation_and_start_point() {
    let mut rng = seeded_rng(32);
    for _ in 0..20 {
        let s1 = Synthetic::random(&mut rng);
        let mut s2 = Synthetic::random(&mut rng);
        while s2.m.len() != s1.m.len() {
            s2 = Synthetic::random(&mut rng);
        }
        let l1 = LagrangianLoop::from_fn(200, |t| s1.at(t)).unwrap();
        let l2 = LagrangianLoop::from_fn(200, |t| s2.at(t)).unwrap();
        let m1 = maslov_index(&l1).unwrap();
        let m2 = maslov_index(&l2).unwrap();
        assert_eq!(maslov_index(&l1.reversed()).unwrap(), -m1);
        assert_eq!(maslov_index(&l1.rotated(57)).unwrap(), m1);

        // move the second loop so both start at the same matrix
        let shift = s1.at(0.0) * s2.at(0.0).adjoint();
        let l2s = LagrangianLoop::from_fn(200, |t| &shift * s2.at(t)).unwrap();
        assert_eq!(maslov_index(&l2s).unwrap(), m2);
        assert_eq!(maslov_index(&l1.concat(&l2s).unwrap()).unwrap(), m1 + m2);
    }
}

#[test]
fn constant_unitary_action_preserves_index() {
    let mut rng = seeded_rng(33);
    for _ in 0..10 {
        let s = Synthetic::random(&mut rng);
        let n = s.m.len();
        let g = expi(hermitian(&mut rng, n, 2.0));
        let l = LagrangianLoop::from_fn(256, |t| s.at(t)).unwrap();
        let lg = LagrangianLoop::new(l.frames().iter().map(|f| f.transformed(&g)).collect()).unwrap();
        assert_eq!(maslov_index(&lg).unwrap(), maslov_index(&l).unwrap());
    }
}

#[test]
fn coarse_sampling_is_rejected() {
    let l = LagrangianLoop::from_fn(8, |t| CMat::identity(2, 2) * Complex64::from_polar(1.0, 4.0 * PI * t)).unwrap();
    assert!(matches!(maslov_index(&l), Err(Error::NyquistViolation { .. })));
    assert!(matches!(
        LagrangianLoop::new(vec![LagrangianFrame::real(2); 4]),
        Err(Error::TooFewSamples { .. })
    ));
}

fn small_grid() -> GridDims {
    GridDims { a: 8, b: 8, c: 32 }
}

#[test]
fn parabola_has_odd_index_in_both_dims() {
    for dim in [Dim::Three, Dim::Seven] {
        let ex = parabola_example(0.1, dim, Filling::Linear, GridDims::default()).unwrap();
        let r = ex.radii.clone();
        assert!((r[0] - (1.0 - 0.1f64.sqrt())).abs() < 1e-15 && (r[1] - (1.0 + 0.1f64.sqrt())).abs() < 1e-15);
        let ri = relative_index(&ex.data.unwrap()).unwrap();
        assert_eq!(ri.value, -1, "{dim}");
        assert_eq!(ri.value.rem_euclid(2), 1);
        assert_eq!(ri.mu_s, 0);
        assert_eq!(ri.label, "ccw");
        assert_eq!(ri.mod4, (dim == Dim::Three).then_some(3));
    }
}

#[test]
fn swapping_roles_negates_index() {
    for dim in [Dim::Three, Dim::Seven] {
        let h = parabola_example(0.2, dim, Filling::Bulged, small_grid()).unwrap().data.unwrap();
        let a = relative_index(&h).unwrap().value;
        let b = relative_index(&h.swapped()).unwrap().value;
        assert_eq!(a, -b);
    }
}

#[test]
fn index_does_not_depend_on_slice_or_base_point() {
    let h = parabola_example(0.1, Dim::Three, Filling::Bulged, GridDims::default()).unwrap().data.unwrap();
    let ri = relative_index(&h).unwrap();
    assert!(ri.per_slice.iter().all(|&m| m == ri.value));
    for shift in [5, 17, 40] {
        let hs = shift_base_point(&h, shift);
        assert_eq!(relative_index(&hs).unwrap().value, ri.value, "shift {shift}");
    }
}

/// Same homotopy with the `z` circle started at slice `shift`.
fn shift_base_point(h: &HomotopyData, shift: usize) -> HomotopyData {
    let g = h.grid;
    let mut nodes = Vec::with_capacity(h.nodes.len());
    for a in 0..=g.a {
        for b in 0..=g.b {
            for cc in 0..g.c {
                nodes.push(h.node(a, b, (cc + shift) % g.c).clone());
            }
        }
    }
    let remap = |m: &Vec<Vec<Vec<f64>>>| -> Vec<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(m.len());
        for a in 0..=g.a {
            for cc in 0..g.c {
                out.push(m[g.mark(a, (cc + shift) % g.c)].clone());
            }
        }
        out
    };
    HomotopyData::new(h.dim, g, h.label.clone(), nodes, remap(&h.mark1), remap(&h.mark2)).unwrap()
}

#[test]
fn index_is_gauge_robust() {
    let mut rng = seeded_rng(34);
    let h = parabola_example(0.1, Dim::Three, Filling::Linear, GridDims::default()).unwrap().data.unwrap();
    let base = relative_index(&h).unwrap().value;
    for trial in 0..20 {
        let gauge = random_face_gauge(&mut rng, 1, h.grid);
        let hg = h.regauged(gauge).unwrap();
        assert_eq!(relative_index(&hg).unwrap().value, base, "trial {trial}");
    }
    let h7 = parabola_example(0.1, Dim::Seven, Filling::Linear, small_grid()).unwrap().data.unwrap();
    let base7 = relative_index(&h7).unwrap().value;
    for trial in 0..5 {
        let gauge = random_face_gauge(&mut rng, 3, h7.grid);
        let hg = h7.regauged(gauge).unwrap();
        assert_eq!(relative_index(&hg).unwrap().value, base7, "7-D trial {trial}");
    }
}

#[test]
fn fillings_agree() {
    let three: Vec<i64> = [Filling::Linear, Filling::Bulged]
        .iter()
        .map(|&f| relative_index(&parabola_example(0.1, Dim::Three, f, GridDims::default()).unwrap().data.unwrap()).unwrap().value)
        .collect();
    assert_eq!(three[0].rem_euclid(4), three[1].rem_euclid(4));
    let seven: Vec<i64> = [Filling::Linear, Filling::Bulged]
        .iter()
        .map(|&f| relative_index(&parabola_example(0.1, Dim::Seven, f, small_grid()).unwrap().data.unwrap()).unwrap().value)
        .collect();
    assert_eq!(seven[0], seven[1]);
}

#[test]
fn index_is_stable_in_rho() {
    for rho in [0.02, 0.1, 0.3, RHO_MAX] {
        let h = parabola_example(rho, Dim::Three, Filling::Linear, small_grid()).unwrap().data.unwrap();
        assert_eq!(relative_index(&h).unwrap().value, -1, "rho {rho}");
    }
}

#[test]
fn parabola_edge_cases() {
    assert!(matches!(
        parabola_example(-0.1, Dim::Three, Filling::Linear, small_grid()),
        Err(Error::NoIntersection(_))
    ));
    let touch = parabola_example(0.0, Dim::Seven, Filling::Linear, small_grid()).unwrap();
    assert_eq!(touch.radii, vec![1.0]);
    assert!(touch.data.is_none());
    assert!(parabola_example(0.9, Dim::Three, Filling::Linear, small_grid()).is_err());
}

#[test]
fn retwist_shifts_s_index_by_twice_k() {
    let h = twisted_product_example(Dim::Seven, 0, small_grid()).unwrap();
    let gh = trivialize(&h).unwrap();
    let mu = maslov_index(&boundary_loop(&gh, Cycle::S).unwrap()).unwrap();
    assert_eq!(mu, 0);
    for k in [-2, -1, 1, 3] {
        let t = retwist(&gh, k);
        assert_eq!(t.twist(), k);
        assert_eq!(maslov_index(&boundary_loop(&t, Cycle::S).unwrap()).unwrap(), mu + 2 * k);
        let back = normalize_s(&t).unwrap();
        assert_eq!(maslov_index(&boundary_loop(&back, Cycle::S).unwrap()).unwrap(), 0);
    }
}

#[test]
fn product_example_normalizes_even_twists() {
    for half_turns in [-4i64, 0, 2, 6] {
        for dim in [Dim::Three, Dim::Seven] {
            let h = twisted_product_example(dim, half_turns, small_grid()).unwrap();
            let ri = relative_index(&h).unwrap();
            assert_eq!(ri.mu_s, half_turns);
            assert_eq!(ri.value, 0);
        }
    }
}

#[test]
fn odd_s_twist_is_rejected() {
    let h = twisted_product_example(Dim::Three, 3, small_grid()).unwrap();
    assert_eq!(relative_index(&h), Err(Error::OddSTwist(3)));
}

#[test]
fn constant_frames_give_identity_gauge() {
    let h = twisted_product_example(Dim::Seven, 0, small_grid()).unwrap();
    let gh = trivialize(&h).unwrap();
    let g = h.grid;
    for a in 0..=g.a {
        for b in 0..=g.b {
            for cc in 0..g.c {
                let d = cmax(&(gh.gauge(a, b, cc) - CMat::identity(3, 3)));
                assert!(d < 1e-12);
            }
        }
    }
    assert!(gh.face_residual() < 1e-12);
}

#[test]
fn smooth_regauge_is_undone_up_to_a_constant() {
    let mut rng = seeded_rng(35);
    let h = twisted_product_example(Dim::Seven, 0, small_grid()).unwrap();
    let g = h.grid;
    let gauge = random_face_gauge(&mut rng, 3, g);
    let gh = trivialize(&h.regauged(&gauge).unwrap()).unwrap();
    let c0 = gauge(0, 0, 0) * gh.gauge(0, 0, 0);
    assert!(unitarity_defect(&c0) < 1e-10);
    for a in 0..=g.a {
        for b in 0..=g.b {
            for cc in 0..g.c {
                let ck = gauge(a, b, cc) * gh.gauge(a, b, cc);
                assert!(cmax(&(ck - &c0)) < 1e-9, "node ({a},{b},{cc})");
            }
        }
    }
}

#[test]
fn trivialization_is_constant_on_faces_and_corners_are_exact() {
    let h = parabola_example(0.1, Dim::Seven, Filling::Bulged, small_grid()).unwrap().data.unwrap();
    let gh = trivialize(&h).unwrap();
    assert!(gh.face_residual() < 1e-8);
    assert!(gh.corner_residual().unwrap() < 1e-10);
    assert!(matches!(boundary_loop(&gh, Cycle::P(small_grid().c)), Err(Error::BadCycle(_))));
}

#[test]
fn homotopy_json_round_trip() {
    let h = parabola_example(0.1, Dim::Three, Filling::Linear, GridDims { a: 4, b: 4, c: 16 })
        .unwrap()
        .data
        .unwrap();
    let s = h.to_json().unwrap();
    let back = HomotopyData::from_json(&s).unwrap();
    assert_eq!(back, h);
    let mut broken = h.clone();
    broken.nodes.pop();
    assert!(matches!(
        HomotopyData::from_json(&serde_json::to_string(&broken).unwrap()),
        Err(Error::InvalidHomotopy(_))
    ));
}

#[test]
fn invariant_t_counts_parities() {
    assert_eq!(invariant_t(&[0, -1]).value, 0);
    assert_eq!(invariant_t(&[0, -1]).signed, 0);
    assert_eq!(invariant_t(&[1, 3, 2]).signed, -1);
    assert_eq!(invariant_t(&[1, 3, 2]).value, 1);
    assert_eq!(invariant_t(&[]).value, 0);
    let ri = relative_index(&parabola_example(0.1, Dim::Three, Filling::Linear, small_grid()).unwrap().data.unwrap())
        .unwrap();
    // the pair of circles: one reference curve of index 0 and one of odd index
    assert_eq!(invariant_t(&[0, ri.value]).value, 0);
}
