use g2loop::cayley::Dim;
use g2loop::filament::{
    conserved, local_law_check, perturbed_circle, rhs, simulate, step, tangent_law_residual, FilamentState, FlowConfig,
};
use g2loop::g2struct::{automorphism_from_triples, random_triple};
use g2loop::loopspace::DiscreteLoop;
use g2loop::sampling::{random_rotation, seeded_rng};
use g2loop::Error;
use nalgebra::DMatrix;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn run(s0: &FilamentState, horizon: f64, m: usize, cfg: &FlowConfig) -> FilamentState {
    simulate(s0, horizon / m as f64, m, m, cfg).unwrap().final_state
}

fn perturbed(seed: u64, dim: Dim, n: usize, amp: f64) -> FilamentState {
    let mut rng = seeded_rng(seed);
    let g = perturbed_circle(&mut rng, dim, n, amp, 4).unwrap().arclength_normalized().unwrap();
    FilamentState::new(g).unwrap()
}

fn transform(g: &DiscreteLoop, a: &DMatrix<f64>) -> DiscreteLoop {
    let d = g.dim().n();
    let pts: Vec<f64> = g
        .points()
        .chunks(d)
        .flat_map(|p| (a * nalgebra::DVector::from_column_slice(p)).iter().cloned().collect::<Vec<_>>())
        .collect();
    DiscreteLoop::with_period(g.dim(), g.period(), pts).unwrap()
}

#[test]
fn circle_translates_rigidly() {
    let cfg = FlowConfig::default();
    for dim in [Dim::Three, Dim::Seven] {
        for r in [1.0, 2.0] {
            let g = DiscreteLoop::arclength_circle(dim, r, 128).unwrap();
            let s0 = FilamentState::new(g.clone()).unwrap();
            let m = (1.0 / (0.5 * s0.max_dt(&cfg))).ceil() as usize;
            let s1 = run(&s0, 1.0, m, &cfg);
            let d = dim.n();
            let mut err: f64 = 0.0;
            for k in 0..128 {
                let mut want = g.point(k).to_vec();
                want[2] += 1.0 / r;
                err = err.max(max_diff(&want, &s1.gamma().points()[k * d..(k + 1) * d]));
            }
            assert!(err < 1e-6, "{dim} r={r}: {err:e}");
        }
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let cfg = FlowConfig::default();
    let s0 = perturbed(41, Dim::Three, 64, 0.05);
    let horizon = 0.5;
    let m0 = (horizon / s0.max_dt(&cfg)).ceil() as usize + 1;
    let reference = run(&s0, horizon, 16 * m0, &cfg);
    let err = |m: usize| max_diff(run(&s0, horizon, m, &cfg).gamma().points(), reference.gamma().points());
    let (e1, e2, e3) = (err(m0), err(2 * m0), err(4 * m0));
    for ratio in [e1 / e2, e2 / e3] {
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio} ({e1:e}, {e2:e}, {e3:e})");
    }
}

#[test]
fn first_integrals_are_conserved() {
    let cfg = FlowConfig::default();
    for dim in [Dim::Three, Dim::Seven] {
        let s0 = perturbed(42, dim, 128, 0.1);
        let dt = 0.9 * s0.max_dt(&cfg);
        let m = (1.0 / dt).ceil() as usize;
        let tr = simulate(&s0, 1.0 / m as f64, m, m / 10, &cfg).unwrap();
        let [d1, d2, d3] = tr.report.max_drift();
        assert!(d1 < 1e-6 && d2 < 1e-6 && d3 < 1e-6, "{dim}: {d1:e} {d2:e} {d3:e}");
        assert!(tr.report.rows().len() >= 11);
    }
}

#[test]
fn speed_is_pointwise_invariant() {
    let cfg = FlowConfig::default();
    let mut rng = seeded_rng(43);
    // not arc-length normalized on purpose
    let g = perturbed_circle(&mut rng, Dim::Seven, 128, 0.1, 4).unwrap();
    let s0 = FilamentState::new(g).unwrap();
    let m = (0.2 / (0.9 * s0.max_dt(&cfg))).ceil() as usize;
    let s1 = run(&s0, 0.2, m, &cfg);
    let v0 = s0.gamma().speeds().unwrap();
    let v1 = s1.gamma().speeds().unwrap();
    assert!(max_diff(&v0, &v1) < 1e-8);
    let (c0, c1) = (conserved(&s0).unwrap(), conserved(&s1).unwrap());
    assert!((c0.i1 - c1.i1).abs() < 1e-8 * c0.i1);
}

#[test]
fn local_balance_holds_to_discretization_order() {
    let cfg = FlowConfig::default();
    for dim in [Dim::Three, Dim::Seven] {
        let s = perturbed(44, dim, 128, 0.1);
        let dt = 5e-5;
        let a = local_law_check(&s, dt, &cfg).unwrap();
        let b = local_law_check(&s, dt / 2.0, &cfg).unwrap();
        assert!(b.residual_first < 1e-6, "{dim}: {}", b.residual_first);
        // central difference in time: residual falls by 4 under halving
        let ratio = a.residual_first / b.residual_first;
        assert!((ratio - 4.0).abs() < 0.4, "{dim}: ratio {ratio}");
        assert!(tangent_law_residual(&s, dt / 2.0, &cfg).unwrap() < 1e-6);
    }
}

#[test]
fn flux_with_second_derivative_does_not_balance() {
    let cfg = FlowConfig::default();
    let s = perturbed(44, Dim::Three, 128, 0.1);
    let a = local_law_check(&s, 5e-5, &cfg).unwrap();
    let b = local_law_check(&s, 2.5e-5, &cfg).unwrap();
    assert!(a.residual_second > 1.0 && (a.residual_second - b.residual_second).abs() < 1e-3);
}

#[test]
fn seven_dim_flow_of_three_dim_loop_agrees() {
    let cfg = FlowConfig::default();
    let s3 = perturbed(45, Dim::Three, 64, 0.1);
    let g3 = s3.gamma();
    let pts7: Vec<f64> = g3.points().chunks(3).flat_map(|p| [p[0], p[1], p[2], 0.0, 0.0, 0.0, 0.0]).collect();
    let s7 = FilamentState::new(DiscreteLoop::with_period(Dim::Seven, g3.period(), pts7).unwrap()).unwrap();
    let m = (0.5 / (0.9 * s3.max_dt(&cfg))).ceil() as usize;
    let a = run(&s3, 0.5, m, &cfg);
    let b = run(&s7, 0.5, m, &cfg);
    let mut err: f64 = 0.0;
    for k in 0..64 {
        let p7 = &b.gamma().points()[k * 7..(k + 1) * 7];
        err = err.max(max_diff(&a.gamma().points()[k * 3..(k + 1) * 3], &p7[..3]));
        err = err.max(p7[3..].iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    assert!(err < 1e-10, "{err:e}");
}

#[test]
fn flow_commutes_with_rotations_and_g2() {
    let cfg = FlowConfig::default();
    let mut rng = seeded_rng(46);
    let s3 = perturbed(47, Dim::Three, 64, 0.1);
    let mut r = random_rotation(&mut rng, 3);
    if r.determinant() < 0.0 {
        r.column_mut(0).neg_mut();
    }
    let s7 = perturbed(48, Dim::Seven, 64, 0.1);
    let a = automorphism_from_triples(&random_triple(&mut rng), &random_triple(&mut rng)).unwrap();
    let a = DMatrix::from_column_slice(7, 7, a.as_slice());
    for (s, m) in [(s3, r), (s7, a)] {
        let k = (0.2 / (0.9 * s.max_dt(&cfg))).ceil() as usize;
        let direct = transform(run(&s, 0.2, k, &cfg).gamma(), &m);
        let moved = run(&FilamentState::new(transform(s.gamma(), &m)).unwrap(), 0.2, k, &cfg);
        assert!(max_diff(direct.points(), moved.gamma().points()) < 1e-10);
    }
}

#[test]
fn bad_steps_are_rejected() {
    let cfg = FlowConfig::default();
    let s = FilamentState::new(DiscreteLoop::circle(Dim::Three, 1.0, 32).unwrap()).unwrap();
    for dt in [0.0, -1e-3, f64::NAN, 2.0 * s.max_dt(&cfg)] {
        assert!(matches!(step(&s, dt, &cfg), Err(Error::StepRejected(_))), "dt={dt}");
    }
    let flat: Vec<f64> = (0..16).flat_map(|_| [0.0, 0.0, 0.0]).collect();
    assert!(FilamentState::new(DiscreteLoop::new(Dim::Three, flat).unwrap()).is_err());
}

#[test]
fn velocity_is_binormal_and_filter_keeps_band_limited_data() {
    let g = DiscreteLoop::circle(Dim::Seven, 1.0, 32).unwrap();
    let s = FilamentState::new(g.clone()).unwrap();
    let v = rhs(&s).unwrap();
    for k in 0..32 {
        let vk = &v[k * 7..(k + 1) * 7];
        assert!((vk[2] - 1.0).abs() < 1e-12);
        assert!(vk.iter().enumerate().all(|(i, x)| i == 2 || x.abs() < 1e-12));
    }
    let cfg = FlowConfig { filter: true, ..FlowConfig::default() };
    let dt = 0.5 * s.max_dt(&cfg);
    let a = step(&s, dt, &cfg).unwrap();
    let b = step(&s, dt, &FlowConfig::default()).unwrap();
    assert!(max_diff(a.gamma().points(), b.gamma().points()) < 1e-13);
}
