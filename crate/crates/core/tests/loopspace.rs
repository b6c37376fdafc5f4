use g2loop::cayley::{standard_three_form, Dim};
use g2loop::loopspace::{
    arclength_pairing, complex_structure, l2_pairing, nondegeneracy_probe, random_circle_diffeo, random_loop,
    random_normal_field, transgressed_form, transgressed_standard, DiscreteLoop, FieldFile, NormalField,
};
use g2loop::sampling::seeded_rng;
use g2loop::Error;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn omega_is_j_pairing_on_unit_speed_loops() {
    let mut rng = seeded_rng(21);
    for case in 0..50 {
        let dim = if case % 2 == 0 { Dim::Seven } else { Dim::Three };
        let g = random_loop(&mut rng, dim, 512, 3, 0.2).unwrap().arclength_normalized().unwrap();
        let speeds = g.speeds().unwrap();
        let dev = speeds.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-8, "case {case} {dim}: {dev:e}");

        let x = random_normal_field(&mut rng, &g, 4).unwrap();
        let y = random_normal_field(&mut rng, &g, 4).unwrap();
        let w = transgressed_standard(&g, &x, &y).unwrap();
        let jx = complex_structure(&g, &x).unwrap();
        let p = l2_pairing(&g, &jx, &y).unwrap();
        assert!((w - p).abs() < 1e-8, "case {case}: {w} vs {p}");

        let jjx = complex_structure(&g, &jx).unwrap();
        assert!(max_diff(jjx.values(), x.scaled(-1.0).values()) < 1e-10);
    }
}

#[test]
fn omega_is_arclength_j_pairing_on_any_loop() {
    let mut rng = seeded_rng(22);
    for _ in 0..20 {
        let g = random_loop(&mut rng, Dim::Seven, 96, 3, 0.4).unwrap();
        let x = random_normal_field(&mut rng, &g, 3).unwrap();
        let y = random_normal_field(&mut rng, &g, 3).unwrap();
        let w = transgressed_standard(&g, &x, &y).unwrap();
        let jx = complex_structure(&g, &x).unwrap();
        assert!((w - arclength_pairing(&g, &jx, &y).unwrap()).abs() < 1e-10 * w.abs().max(1.0));
        // positive on (X, JX)
        assert!(transgressed_standard(&g, &x, &jx).unwrap() > 0.0);
    }
}

#[test]
fn omega_is_antisymmetric_and_matches_generic_form() {
    let mut rng = seeded_rng(23);
    let phi = standard_three_form(Dim::Seven);
    for _ in 0..10 {
        let g = random_loop(&mut rng, Dim::Seven, 64, 2, 0.3).unwrap();
        let x = random_normal_field(&mut rng, &g, 3).unwrap();
        let y = random_normal_field(&mut rng, &g, 3).unwrap();
        let a = transgressed_standard(&g, &x, &y).unwrap();
        let b = transgressed_standard(&g, &y, &x).unwrap();
        assert!((a + b).abs() < 1e-12 * a.abs().max(1.0));
        let c = transgressed_form(&g, &x, &y, &phi).unwrap();
        assert!((a - c).abs() < 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn omega_is_reparametrization_invariant() {
    let mut rng = seeded_rng(24);
    for _ in 0..10 {
        let g = random_loop(&mut rng, Dim::Seven, 256, 3, 0.3).unwrap();
        let x = random_normal_field(&mut rng, &g, 3).unwrap();
        let y = random_normal_field(&mut rng, &g, 3).unwrap();
        let w = transgressed_standard(&g, &x, &y).unwrap();

        let phi = random_circle_diffeo(&mut rng, g.period(), 2, 0.4);
        let gp = g.reparametrize(&phi).unwrap();
        let xp = x.reparametrize(&g, &gp, &phi).unwrap();
        let yp = y.reparametrize(&g, &gp, &phi).unwrap();
        let wp = transgressed_standard(&gp, &xp, &yp).unwrap();
        assert!((w - wp).abs() < 1e-6, "{w} vs {wp}");
    }
}

#[test]
fn arclength_normalization_preserves_length_and_shape() {
    let mut rng = seeded_rng(25);
    let g = random_loop(&mut rng, Dim::Three, 256, 3, 0.2).unwrap();
    let l = g.length().unwrap();
    let a = g.arclength_normalized().unwrap();
    assert!((a.period() - l).abs() < 1e-10);
    assert!((a.length().unwrap() - l).abs() < 1e-8);
    // nodes lie on the original curve
    let (zs, _) = g.arclength_nodes().unwrap();
    for (k, z) in zs.iter().enumerate().step_by(17) {
        assert!(max_diff(&g.eval_at(*z), a.point(k)) < 1e-10);
    }
}

#[test]
fn nondegenerate_along_random_loops() {
    let mut rng = seeded_rng(26);
    let phi = standard_three_form(Dim::Seven);
    for _ in 0..5 {
        let g = random_loop(&mut rng, Dim::Seven, 64, 3, 0.3).unwrap();
        assert!(nondegeneracy_probe(&g, &phi).unwrap());
    }
}

#[test]
fn loop_csv_round_trip() {
    let mut rng = seeded_rng(27);
    let g = random_loop(&mut rng, Dim::Seven, 32, 2, 0.2).unwrap().arclength_normalized().unwrap();
    let mut buf = Vec::new();
    g.write_csv(&mut buf).unwrap();
    let h = DiscreteLoop::read_csv(buf.as_slice()).unwrap();
    assert_eq!(h.n(), g.n());
    assert_eq!(h.dim(), g.dim());
    assert!((h.period() - g.period()).abs() < 1e-12 * g.period());
    assert!(max_diff(h.points(), g.points()) == 0.0);
}

#[test]
fn field_json_round_trip() {
    let mut rng = seeded_rng(28);
    let g = random_loop(&mut rng, Dim::Three, 32, 2, 0.2).unwrap();
    let x = random_normal_field(&mut rng, &g, 2).unwrap();
    let f = FieldFile::from_json(&x.to_json().unwrap()).unwrap();
    let y = NormalField::new(&g, f.flat()).unwrap();
    assert!(max_diff(y.values(), x.values()) < 1e-14);
}

#[test]
fn tangential_fields_are_rejected() {
    let g = DiscreteLoop::circle(Dim::Three, 1.0, 16).unwrap();
    let t = g.tangent().unwrap();
    assert!(matches!(NormalField::new(&g, t), Err(Error::NotNormal { .. })));
}

#[test]
fn degenerate_loops_are_rejected() {
    let pts: Vec<f64> = (0..16).flat_map(|_| [1.0, 2.0, 3.0]).collect();
    let g = DiscreteLoop::new(Dim::Three, pts).unwrap();
    let x = NormalField::zero(&g);
    assert!(matches!(transgressed_standard(&g, &x, &x), Err(Error::NotImmersed { .. })));
    assert!(matches!(
        DiscreteLoop::new(Dim::Three, vec![0.0; 12]),
        Err(Error::TooFewSamples { .. })
    ));
}
