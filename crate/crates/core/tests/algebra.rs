use g2loop::cayley::{
    assoc_form, cross, multiplication_table, standard_three_form, structure_triples, Dim, ImVector, Octonion,
    OctonionTable,
};
use proptest::prelude::*;

/// Oriented lines of the Fano plane for `e1 e2 = e3`, written out by hand.
const FANO: [[usize; 3]; 7] = [[1, 2, 3], [1, 4, 5], [2, 4, 6], [3, 4, 7], [1, 7, 6], [2, 5, 7], [3, 6, 5]];

fn fano_product(i: usize, j: usize) -> (i32, usize) {
    if i == 0 {
        return (1, j);
    }
    if j == 0 {
        return (1, i);
    }
    if i == j {
        return (-1, 0);
    }
    for [a, b, c] in FANO {
        for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
            if (i, j) == (x, y) {
                return (1, z);
            }
            if (i, j) == (y, x) {
                return (-1, z);
            }
        }
    }
    unreachable!("every pair of distinct units lies on one line")
}

#[test]
fn table_matches_golden_file() {
    let golden: OctonionTable =
        serde_json::from_str(include_str!("golden/octonion_table.json")).expect("golden table parses");
    assert_eq!(multiplication_table(), golden);
}

#[test]
fn table_matches_fano_oracle() {
    let t = multiplication_table();
    for i in 0..8 {
        for j in 0..8 {
            assert_eq!((t.sign[i][j], t.index[i][j]), fano_product(i, j), "e{i} e{j}");
        }
    }
}

#[test]
fn structure_triples_match_fano_lines() {
    let mut got: Vec<[usize; 3]> = structure_triples(Dim::Seven)
        .iter()
        .map(|&[i, j, k]| {
            // rotate each oriented line so the smallest index comes first
            let t = [i + 1, j + 1, k + 1];
            let m = (0..3).min_by_key(|&s| t[s]).unwrap();
            [t[m], t[(m + 1) % 3], t[(m + 2) % 3]]
        })
        .collect();
    got.sort();
    let mut want = FANO.to_vec();
    want.sort();
    assert_eq!(got, want);
    assert_eq!(structure_triples(Dim::Three), &[[0, 1, 2]]);
}

#[test]
fn standard_form_components() {
    let f = standard_three_form(Dim::Seven);
    let mut comps: Vec<_> = f.components().into_iter().filter(|c| c.1 != 0.0).collect();
    comps.sort_by(|a, b| a.0.cmp(&b.0));
    let want = [
        ((0, 1, 2), 1.0),
        ((0, 3, 4), 1.0),
        ((0, 5, 6), -1.0),
        ((1, 3, 5), 1.0),
        ((1, 4, 6), 1.0),
        ((2, 3, 6), 1.0),
        ((2, 4, 5), -1.0),
    ];
    assert_eq!(comps, want);
}

fn oct() -> impl Strategy<Value = Octonion> {
    prop::array::uniform8(-3.0..3.0f64).prop_map(Octonion)
}

fn im(dim: Dim) -> impl Strategy<Value = ImVector> {
    prop::collection::vec(-3.0..3.0f64, dim.n()).prop_map(move |v| ImVector::from_slice(dim, &v).unwrap())
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn composition_law(x in oct(), y in oct()) {
        let lhs = (x * y).norm_sq();
        let rhs = x.norm_sq() * y.norm_sq();
        prop_assert!(close(lhs, rhs, rhs));
    }

    #[test]
    fn alternative_laws(x in oct(), y in oct()) {
        let s = x.norm_sq() * y.norm();
        for (l, r) in [(x * (x * y), (x * x) * y), ((y * x) * x, y * (x * x))] {
            for k in 0..8 {
                prop_assert!(close(l.0[k], r.0[k], s));
            }
        }
    }

    #[test]
    fn conjugation_reverses_products(x in oct(), y in oct()) {
        let l = (x * y).conj();
        let r = y.conj() * x.conj();
        for k in 0..8 {
            prop_assert!(close(l.0[k], r.0[k], x.norm() * y.norm()));
        }
    }

    #[test]
    fn double_cross_identity_7(u in im(Dim::Seven), v in im(Dim::Seven)) {
        let lhs = cross(&u, &cross(&u, &v));
        let rhs = v.scale(-u.dot(&u)) + u.scale(u.dot(&v));
        let s = u.dot(&u) * v.norm();
        for k in 0..7 {
            prop_assert!(close(lhs.as_slice()[k], rhs.as_slice()[k], s));
        }
    }

    #[test]
    fn cross_orthogonal_and_normed(u in im(Dim::Seven), v in im(Dim::Seven)) {
        let w = cross(&u, &v);
        let s = u.norm() * v.norm();
        prop_assert!(close(w.dot(&u), 0.0, s * u.norm()));
        prop_assert!(close(w.dot(&v), 0.0, s * v.norm()));
        let lag = u.dot(&u) * v.dot(&v) - u.dot(&v).powi(2);
        prop_assert!(close(w.dot(&w), lag, s * s));
    }

    #[test]
    fn cross_is_half_commutator(u in im(Dim::Seven), v in im(Dim::Seven)) {
        let c = u.to_octonion().commutator(&v.to_octonion());
        let w = cross(&u, &v);
        prop_assert!(close(c.0[0], 0.0, 1.0));
        for k in 0..7 {
            prop_assert!(close(c.0[k + 1], 2.0 * w.as_slice()[k], u.norm() * v.norm()));
        }
    }

    #[test]
    fn assoc_form_alternates(u in im(Dim::Seven), v in im(Dim::Seven), w in im(Dim::Seven)) {
        let a = assoc_form(&u, &v, &w);
        let s = u.norm() * v.norm() * w.norm();
        prop_assert!(close(assoc_form(&v, &w, &u), a, s));
        prop_assert!(close(assoc_form(&v, &u, &w), -a, s));
        prop_assert!(close(assoc_form(&u, &u, &w), 0.0, s));
        prop_assert!(close(standard_three_form(Dim::Seven).eval_vec(&u, &v, &w), a, s));
    }

    #[test]
    fn three_dim_form_is_determinant(u in im(Dim::Three), v in im(Dim::Three), w in im(Dim::Three)) {
        let m = nalgebra::Matrix3::from_columns(&[
            nalgebra::Vector3::from_column_slice(u.as_slice()),
            nalgebra::Vector3::from_column_slice(v.as_slice()),
            nalgebra::Vector3::from_column_slice(w.as_slice()),
        ]);
        prop_assert!(close(assoc_form(&u, &v, &w), m.determinant(), u.norm() * v.norm() * w.norm()));
    }
}
