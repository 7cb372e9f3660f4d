use cvqkd_core::cdalgebra::{cd_div, cd_mul, haar_orthogonal, householder_between, CdNumber};
use cvqkd_core::rng::rng_for;
use proptest::prelude::*;

/// Product of basis elements `e_a·e_b` in dimension `n`, as `(sign, index)`,
/// worked out symbolically from the doubling rule
/// `(p, q)(r, s) = (pr − s̄q, sp + qr̄)` with one of each pair zero.
fn basis_product(n: usize, a: usize, b: usize) -> (i8, usize) {
    if n == 1 {
        return (1, 0);
    }
    let h = n / 2;
    // conjugation flips every basis element except the unit
    let conj = |i: usize| if i == 0 { 1 } else { -1 };
    match (a < h, b < h) {
        (true, true) => basis_product(h, a, b),
        // (e_a, 0)(0, e_b') = (0, e_b'·e_a)
        (true, false) => {
            let (s, i) = basis_product(h, b - h, a);
            (s, h + i)
        }
        // (0, e_a')(e_b, 0) = (0, e_a'·ē_b)
        (false, true) => {
            let (s, i) = basis_product(h, a - h, b);
            (s * conj(b), h + i)
        }
        // (0, e_a')(0, e_b') = (−ē_b'·e_a', 0)
        (false, false) => {
            let (s, i) = basis_product(h, b - h, a - h);
            (-s * conj(b - h), i)
        }
    }
}

fn rel_close(a: &[f64], b: &[f64], scale: f64, tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

#[test]
fn basis_products_match_the_symbolic_table() {
    for n in [1, 2, 4, 8] {
        for a in 0..n {
            for b in 0..n {
                let (sign, idx) = basis_product(n, a, b);
                let mut want = vec![0.0; n];
                want[idx] = f64::from(sign);
                let got = cd_mul(&CdNumber::basis(n, a).unwrap(), &CdNumber::basis(n, b).unwrap()).unwrap();
                assert_eq!(got.coeffs(), &want[..], "e{a}·e{b} in dimension {n}");
            }
        }
    }
}

#[test]
fn quaternion_table_is_hamiltonian() {
    // i·j = k, j·k = i, k·i = j and each square is −1
    let e = |i| CdNumber::basis(4, i).unwrap();
    let mul = |a, b| cd_mul(&e(a), &e(b)).unwrap().coeffs().to_vec();
    assert_eq!(mul(1, 2), [0.0, 0.0, 0.0, 1.0]);
    assert_eq!(mul(2, 3), [0.0, 1.0, 0.0, 0.0]);
    assert_eq!(mul(3, 1), [0.0, 0.0, 1.0, 0.0]);
    assert_eq!(mul(2, 1), [0.0, 0.0, 0.0, -1.0]);
    for i in 1..4 {
        assert_eq!(mul(i, i), [-1.0, 0.0, 0.0, 0.0]);
    }
}

#[test]
fn octonion_units_anticommute_and_are_not_associative() {
    for a in 1..8 {
        assert_eq!(basis_product(8, a, a), (-1, 0));
        for b in (1..8).filter(|&b| b != a) {
            let (s, i) = basis_product(8, a, b);
            assert_eq!(basis_product(8, b, a), (-s, i));
        }
    }
    // (e1·e2)·e4 = −e1·(e2·e4) for octonions
    let e = |i| CdNumber::basis(8, i).unwrap();
    let left = cd_mul(&cd_mul(&e(1), &e(2)).unwrap(), &e(4)).unwrap();
    let right = cd_mul(&e(1), &cd_mul(&e(2), &e(4)).unwrap()).unwrap();
    let neg: Vec<f64> = right.coeffs().iter().map(|v| -v).collect();
    assert_eq!(left.coeffs(), &neg[..]);
}

fn coeffs(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, d)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop_oneof![Just(1usize), Just(2), Just(4), Just(8)].prop_flat_map(|d| (coeffs(d), coeffs(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn norm_composes((a, b) in pair()) {
        let (a, b) = (CdNumber::new(&a).unwrap(), CdNumber::new(&b).unwrap());
        let scale = a.norm() * b.norm();
        prop_assume!(scale > 1e-6);
        let ab = cd_mul(&a, &b).unwrap();
        prop_assert!((ab.norm() - scale).abs() / scale < 1e-10);
    }

    #[test]
    fn division_undoes_multiplication((u, x) in pair()) {
        let (u, x) = (CdNumber::new(&u).unwrap(), CdNumber::new(&x).unwrap());
        prop_assume!(x.norm() > 1e-3);
        let back = cd_div(&cd_mul(&u, &x).unwrap(), &x).unwrap();
        prop_assert!(rel_close(back.coeffs(), u.coeffs(), u.norm().max(1.0), 1e-10));
    }

    #[test]
    fn conjugation_reverses_products((a, b) in pair()) {
        let (a, b) = (CdNumber::new(&a).unwrap(), CdNumber::new(&b).unwrap());
        let lhs = cd_mul(&a, &b).unwrap().conj();
        let rhs = cd_mul(&b.conj(), &a.conj()).unwrap();
        prop_assert!(rel_close(lhs.coeffs(), rhs.coeffs(), a.norm() * b.norm() + 1.0, 1e-12));
    }

    #[test]
    fn householder_is_a_symmetric_involution(d in 2usize..64, seed in any::<u64>()) {
        let mut rng = rng_for(seed, &[]);
        let q = haar_orthogonal(d, &mut rng);
        let source: Vec<f64> = (0..d).map(|i| (i as f64 + 0.5).sin()).collect();
        let target = q.apply(&source);
        let s = householder_between(&source, &target).unwrap();
        let m = s.as_matrix();
        prop_assert!((m - m.transpose()).amax() < 1e-10);
        prop_assert!((m * m - nalgebra::DMatrix::<f64>::identity(d, d)).amax() < 1e-10);
        prop_assert!(rel_close(&s.apply(&source), &target, 1.0, 1e-10));
    }
}

#[test]
fn haar_entries_have_the_right_moments() {
    // entries of a Haar orthogonal d×d matrix: E[q²] = 1/d, E[q⁴] = 3/(d(d+2))
    let d = 8;
    let samples = 4000;
    let mut rng = rng_for(21, &[]);
    let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let q = haar_orthogonal(d, &mut rng);
        for v in q.as_matrix().iter() {
            m1 += v;
            m2 += v * v;
            m4 += v.powi(4);
        }
    }
    let count = (samples * d * d) as f64;
    let (m1, m2, m4) = (m1 / count, m2 / count, m4 / count);
    assert!(m1.abs() < 0.005, "mean {m1}");
    assert!((m2 - 1.0 / d as f64).abs() < 1e-12, "rows are unit vectors, E[q²] = {m2}");
    let want = 3.0 / (d * (d + 2)) as f64;
    assert!((m4 / want - 1.0).abs() < 0.03, "E[q⁴] = {m4}, want {want}");
}
