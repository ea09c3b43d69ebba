use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sflow_core::constants::{big_c, binomial, MultiIndex, Q};
use sflow_core::ncexpand::{
    coefficient_table, expand_to_depth, numerical_instantiation, power_coefficients, resolvent_word, verify_binomial_lemma,
    NCPoly,
};
use sflow_core::numkernel::{c, ComplexMatrix};
use sflow_core::triples::{circle_triple, double_up, Truncation};

#[test]
fn coefficients_equal_c_of_k_up_to_depth_six() {
    let mut compared = 0;
    for m in 1..=4 {
        let rows = coefficient_table(m, 6).unwrap();
        assert_eq!(rows.len(), MultiIndex::all_up_to(m, 6).len());
        for row in &rows {
            assert_eq!(row.coefficient, big_c(&MultiIndex(row.k.clone())).unwrap().to_string());
        }
        compared += rows.len();
    }
    assert_eq!(compared, 7 + 28 + 84 + 210);
}

#[test]
fn binomials_of_power_rule() {
    for n in 1..=4 {
        for (j, cj) in power_coefficients(n, 4).iter().enumerate() {
            assert_eq!(cj, &Q::from_integer(binomial(n + j - 1, j)));
        }
    }
}

#[test]
fn c_of_k_frozen_values() {
    let q = |n: i64, d: i64| Q::new(BigInt::from(n), BigInt::from(d));
    assert_eq!(big_c(&MultiIndex(vec![0])).unwrap(), q(1, 1));
    assert_eq!(big_c(&MultiIndex(vec![1])).unwrap(), q(1, 1));
    assert_eq!(big_c(&MultiIndex(vec![1, 1])).unwrap(), q(3, 1));
    assert_eq!(big_c(&MultiIndex(vec![0, 1])).unwrap(), q(2, 1));
    assert_eq!(big_c(&MultiIndex(vec![2, 0, 1])).unwrap(), q(5, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn normal_plus_remainder_matches_product(seed in 0u64..100_000, m in 1usize..=2, depth in 0usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dt = double_up(&circle_triple(2, Truncation::Circulant).unwrap(), "u").unwrap();
        let n = dt.dim();
        let ops: Vec<ComplexMatrix> = (0..m)
            .map(|_| ComplexMatrix::from_vec(n, n, (0..n * n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).unwrap())
            .collect();
        let s = rng.gen_range(0.0..3.0);
        let lam = c(0.25, rng.gen_range(-20.0..20.0));
        let (normal, rem) = expand_to_depth(m, depth).unwrap();
        let lhs = numerical_instantiation(&normal.add(&rem), &dt, s, lam, &ops).unwrap();
        let rhs = numerical_instantiation(&NCPoly::word(resolvent_word(m)), &dt, s, lam, &ops).unwrap();
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-10 * rhs.max_abs().max(1e-300));
    }

    #[test]
    fn binomial_lemma(n in 1usize..20, k in 0usize..20) {
        prop_assert!(verify_binomial_lemma(n, k));
    }
}
