use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sflow_core::numkernel::{c, eigh, func_calc, op_norm, ComplexMatrix, HermitianMatrix, SparseMatrix, TraceWeights};
use sflow_core::triples::{
    circle_triple, double_up, iterated_comm, tail_bound_with, tail_constant, weighted_sum_triple, SpectralTripleRep,
    TripleJson, Truncation,
};
use std::collections::BTreeMap;

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let data = (0..n * n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let x = ComplexMatrix::from_vec(n, n, data).unwrap();
    let h = HermitianMatrix::new(x.add(&x.adjoint()).scale_re(0.5)).unwrap();
    func_calc(&h, |x| c(0.0, 3.0 * x).exp()).unwrap()
}

fn random_triple(seed: u64, n: usize) -> SpectralTripleRep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    let mut gens = BTreeMap::new();
    gens.insert("u".to_string(), random_unitary(&mut rng, n));
    SpectralTripleRep::new(HermitianMatrix::from_real_diag(&d), gens, TraceWeights::new(w).unwrap(), 1.0, "random").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn doubled_relations_hold(seed in 0u64..10_000, n in 2usize..6) {
        let dt = double_up(&random_triple(seed, n), "u").unwrap();
        for (name, v) in dt.relation_defects() {
            prop_assert!(v <= 1e-12, "{name}: {v}");
        }
    }

    #[test]
    fn json_roundtrip(seed in 0u64..10_000, n in 1usize..6) {
        let t = random_triple(seed, n);
        let text = serde_json::to_string(&t.to_json()).unwrap();
        let back = SpectralTripleRep::from_json(&serde_json::from_str::<TripleJson>(&text).unwrap()).unwrap();
        prop_assert_eq!(back.to_json(), t.to_json());
    }

    #[test]
    fn iterated_comm_is_entrywise(seed in 0u64..10_000, k in 0usize..4) {
        let t = random_triple(seed, 4);
        let x = t.gen("u").unwrap().clone();
        let d = t.d.real_diag();
        let got = iterated_comm(&t, &x, k);
        let want = ComplexMatrix::from_fn(4, 4, |i, j| x[(i, j)] * (d[i] * d[i] - d[j] * d[j]).powi(k as i32));
        prop_assert!(got.approx_eq(&want, 1e-9 * want.max_abs().max(1.0)));
    }
}

#[test]
fn circulant_doubled_relations() {
    for n in [1, 2, 8, 32] {
        let dt = double_up(&circle_triple(n, Truncation::Circulant).unwrap(), "u").unwrap();
        assert!(dt.relation_defects().values().all(|&v| v <= 1e-12));
        let q = eigh(&dt.q_dense()).unwrap();
        assert!(q.eigenvalues.iter().all(|l| (l.abs() - 1.0).abs() < 1e-12));
    }
}

#[test]
fn circle_construction() {
    let t = circle_triple(1, Truncation::Plain).unwrap();
    assert_eq!(t.d.real_diag(), vec![-1.0, 0.0, 1.0]);
    let u = t.gen("u").unwrap();
    assert_eq!(u[(2, 1)], c(1.0, 0.0));
    assert_eq!(u.column(2).iter().map(|z| z.norm()).sum::<f64>(), 0.0);
    let t = circle_triple(1, Truncation::Circulant).unwrap();
    let u = t.gen("u").unwrap();
    assert!(u.pow(3).approx_eq(&ComplexMatrix::identity(3), 0.0));
}

#[test]
fn plain_commutator_is_u_inside() {
    let t = circle_triple(6, Truncation::Plain).unwrap();
    let u = t.gen("u").unwrap();
    assert!(t.comm_d(u).approx_eq(u, 1e-14));
}

#[test]
fn weighted_dimension() {
    let a = circle_triple(4, Truncation::Plain).unwrap();
    let s = weighted_sum_triple(&a, &a, 1.0, 0.5).unwrap();
    assert_eq!(s.weights.total(), 1.5 * 9.0);
    let z = weighted_sum_triple(&a, &a, 1.0, 0.0).unwrap();
    assert_eq!(z.weights.total(), 9.0);
}

#[test]
fn unit_generator_has_zero_anticommutator() {
    let mut t = circle_triple(3, Truncation::Plain).unwrap();
    t.gens.insert("one".into(), ComplexMatrix::identity(7));
    assert_eq!(double_up(&t, "one").unwrap().anti.max_abs(), 0.0);
}

#[test]
fn circulant_anti_norm_matches_commutator() {
    let t = circle_triple(2, Truncation::Circulant).unwrap();
    let dt = double_up(&t, "u").unwrap();
    let du = op_norm(&t.comm_d(t.gen("u").unwrap())).unwrap();
    assert!((op_norm(&dt.anti_dense()).unwrap() - du).abs() < 1e-10);
}

/// Trace norm of (1 + D̃² + s² + s·A)^{−p/2−r} against its bound on the 20-point grid, A = {D̃, q}
/// for the plain circle (‖A‖ = 1).
#[test]
fn tail_bound_dominates_on_grid() {
    let t = circle_triple(32, Truncation::Plain).unwrap();
    let dt = double_up(&t, "u").unwrap();
    let anti = dt.anti_dense();
    let norm_a = op_norm(&anti).unwrap();
    assert!((norm_a - 1.0).abs() < 1e-10);
    let (p, eps) = (1.0, 0.05);
    let cst = tail_constant(&dt.dt, dt.weights4.as_slice(), p, eps).unwrap();
    let d2 = dt.dt.mul(&dt.dt).to_dense();
    let id = SparseMatrix::identity(dt.dim()).to_dense();
    for s in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let op = HermitianMatrix::new(id.scale_re(1.0 + s * s).add(&d2).add(&anti.scale_re(s))).unwrap();
        let ev = eigh(&op).unwrap().eigenvalues;
        for r in [0.5, 1.0, 1.5, 2.0] {
            let actual: f64 = ev.iter().map(|l| l.powf(-p / 2.0 - r)).sum();
            let bound = tail_bound_with(cst, norm_a, r, eps, s).unwrap();
            assert!(bound > actual, "s={s} r={r}: {bound} vs {actual}");
        }
    }
}

#[test]
fn tail_bound_rejects_large_perturbation() {
    assert!(tail_bound_with(1.0, 1.5, 1.0, 0.05, 1.0).is_err());
}
