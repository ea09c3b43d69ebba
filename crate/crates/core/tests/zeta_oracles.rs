use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sflow_core::constants::{gamma, sigma_coeffs, Q};
use sflow_core::numkernel::{c, C64};
use sflow_core::triples::{circle_triple, weighted_sum_triple, Truncation};
use sflow_core::zeta::{
    full_line_residue, full_line_zeta, gamma_quotient_check, low_dim_flow, res_extract, sf_residue_cocycle,
    sf_zeta_sum_residue, ResidueEngine, DEFAULT_TERMS,
};
use std::f64::consts::PI;

/// Σ_n (1+n²)^{−1} = π coth π and Σ_n (1+n²)^{−2} = (π coth π + π² csch² π)/2.
#[test]
fn full_line_zeta_closed_forms() {
    let coth = 1.0 / PI.tanh();
    let csch2 = 1.0 / PI.sinh().powi(2);
    let z1 = full_line_zeta(c(1.0, 0.0), DEFAULT_TERMS).unwrap();
    assert!((z1.re - PI * coth).abs() < 1e-12, "{z1}");
    let z2 = full_line_zeta(c(2.0, 0.0), DEFAULT_TERMS).unwrap();
    assert!((z2.re - 0.5 * (PI * coth + PI * PI * csch2)).abs() < 1e-12, "{z2}");
}

#[test]
fn residue_at_half_is_one() {
    let f = |s: C64| full_line_zeta(s, DEFAULT_TERMS);
    let l = res_extract(&f, c(0.5, 0.0), 0).unwrap();
    assert!((l.residues[&0] - c(1.0, 0.0)).norm() < 1e-6);
    assert_eq!(full_line_residue(0), 1.0);
    // binom(1/2, 1) and binom(3/2, 2).
    assert!((full_line_residue(1) - 0.5).abs() < 1e-15);
    assert!((full_line_residue(2) - 0.375).abs() < 1e-15);
}

#[test]
fn sigma_is_elementary_symmetric() {
    for h in 0..=12usize {
        let roots: Vec<Q> = (0..h).map(|i| Q::new(BigInt::from(2 * i + 1), BigInt::from(2))).collect();
        // e_0..e_h by the standard recursion.
        let mut e = vec![Q::from_integer(BigInt::from(1))];
        for r in &roots {
            let mut next = e.clone();
            next.push(Q::from_integer(BigInt::from(0)));
            for i in 1..next.len() {
                next[i] = &e.get(i).cloned().unwrap_or_else(|| Q::from_integer(BigInt::from(0))) + &e[i - 1] * r;
            }
            e = next;
        }
        let s = sigma_coeffs(h);
        for j in 0..=h {
            assert_eq!(s.get(j), e[h - j], "h={h} j={j}");
        }
    }
}

#[test]
fn gamma_frozen_values() {
    assert!((gamma(c(0.5, 0.0)).unwrap().re - PI.sqrt()).abs() < 1e-10);
    let g = gamma(c(1.0, 1.0)).unwrap();
    assert!((g - c(0.498015668118356, -0.154949828301811)).norm() < 1e-12);
}

#[test]
fn gamma_recurrence_on_strip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 100 {
        let z = c(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if z.im.abs() < 1e-3 && (z.re - z.re.round()).abs() < 1e-3 {
            continue;
        }
        let lhs = gamma(z + 1.0).unwrap();
        let rhs = z * gamma(z).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm(), "{z}");
        checked += 1;
    }
}

#[test]
fn gamma_quotient_up_to_h8() {
    for h in 0..=8 {
        for p in [1.0, 2.0, 3.0] {
            let (a, b) = gamma_quotient_check(p, h, c(0.2, -0.35)).unwrap();
            assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
        }
    }
}

#[test]
fn residue_flows_are_integers_on_circle() {
    for w in -3i32..=3 {
        let t = circle_triple(6, Truncation::Plain).unwrap().with_power("u", w, "v").unwrap();
        let a = sf_residue_cocycle(&t, "v").unwrap();
        let b = sf_zeta_sum_residue(&t, "v").unwrap();
        let l = low_dim_flow(&t, "v").unwrap();
        for x in [a, b, l] {
            assert!((x - w as f64).abs() < 1e-8, "w={w}: {x}");
        }
    }
}

#[test]
fn weighted_flow_is_one_and_a_half() {
    let c1 = circle_triple(6, Truncation::Plain).unwrap();
    let t = weighted_sum_triple(&c1, &c1, 1.0, 0.5).unwrap();
    assert!((sf_residue_cocycle(&t, "u").unwrap() - 1.5).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// With p = 3 two degrees contribute; the total is still the winding number.
    #[test]
    fn artificial_dimension_three(w in -3i32..=3) {
        let t = circle_triple(5, Truncation::Plain).unwrap().with_power("u", w, "v").unwrap();
        let e = ResidueEngine::new(&t).with_p(3.0).unwrap();
        prop_assert!((e.sf_residue_cocycle(&t, "v").unwrap() - w as f64).abs() < 1e-8);
        prop_assert!((e.sf_zeta_sum_residue(&t, "v").unwrap() - w as f64).abs() < 1e-8);
    }

    #[test]
    fn residue_cocycle_property_p3(a in -1.0f64..1.0, b in -1.0f64..1.0, cc in -1.0f64..1.0) {
        let t = circle_triple(4, Truncation::Plain).unwrap();
        let e = ResidueEngine::new(&t).with_p(3.0).unwrap();
        let model = e.model.clone().unwrap();
        let u = model.compile(t.gen("u").unwrap()).unwrap();
        let us = model.compile(&t.gen("u").unwrap().adjoint()).unwrap();
        let lin = |x: f64, y: f64, z: f64| model.identity().scale(c(x, 0.0)).add(&u.scale(c(y, 0.3))).add(&us.scale(c(z, -0.2)));
        let args = [lin(a, 1.0, b), lin(b, cc, 0.7), lin(cc, a, 1.1)];
        let (d, scale) = e.cocycle_defect(1, &args).unwrap();
        prop_assert!(d.norm() <= 1e-6 * scale.max(1e-12));
    }
}

/// At r = 1 the un-continued zeta sum is w·Z(3/2) while doubledFlow·C_{3/2} tends to 2w; the gap
/// (≈ 0.0249, the Poisson-summation remainder) is about 1.2% of the value.
#[test]
fn consistency_chain_at_r_one() {
    use sflow_core::flow::doubled_flow;
    use sflow_core::triples::{c_beta_re, double_up};
    let t = circle_triple(64, Truncation::Plain).unwrap();
    let zs = ResidueEngine::new(&t).zeta_sum_at(&t, "u", 1.0).unwrap();
    assert!(zs.im.abs() < 1e-12);
    assert!((zs.re - full_line_zeta(c(1.5, 0.0), DEFAULT_TERMS).unwrap().re).abs() < 1e-12);
    let f = doubled_flow(&double_up(&t, "u").unwrap(), 1.0, 1.0).unwrap();
    let lhs = f.value * c_beta_re(1.5).unwrap();
    assert!((lhs - zs.re).abs() <= 2e-2 * zs.re.abs(), "{lhs} vs {}", zs.re);
}
