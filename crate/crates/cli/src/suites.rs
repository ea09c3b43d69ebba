use anyhow::{bail, Result};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sflow_core::constants::{gamma, Q};
use sflow_core::cyclic::{b_chain, big_b_chain, boundary_witness, chern_chain, Algebra, Chain, Sym};
use sflow_core::flow::{even_term_supertrace, path_independence_check, rho_symmetry_check};
use sflow_core::ncexpand::{coefficient_table, expand_to_depth, numerical_instantiation, power_coefficients, resolvent_word, NCPoly};
use sflow_core::constants::binomial;
use sflow_core::numkernel::{c, eigh, func_calc, op_norm, ComplexMatrix, ContourSpec, HermitianMatrix, SparseMatrix, TraceWeights};
use sflow_core::resolvent::{c_beta_quadrature, cocycle_defect, scalar_cauchy_oracle, scalar_laplace_oracle, CochainOpts, ResolventCochain};
use sflow_core::triples::{circle_triple, double_up, tail_bound_with, tail_constant, SpectralTripleRep, Truncation};
use sflow_core::zeta::ResidueEngine;
use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Cyclic,
    Ncexpand,
    Resolvent,
    Identities,
}

impl FromStr for Suite {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cyclic" => Suite::Cyclic,
            "ncexpand" => Suite::Ncexpand,
            "resolvent" => Suite::Resolvent,
            "identities" => Suite::Identities,
            _ => bail!("unknown suite {s:?}; choose cyclic, ncexpand, resolvent or identities"),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// The measured quantity (a defect, a count of failures, …).
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: value <= tolerance, value, tolerance, detail: None }
    }
    fn with_detail(mut self, d: serde_json::Value) -> Self {
        self.detail = Some(d);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn run_property_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match suite {
        Suite::Cyclic => cyclic(&mut rng)?,
        Suite::Ncexpand => ncexpand(&mut rng)?,
        Suite::Resolvent => resolvent(&mut rng)?,
        Suite::Identities => identities()?,
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport { suite, seed, passed, checks })
}

fn rand_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let data = (0..n * n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ComplexMatrix::from_vec(n, n, data).expect("square data")
}

fn rand_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Result<HermitianMatrix> {
    let x = rand_matrix(rng, n);
    Ok(HermitianMatrix::new(x.add(&x.adjoint()).scale_re(0.5))?)
}

fn rand_unitary(rng: &mut ChaCha8Rng, n: usize) -> Result<ComplexMatrix> {
    let h = rand_hermitian(rng, n)?;
    Ok(func_calc(&h, |x| c(0.0, 2.0 * x).exp())?)
}

fn rand_chain(rng: &mut ChaCha8Rng, alg: &Arc<Algebra>, syms: &[Sym]) -> Chain {
    let mut ch = Chain::zero(alg);
    for _ in 0..rng.gen_range(1..=4) {
        let degree = rng.gen_range(0..=6);
        let words = (0..=degree).map(|_| (0..rng.gen_range(0..=3)).map(|_| syms[rng.gen_range(0..syms.len())]).collect()).collect();
        let coeff = Q::from_integer(BigInt::from(rng.gen_range(-5i64..=5)));
        ch.insert(coeff, words);
    }
    ch
}

fn cyclic(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut alg = Algebra::new(3);
    let (u, us) = alg.add_unitary("u", rand_unitary(rng, 3)?)?;
    let (v, vs) = alg.add_unitary("v", rand_unitary(rng, 3)?)?;
    let a = alg.add("a", rand_hermitian(rng, 3)?.into_matrix())?;
    let alg = Arc::new(alg);
    let syms = [u, us, v, vs, a];
    let (mut bb, mut big_bb, mut anti) = (0, 0, 0);
    for _ in 0..50 {
        let ch = rand_chain(rng, &alg, &syms);
        bb += usize::from(!b_chain(&b_chain(&ch)).is_zero());
        big_bb += usize::from(!big_b_chain(&big_b_chain(&ch)).is_zero());
        anti += usize::from(!b_chain(&big_b_chain(&ch)).add(&big_b_chain(&b_chain(&ch))).is_zero());
    }
    let mut witness_failures = 0;
    for _ in 0..5 {
        let mut alg = Algebra::new(4);
        let (u, us) = alg.add_unitary("u", rand_unitary(rng, 4)?)?;
        let alg = Arc::new(alg);
        let z = boundary_witness(&alg, u, 5)?;
        let lhs = b_chain(&z).add(&big_b_chain(&z)).truncate(5);
        let rhs = chern_chain(&alg, u, 5)?.add(&chern_chain(&alg, us, 5)?);
        witness_failures += [1, 3, 5].iter().filter(|&&m| lhs.degree_part(m) != rhs.degree_part(m)).count();
    }
    Ok(vec![
        Check::at_most("b^2 = 0", bb as f64, 0.0),
        Check::at_most("B^2 = 0", big_bb as f64, 0.0),
        Check::at_most("bB + Bb = 0", anti as f64, 0.0),
        Check::at_most("witness (b+B)z = Ch(u*) + Ch(u)", witness_failures as f64, 0.0),
    ])
}

fn ncexpand(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut table = BTreeMap::new();
    let mut compared = 0usize;
    let mut mismatches = 0usize;
    for m in 1..=3 {
        match coefficient_table(m, 4) {
            Ok(rows) => {
                compared += rows.len();
                table.insert(m, rows);
            }
            Err(_) => mismatches += 1,
        }
    }
    checks.push(
        Check::at_most("coefficients equal C(k), m <= 3, |k| <= 4", mismatches as f64, 0.0)
            .with_detail(serde_json::json!({ "compared": compared, "table": table })),
    );
    let mut bad = 0;
    for n in 1..=4 {
        for (j, cj) in power_coefficients(n, 4).iter().enumerate() {
            bad += usize::from(*cj != Q::from_integer(binomial(n + j - 1, j)));
        }
    }
    checks.push(Check::at_most("power-rule binomials, n, j <= 4", bad as f64, 0.0));

    let dt = double_up(&circle_triple(2, Truncation::Circulant)?, "u")?;
    let n = dt.dim();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = rng.gen_range(1..=3);
        let depth = rng.gen_range(0..=3);
        let ops: Vec<ComplexMatrix> = (0..m).map(|_| rand_matrix(rng, n)).collect();
        let s = rng.gen_range(0.0..3.0);
        let lam = c(0.25, rng.gen_range(-20.0..20.0));
        let (normal, rem) = expand_to_depth(m, depth)?;
        let lhs = numerical_instantiation(&normal.add(&rem), &dt, s, lam, &ops)?;
        let rhs = numerical_instantiation(&NCPoly::word(resolvent_word(m)), &dt, s, lam, &ops)?;
        worst = worst.max(lhs.sub(&rhs).max_abs() / rhs.max_abs());
    }
    checks.push(Check::at_most("normal + remainder = product, 20 instances", worst, 1e-10));
    Ok(checks)
}

fn rand_triple(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Result<SpectralTripleRep> {
    let x = rand_matrix(rng, n);
    let d = HermitianMatrix::new(x.add(&x.adjoint()).scale_re(1.5))?;
    Ok(SpectralTripleRep::new(d, BTreeMap::new(), TraceWeights::uniform(n), p, "random")?)
}

fn resolvent(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let r = c(2.0, 0.0);
    let (mut worst_rel, mut worst_b) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let t = rand_triple(rng, 4, 3.0)?;
        let args: Vec<ComplexMatrix> = (0..3).map(|_| rand_matrix(rng, 4)).collect();
        let (d, scale) = cocycle_defect(&t, 1, r, &args)?;
        worst_rel = worst_rel.max(d.norm() / scale);
        let rc = ResolventCochain::new(&t, CochainOpts::quadrature(3.0))?;
        worst_b = worst_b.max(rc.b_phi1(r, &args[0])?.norm());
    }
    let mut checks = vec![
        Check::at_most("cocycle defect, 10 random 4x4 triples (relative)", worst_rel, 1e-7),
        Check::at_most("B phi_1 vanishes", worst_b, 1e-9),
    ];

    let cs = ContourSpec::default();
    let mut cauchy = 0;
    for mu in [1.0, 2.0, 4.0, 10.0] {
        for beta in [c(1.0, 0.0), c(1.5, 0.0), c(2.5, 0.5)] {
            for n in 1..=3 {
                cauchy += usize::from(scalar_cauchy_oracle(mu, beta, n, &cs).is_err());
            }
        }
    }
    checks.push(Check::at_most("Cauchy oracle vs quadrature (1e-8)", cauchy as f64, 0.0));
    let mut laplace = 0;
    for mu in [0.0, 1.0, 3.0] {
        for m in 0..=3 {
            for extra in [0.5, 2.0] {
                laplace += usize::from(scalar_laplace_oracle(mu, m, c((m as f64 + 1.0) / 2.0 + extra, 0.0)).is_err());
            }
        }
    }
    checks.push(Check::at_most("Laplace oracle vs quadrature (1e-8)", laplace as f64, 0.0));
    let mut worst_cb = 0.0f64;
    for b in [1.0, 1.5, 2.0, 3.0, 4.5] {
        let g = sflow_core::constants::c_beta(c(b, 0.0))?.re;
        worst_cb = worst_cb.max((c_beta_quadrature(b)? - g).abs());
    }
    checks.push(Check::at_most("cBeta vs quadrature", worst_cb, 1e-9));
    let g = (gamma(c(0.5, 0.0))? - c(std::f64::consts::PI.sqrt(), 0.0)).norm();
    checks.push(Check::at_most("Gamma(1/2) = sqrt(pi)", g, 1e-10));
    Ok(checks)
}

fn identities() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let dt = double_up(&circle_triple(8, Truncation::Circulant)?, "u")?;
    let mut rho = 0.0f64;
    for s in [0.0, 1.0, 2.5] {
        rho = rho.max(rho_symmetry_check(&dt, s, 3.0)?);
    }
    checks.push(Check::at_most("rho symmetry", rho, 1e-10));

    let (x0, x1, via_a, via_b) = path_points(&dt)?;
    let path = path_independence_check(&dt, &x0, &x1, &via_a, &via_b, 3.0)?;
    checks.push(Check::at_most("path independence", path, 1e-6));

    let small = double_up(&circle_triple(3, Truncation::Circulant)?, "u")?;
    let mut even = 0.0f64;
    for k in [0, 2] {
        let r = even_term_supertrace(&small, k, 0.7, 1.5, &ContourSpec::default())?;
        even = even.max(r.value.norm() - r.error.max(1e-10));
    }
    checks.push(Check::at_most("even-term supertrace vanishes", even.max(0.0), 0.0));

    checks.push(tail_bound_grid()?);

    let t = circle_triple(6, Truncation::Plain)?.with_power("u", 2, "v")?;
    let (a, b) = ResidueEngine::new(&t).residue_rescaling(&t, "v")?;
    checks.push(Check::at_most("residue rescaling", (a - b).abs(), 1e-6));
    Ok(checks)
}

/// Endpoints and two different polygons between them, all commuting with the grading.
pub fn path_points(
    dt: &sflow_core::triples::DoubledTriple,
) -> Result<(HermitianMatrix, HermitianMatrix, Vec<HermitianMatrix>, Vec<HermitianMatrix>)> {
    let h = |m: SparseMatrix, s: f64| HermitianMatrix::new(m.to_dense().scale_re(s));
    let x0 = HermitianMatrix::new(ComplexMatrix::zeros(dt.dim(), dt.dim()))?;
    let x1 = h(dt.q.clone(), 0.4)?;
    let via_a = vec![h(dt.gamma.clone(), 0.3)?];
    let via_b = vec![h(dt.q.add(&dt.rho), 0.25)?, h(dt.gamma.clone(), -0.2)?];
    Ok((x0, x1, via_a, via_b))
}

/// Trace norm of (1 + D̃² + s² + s·A)^{−p/2−r}, A = {D̃, q} on the plain circle (‖A‖ = 1),
/// against its bound on s ∈ {0, .5, 1, 2, 5} × r ∈ {.5, 1, 1.5, 2}; strict inequality.
pub fn tail_bound_grid() -> Result<Check> {
    let dt = double_up(&circle_triple(32, Truncation::Plain)?, "u")?;
    let anti = dt.anti_dense();
    let norm_a = op_norm(&anti)?;
    let (p, eps) = (1.0, 0.05);
    let cst = tail_constant(&dt.dt, dt.weights4.as_slice(), p, eps)?;
    let d2 = dt.dt.mul(&dt.dt).to_dense();
    let id = ComplexMatrix::identity(dt.dim());
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for s in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let op = HermitianMatrix::new(id.scale_re(1.0 + s * s).add(&d2).add(&anti.scale_re(s)))?;
        let e = eigh(&op)?;
        // τ(f(op)) = Σ_k f(λ_k)·Σ_i w_i |v_ik|².
        let w = dt.weights4.as_slice();
        let mass: Vec<f64> = (0..dt.dim()).map(|k| (0..dt.dim()).map(|i| w[i] * e.eigenvectors[(i, k)].norm_sqr()).sum()).collect();
        for r in [0.5, 1.0, 1.5, 2.0] {
            let actual: f64 = e.eigenvalues.iter().zip(&mass).map(|(l, m)| m * l.powf(-p / 2.0 - r)).sum();
            let bound = tail_bound_with(cst, norm_a, r, eps, s)?;
            violations += usize::from(!(bound > actual));
            min_ratio = min_ratio.min(bound / actual);
        }
    }
    Ok(Check::at_most("tail bound dominates on 20-point grid", violations as f64, 0.0)
        .with_detail(serde_json::json!({ "minBoundOverActual": min_ratio })))
}
