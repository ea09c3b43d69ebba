//! Zeta functions of circle-type triples, residue extraction, the residue cocycle φ_m and the
//! residue formulas for spectral flow.
//!
//! Generators of a (possibly weighted, block-diagonal) truncated circle triple are compiled
//! to band operators on ℓ²(Z): X e_n = Σ_a f_a(n) e_{n+a} with polynomial f_a. The diagonal
//! of a product is then a polynomial c(n), and Σ_n c(n)(1+n²)^{−σ} reduces to shifted copies
//! of Z(σ) = Σ_{n∈Z}(1+n²)^{−σ}, continued through ζ_R by the binomial expansion.

use crate::constants::{alpha, gamma, n_cap, q_to_f64, sigma_coeffs, sqrt_2pi_i, MultiIndex};
use crate::cyclic::chern_coefficient;
use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, C64, ONE, ZERO};
use crate::triples::{SpectralTripleRep, Truncation};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

const BERNOULLI: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Default number of binomial terms in the continuation of Z.
pub const DEFAULT_TERMS: usize = 48;

/// Σ_{n≥start} n^{−s} by Euler–Maclaurin.
fn em_sum(s: C64, start: usize) -> C64 {
    let big_n = (start + 20).max(s.norm().ceil() as usize + 12);
    let mut total = ZERO;
    for n in start..big_n {
        total += C64::new(n as f64, 0.0).powc(-s);
    }
    let nf = C64::new(big_n as f64, 0.0);
    let ln = nf.ln();
    total += (ln * (ONE - s)).exp() / (s - 1.0) + (-s * ln).exp() * 0.5;
    // s(s+1)…(s+2k−2)·N^{−s−2k+1}·B_{2k}/(2k)!
    let mut rising = s;
    let mut fact = 2.0;
    let mut pw = (-(s + 1.0) * ln).exp();
    for (k, b) in BERNOULLI.iter().enumerate() {
        let kk = k + 1;
        total += rising * pw * (b / fact);
        rising *= (s + (2 * kk - 1) as f64) * (s + (2 * kk) as f64);
        fact *= ((2 * kk + 1) * (2 * kk + 2)) as f64;
        pw /= nf * nf;
    }
    total
}

/// ζ_R(s) for s ≠ 1; accurate to about 1e-13 on Re s > −5.
pub fn riemann_zeta(s: C64) -> Result<C64> {
    if (s - 1.0).norm() == 0.0 {
        return Err(Error::Pole("Riemann zeta at s = 1".into()));
    }
    Ok(em_sum(s, 1))
}

/// ζ_R(s) − 1.
fn zeta_minus_one(s: C64) -> C64 {
    if s.re > 40.0 {
        // Direct sum converges to machine precision after a few terms.
        (2..8).map(|n| C64::new(n as f64, 0.0).powc(-s)).sum()
    } else {
        em_sum(s, 2)
    }
}

/// binom(a, k) for complex a.
pub fn binom_c(a: C64, k: usize) -> C64 {
    let mut c = ONE;
    for j in 0..k {
        c *= (a - j as f64) / (j as f64 + 1.0);
    }
    c
}

fn remainder_bound(sigma: C64, k_terms: usize) -> f64 {
    let x = 2.0 * sigma.re + 2.0 * k_terms as f64 + 2.0;
    if x <= 2.0 || (k_terms as f64 + 1.0) < sigma.norm() - 3.0 {
        return f64::INFINITY;
    }
    2.0 * binom_c(-sigma, k_terms + 1).norm() * 2f64.powf(-x) * (1.0 + 2.0 / (x - 1.0))
}

/// Smallest binomial truncation whose remainder bound is below 1e-15.
pub fn required_terms(sigma: C64) -> usize {
    (0..2000).find(|&k| remainder_bound(sigma, k) <= 1e-15).unwrap_or(2000)
}

/// Z(σ) = Σ_{n∈Z}(1+n²)^{−σ} = 1 + 2(2^{−σ} + Σ_{k≤K} binom(−σ,k)(ζ_R(2σ+2k) − 1)).
pub fn full_line_zeta(sigma: C64, k_terms: usize) -> Result<C64> {
    let need = required_terms(sigma);
    if k_terms < need {
        return Err(Error::ZetaTerms(need));
    }
    let mut t = C64::new(2.0, 0.0).powc(-sigma);
    for k in 0..=k_terms {
        let s = sigma * 2.0 + 2.0 * k as f64;
        if (s - 1.0).norm() == 0.0 {
            return Err(Error::Pole(format!("Z at σ = {sigma}")));
        }
        t += binom_c(-sigma, k) * zeta_minus_one(s);
    }
    Ok(ONE + t * 2.0)
}

/// Residue of Z at σ = 1/2 − k: binom(k − 1/2, k).
pub fn full_line_residue(k: usize) -> f64 {
    binom_c(C64::new(k as f64 - 0.5, 0.0), k).re
}

type Poly = Vec<C64>;

fn poly_trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(|c| c.norm() == 0.0) {
        p.pop();
    }
    p
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += c;
    }
    poly_trim(out)
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(out)
}

/// p(n + b).
fn poly_shift(p: &Poly, b: i64) -> Poly {
    let mut out = vec![ZERO; p.len()];
    for (i, c) in p.iter().enumerate() {
        // (n + b)^i = Σ_l binom(i, l) b^{i−l} n^l
        let mut binom = 1.0;
        for l in (0..=i).rev() {
            out[l] += c * binom * (b as f64).powi((i - l) as i32);
            binom = binom * l as f64 / (i - l + 1) as f64;
        }
    }
    poly_trim(out)
}

/// Band operator on ℓ²(Z): X e_n = Σ_a f_a(n) e_{n+a}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BandOp {
    pub terms: BTreeMap<i64, Poly>,
}

impl BandOp {
    pub fn identity() -> Self {
        Self::shift(0, ONE)
    }

    pub fn shift(a: i64, c: C64) -> Self {
        let mut terms = BTreeMap::new();
        if c != ZERO {
            terms.insert(a, vec![c]);
        }
        Self { terms }
    }

    fn insert(&mut self, a: i64, p: Poly) {
        let cur = self.terms.remove(&a).unwrap_or_default();
        let sum = poly_add(&cur, &p);
        if !sum.is_empty() {
            self.terms.insert(a, sum);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (&a, p) in &o.terms {
            out.insert(a, p.clone());
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = Self::default();
        for (&a, p) in &self.terms {
            out.insert(a, p.iter().map(|x| x * c).collect());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-ONE))
    }

    /// (XY)e_n = Σ_{a,b} f_a(n+b) g_b(n) e_{n+a+b}.
    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::default();
        for (&a, f) in &self.terms {
            for (&b, g) in &o.terms {
                out.insert(a + b, poly_mul(&poly_shift(f, b), g));
            }
        }
        out
    }

    /// [D, X]: f_a ↦ a·f_a.
    pub fn comm_d(&self) -> Self {
        let mut out = Self::default();
        for (&a, f) in &self.terms {
            out.insert(a, f.iter().map(|x| x * a as f64).collect());
        }
        out
    }

    /// [D², X]: f_a ↦ (a² + 2an)·f_a.
    pub fn comm_d2(&self) -> Self {
        let mut out = Self::default();
        for (&a, f) in &self.terms {
            let af = a as f64;
            out.insert(a, poly_mul(f, &vec![C64::new(af * af, 0.0), C64::new(2.0 * af, 0.0)]));
        }
        out
    }

    pub fn iter_comm(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |x, _| x.comm_d2())
    }

    pub fn diagonal(&self) -> Poly {
        self.terms.get(&0).cloned().unwrap_or_default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleBlock {
    pub start: usize,
    pub half: usize,
    pub weight: f64,
}

/// Block structure of a triple whose blocks are truncated circles D = diag(−N, …, N).
#[derive(Clone, Debug, PartialEq)]
pub struct CircleModel {
    pub blocks: Vec<CircleBlock>,
    pub circulant: bool,
}

impl CircleModel {
    pub fn detect(t: &SpectralTripleRep) -> Option<Self> {
        let d = t.d.matrix();
        if !d.is_diagonal() {
            return None;
        }
        let w = t.weights.as_slice();
        let mut blocks = Vec::new();
        for &(start, len) in &t.blocks {
            if len % 2 == 0 {
                return None;
            }
            let half = len / 2;
            for i in 0..len {
                if d[(start + i, start + i)].re != i as f64 - half as f64 || w[start + i] != w[start] {
                    return None;
                }
            }
            blocks.push(CircleBlock { start, half, weight: w[start] });
        }
        Some(Self { blocks, circulant: t.truncation == Some(Truncation::Circulant) })
    }

    /// Band limit of a matrix, blockwise; None if some diagonal is not constant.
    pub fn compile(&self, a: &ComplexMatrix) -> Option<CircleOp> {
        let n = a.rows();
        let mut owner = vec![usize::MAX; n];
        for (b, blk) in self.blocks.iter().enumerate() {
            for i in 0..2 * blk.half + 1 {
                owner[blk.start + i] = b;
            }
        }
        let tol = 1e-12 * a.max_abs().max(1e-300);
        let mut diags: Vec<BTreeMap<i64, C64>> = vec![BTreeMap::new(); self.blocks.len()];
        for i in 0..n {
            for j in 0..n {
                let x = a[(i, j)];
                if x.norm() <= tol {
                    continue;
                }
                let b = owner[i];
                if owner[j] != b {
                    return None;
                }
                let size = 2 * self.blocks[b].half as i64 + 1;
                let mut off = i as i64 - j as i64;
                if self.circulant {
                    if off > size / 2 {
                        off -= size;
                    } else if off < -(size / 2) {
                        off += size;
                    }
                }
                match diags[b].get(&off) {
                    Some(&v) if (v - x).norm() > tol => return None,
                    Some(_) => {}
                    None => {
                        diags[b].insert(off, x);
                    }
                }
            }
        }
        let parts = diags
            .into_iter()
            .map(|m| m.into_iter().fold(BandOp::default(), |acc, (off, c)| acc.add(&BandOp::shift(off, c))))
            .collect();
        Some(CircleOp { parts })
    }

    pub fn identity(&self) -> CircleOp {
        CircleOp { parts: vec![BandOp::identity(); self.blocks.len()] }
    }
}

/// Blockwise band operator, aligned with the blocks of a `CircleModel`.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleOp {
    pub parts: Vec<BandOp>,
}

impl CircleOp {
    fn zip(&self, o: &Self, f: impl Fn(&BandOp, &BandOp) -> BandOp) -> Self {
        Self { parts: self.parts.iter().zip(&o.parts).map(|(a, b)| f(a, b)).collect() }
    }
    fn map(&self, f: impl Fn(&BandOp) -> BandOp) -> Self {
        Self { parts: self.parts.iter().map(f).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        self.zip(o, BandOp::mul)
    }
    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, BandOp::add)
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, BandOp::sub)
    }
    pub fn scale(&self, c: C64) -> Self {
        self.map(|x| x.scale(c))
    }
    pub fn comm_d(&self) -> Self {
        self.map(BandOp::comm_d)
    }
    pub fn iter_comm(&self, k: usize) -> Self {
        self.map(|x| x.iter_comm(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SeriesKind {
    CircleDiagonal,
    FiniteMatrix,
}

/// scale·Σ_n c_n(1+n²)^{−(s+offset)}. For circle series c_n = poly(n) + corrections[n] over
/// n ∈ Z; for finite series the sum runs over `finite` = [(c_i, d_i)] with n² replaced by d_i².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ZetaSeries {
    pub scale: C64,
    pub offset: C64,
    pub poly: Vec<C64>,
    pub corrections: BTreeMap<i64, C64>,
    pub finite: Vec<(C64, f64)>,
    pub kind: SeriesKind,
}

impl ZetaSeries {
    pub fn circle(scale: C64, offset: C64, poly: Vec<C64>) -> Self {
        Self { scale, offset, poly, corrections: BTreeMap::new(), finite: Vec::new(), kind: SeriesKind::CircleDiagonal }
    }

    pub fn finite(offset: C64, terms: Vec<(C64, f64)>) -> Self {
        Self { scale: ONE, offset, poly: Vec::new(), corrections: BTreeMap::new(), finite: terms, kind: SeriesKind::FiniteMatrix }
    }

    /// Even part Σ_i c_{2i} n^{2i} rewritten as Σ_l e_l (1+n²)^l.
    fn shifted_coeffs(&self) -> Vec<C64> {
        let mut e = vec![ZERO; self.poly.len() / 2 + 1];
        for (deg, c) in self.poly.iter().enumerate().step_by(2) {
            let i = deg / 2;
            let mut binom = 1.0;
            for l in 0..=i {
                let sign = if (i - l) % 2 == 0 { 1.0 } else { -1.0 };
                e[l] += c * binom * sign;
                binom = binom * (i - l) as f64 / (l + 1) as f64;
            }
        }
        e
    }

    /// Exact residue at s = s0 for circle series, from the residues of Z.
    pub fn residue_at(&self, s0: C64) -> C64 {
        if self.kind == SeriesKind::FiniteMatrix {
            return ZERO;
        }
        let mut total = ZERO;
        for (l, e) in self.shifted_coeffs().iter().enumerate() {
            let sigma = s0 + self.offset - l as f64;
            let k = 0.5 - sigma.re;
            if sigma.im.abs() < 1e-12 && k > -1e-12 && (k - k.round()).abs() < 1e-12 {
                total += e * full_line_residue(k.round() as usize);
            }
        }
        total * self.scale
    }
}

pub fn circle_zeta(c: &ZetaSeries, s: C64, k_terms: usize) -> Result<C64> {
    let sigma = s + c.offset;
    match c.kind {
        SeriesKind::FiniteMatrix => Ok(c.finite.iter().map(|(x, d)| x * C64::new(1.0 + d * d, 0.0).powc(-sigma)).sum()),
        SeriesKind::CircleDiagonal => {
            let mut total = ZERO;
            for (l, e) in c.shifted_coeffs().iter().enumerate() {
                if *e != ZERO {
                    total += e * full_line_zeta(sigma - l as f64, k_terms)?;
                }
            }
            for (&n, x) in &c.corrections {
                total += x * C64::new(1.0 + (n * n) as f64, 0.0).powc(-sigma);
            }
            Ok(total * c.scale)
        }
    }
}

/// Principal-part data of f at z0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LaurentData {
    pub critical_point: C64,
    /// j ↦ res_{z0}(z − z0)^j f.
    pub residues: BTreeMap<usize, C64>,
    pub regular_part0: C64,
}

/// Trapezoidal contour integrals of f(z)(z−z0)^j on |z − z0| = ρ, doubling nodes until stable
/// and halving ρ if that fails.
pub fn res_extract(f: &dyn Fn(C64) -> Result<C64>, z0: C64, j_max: usize) -> Result<LaurentData> {
    res_extract_with(f, z0, j_max, 0.1)
}

pub fn res_extract_with(f: &dyn Fn(C64) -> Result<C64>, z0: C64, j_max: usize, radius: f64) -> Result<LaurentData> {
    let mut rho = radius;
    let mut last_err = String::new();
    for _ in 0..4 {
        match contour_moments(f, z0, j_max, rho) {
            Ok(v) => {
                let residues = (0..=j_max).map(|j| (j, v[j + 1])).collect();
                return Ok(LaurentData { critical_point: z0, residues, regular_part0: v[0] });
            }
            Err(Error::Residue(msg)) => last_err = msg,
            Err(e) => return Err(e),
        }
        rho /= 2.0;
    }
    Err(Error::Residue(last_err))
}

/// [a₀, res₀, …, res_{j_max}] where a₀ is the mean of f on the circle.
fn contour_moments(f: &dyn Fn(C64) -> Result<C64>, z0: C64, j_max: usize, rho: f64) -> Result<Vec<C64>> {
    let moments = |n: usize| -> Result<Vec<C64>> {
        let mut out = vec![ZERO; j_max + 2];
        for k in 0..n {
            let e = C64::from_polar(rho, 2.0 * PI * (k as f64 + 0.5) / n as f64);
            let v = f(z0 + e)?;
            out[0] += v;
            let mut pw = e;
            for slot in out.iter_mut().skip(1) {
                *slot += v * pw;
                pw *= e;
            }
        }
        Ok(out.into_iter().map(|x| x / n as f64).collect())
    };
    let mut n = 16;
    let mut prev = moments(n)?;
    loop {
        n *= 2;
        let cur = moments(n)?;
        let scale = cur.iter().map(|x| x.norm()).fold(1.0, f64::max);
        let change = cur.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if change <= 1e-13 * scale {
            return Ok(cur);
        }
        if n >= 2048 {
            if change <= 1e-8 * scale {
                return Ok(cur);
            }
            return Err(Error::Residue(format!("contour sums still moving by {change:.3e} at radius {rho}")));
        }
        prev = cur;
    }
}

/// Residue computations on one triple.
#[derive(Clone, Debug)]
pub struct ResidueEngine {
    pub model: Option<CircleModel>,
    pub p: f64,
    pub k_terms: usize,
}

impl ResidueEngine {
    pub fn new(t: &SpectralTripleRep) -> Self {
        Self { model: CircleModel::detect(t), p: t.p, k_terms: DEFAULT_TERMS }
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        if p < 1.0 {
            return Err(Error::Precondition(format!("spectral dimension must be ≥ 1, got {p}")));
        }
        self.p = p;
        Ok(self)
    }

    pub fn critical_point(&self) -> f64 {
        (1.0 - self.p) / 2.0
    }

    /// Compiles matrices; None means at least one is not a band operator (finite kind).
    pub fn compile_all(&self, args: &[ComplexMatrix]) -> Option<Vec<CircleOp>> {
        let model = self.model.as_ref()?;
        args.iter().map(|a| model.compile(a)).collect()
    }

    /// Series of w ↦ τ(b(1+D²)^{−offset−w}), one per block.
    pub fn series(&self, b: &CircleOp, offset: f64) -> Vec<ZetaSeries> {
        let model = self.model.as_ref().expect("series needs a circle model");
        model
            .blocks
            .iter()
            .zip(&b.parts)
            .map(|(blk, op)| ZetaSeries::circle(C64::new(blk.weight, 0.0), C64::new(offset, 0.0), op.diagonal()))
            .collect()
    }

    pub fn zeta(&self, series: &[ZetaSeries], w: C64) -> Result<C64> {
        series.iter().map(|s| circle_zeta(s, w, self.k_terms)).sum()
    }

    /// τ_j(b(1+D²)^{−offset}) for j ≤ j_max.
    pub fn tau_j(&self, b: &CircleOp, offset: f64, j_max: usize) -> Result<Vec<C64>> {
        let series = self.series(b, offset);
        if series.iter().all(|s| s.poly.is_empty()) {
            return Ok(vec![ZERO; j_max + 1]);
        }
        let f = |w: C64| self.zeta(&series, w);
        let ld = res_extract(&f, ZERO, j_max)?;
        Ok((0..=j_max).map(|j| ld.residues[&j]).collect())
    }

    /// A_k = a₀[D,a₁]^{(k₁)}⋯[D,a_m]^{(k_m)}.
    fn a_k(&self, args: &[CircleOp], k: &MultiIndex) -> CircleOp {
        args[1..].iter().zip(&k.0).fold(args[0].clone(), |acc, (a, &kj)| acc.mul(&a.comm_d().iter_comm(kj)))
    }

    /// φ_m(a₀, …, a_m) = √(2πi) Σ_{|k|≤2N−1−m}(−1)^{|k|}α(k) Σ_{j≤h} σ_{h,j} τ_j(A_k(1+D²)^{−|k|−m/2}).
    pub fn phi(&self, m: usize, args: &[CircleOp]) -> Result<C64> {
        if m.is_multiple_of(2) {
            return Err(Error::Precondition(format!("residue cochain needs odd m, got {m}")));
        }
        if args.len() != m + 1 {
            return Err(Error::Dimension(format!("φ_{m} takes {} arguments, got {}", m + 1, args.len())));
        }
        let top = 2 * n_cap(self.p) - 1;
        if m > top {
            return Ok(ZERO);
        }
        let mut total = ZERO;
        for k in MultiIndex::all_up_to(m, top - m) {
            let order = k.order();
            let h = order + (m - 1) / 2;
            let taus = self.tau_j(&self.a_k(args, &k), order as f64 + m as f64 / 2.0, h)?;
            let sig = sigma_coeffs(h);
            let inner: C64 = (0..=h).map(|j| taus[j] * q_to_f64(&sig.get(j))).sum();
            let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
            total += inner * (sign * q_to_f64(&alpha(&k)?));
        }
        Ok(total * sqrt_2pi_i())
    }

    /// (bφ_m + Bφ_{m+2})(a₀, …, a_{m+1}) with the largest term magnitude.
    pub fn cocycle_defect(&self, m: usize, args: &[CircleOp]) -> Result<(C64, f64)> {
        if args.len() != m + 2 {
            return Err(Error::Dimension(format!("defect in degree {m} takes {} arguments", m + 2)));
        }
        let model = self.model.as_ref().ok_or_else(|| Error::Precondition("no circle model".into()))?;
        let n = args.len();
        let mut terms = Vec::new();
        for j in 0..n {
            let mut g = vec![model.identity()];
            g.extend(args[j..].iter().cloned());
            g.extend(args[..j].iter().cloned());
            terms.push(self.phi(m + 2, &g)?);
        }
        let m1 = m + 1;
        for j in 0..m1 {
            let mut g: Vec<CircleOp> = args[..j].to_vec();
            g.push(args[j].mul(&args[j + 1]));
            g.extend(args[j + 2..].iter().cloned());
            let v = self.phi(m, &g)?;
            terms.push(if j % 2 == 0 { v } else { -v });
        }
        let mut g = vec![args[m1].mul(&args[0])];
        g.extend(args[1..m1].iter().cloned());
        let v = self.phi(m, &g)?;
        terms.push(if m1.is_multiple_of(2) { v } else { -v });
        let scale = terms.iter().map(|x| x.norm()).fold(0.0, f64::max);
        Ok((terms.iter().sum(), scale))
    }

    fn unitary(&self, t: &SpectralTripleRep, u_name: &str) -> Result<(CircleOp, CircleOp)> {
        let u = t.gen(u_name)?;
        let ops = self
            .compile_all(&[u.clone(), u.adjoint()])
            .ok_or_else(|| Error::Precondition(format!("{u_name} has no circle band limit")))?;
        let id = self.model.as_ref().map(CircleModel::identity).expect("compiled");
        if ops[0].mul(&ops[1]) != id || ops[1].mul(&ops[0]) != id {
            return Err(Error::Precondition(format!("band limit of {u_name} is not unitary")));
        }
        Ok((ops[0].clone(), ops[1].clone()))
    }

    /// (1/√(2πi))Σ_m ⟨φ_m, Ch_m(u)⟩ with Ch_m(u) = (−1)^j j!·(u*, u, …, u*, u).
    pub fn sf_residue_cocycle(&self, t: &SpectralTripleRep, u_name: &str) -> Result<f64> {
        let (u, us) = self.unitary(t, u_name)?;
        let mut total = ZERO;
        for m in (1..=2 * n_cap(self.p) - 1).step_by(2) {
            let args: Vec<CircleOp> = (0..=m).map(|i| if i % 2 == 0 { us.clone() } else { u.clone() }).collect();
            total += self.phi(m, &args)? * q_to_f64(&chern_coefficient(m)?);
        }
        real_part(total / sqrt_2pi_i())
    }

    /// w ↦ S(r₀ + w), the summed zeta functions whose residue at r₀ = (1−p)/2 is the flow:
    /// Σ_{m,k} (−1)^{(m+1)/2+|k|}Γ((m+1)/2)α(k)/2 · Σ_j σ_{h,j}w^j ·
    /// τ((u[D,u*]^{(k₁)}[D,u]^{(k₂)}⋯ − u*[D,u]^{(k₁)}[D,u*]^{(k₂)}⋯)(1+D²)^{−m/2−|k|−w}).
    pub fn zeta_sum(&self, t: &SpectralTripleRep, u_name: &str) -> Result<impl Fn(C64) -> Result<C64> + '_> {
        let (u, us) = self.unitary(t, u_name)?;
        let mut parts: Vec<(C64, Vec<C64>, Vec<ZetaSeries>)> = Vec::new();
        for m in (1..=2 * n_cap(self.p) - 1).step_by(2) {
            for k in MultiIndex::all_up_to(m, 2 * n_cap(self.p) - 1 - m) {
                let order = k.order();
                let h = order + (m - 1) / 2;
                let plus: Vec<CircleOp> = (0..=m).map(|i| if i % 2 == 0 { u.clone() } else { us.clone() }).collect();
                let minus: Vec<CircleOp> = (0..=m).map(|i| if i % 2 == 0 { us.clone() } else { u.clone() }).collect();
                let b = self.a_k(&plus, &k).sub(&self.a_k(&minus, &k));
                let sign = if (m.div_ceil(2) + order) % 2 == 0 { 1.0 } else { -1.0 };
                let coef = sign * gamma(C64::new((m as f64 + 1.0) / 2.0, 0.0))?.re * q_to_f64(&alpha(&k)?) / 2.0;
                let sig = sigma_coeffs(h);
                let poly = (0..=h).map(|j| C64::new(q_to_f64(&sig.get(j)), 0.0)).collect();
                parts.push((C64::new(coef, 0.0), poly, self.series(&b, order as f64 + m as f64 / 2.0)));
            }
        }
        Ok(move |w: C64| -> Result<C64> {
            let mut total = ZERO;
            for (coef, poly, series) in &parts {
                let g = poly.iter().rev().fold(ZERO, |acc, c| acc * w + c);
                total += coef * g * self.zeta(series, w)?;
            }
            Ok(total)
        })
    }

    pub fn sf_zeta_sum_residue(&self, t: &SpectralTripleRep, u_name: &str) -> Result<f64> {
        let f = self.zeta_sum(t, u_name)?;
        let ld = res_extract(&f, ZERO, 0)?;
        real_part(ld.residues[&0])
    }

    /// The zeta sum at a real r in its half-plane of convergence.
    pub fn zeta_sum_at(&self, t: &SpectralTripleRep, u_name: &str, r: f64) -> Result<C64> {
        let f = self.zeta_sum(t, u_name)?;
        f(C64::new(r - self.critical_point(), 0.0))
    }

    /// res_{r=r₀} of −(1/2)τ((u[D,u*] − u*[D,u])(1+D²)^{−p/2−r}), for 1 ≤ p < 2.
    pub fn low_dim_flow(&self, t: &SpectralTripleRep, u_name: &str) -> Result<f64> {
        if !(1.0..2.0).contains(&self.p) {
            return Err(Error::Precondition(format!("low-dimensional formula needs 1 ≤ p < 2, got {}", self.p)));
        }
        let (u, us) = self.unitary(t, u_name)?;
        let b = u.mul(&us.comm_d()).sub(&us.mul(&u.comm_d())).scale(C64::new(-0.5, 0.0));
        Ok(self.tau_j(&b, 0.5, 0)?[0].re)
    }

    /// ((1/2)res_{z=0}τ(u*[D,u](1+D²)^{−1/2−z/2}), res_{z=0}τ(u*[D,u](1+D²)^{−1/2−z})).
    pub fn residue_rescaling(&self, t: &SpectralTripleRep, u_name: &str) -> Result<(f64, f64)> {
        let (u, us) = self.unitary(t, u_name)?;
        let series = self.series(&us.mul(&u.comm_d()), 0.5);
        let half = |z: C64| self.zeta(&series, z / 2.0);
        let full = |z: C64| self.zeta(&series, z);
        let a = res_extract(&half, ZERO, 0)?.residues[&0] * 0.5;
        let b = res_extract(&full, ZERO, 0)?.residues[&0];
        Ok((a.re, b.re))
    }
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > 1e-8 * z.norm().max(1.0) {
        return Err(Error::Consistency(format!("expected a real value, got {z}")));
    }
    Ok(z.re)
}

/// φ_m on matrices; zero when the arguments have no circle band limit (entire zeta functions).
pub fn residue_phi(t: &SpectralTripleRep, m: usize, args: &[ComplexMatrix]) -> Result<(C64, SeriesKind)> {
    let e = ResidueEngine::new(t);
    match e.compile_all(args) {
        Some(ops) => Ok((e.phi(m, &ops)?, SeriesKind::CircleDiagonal)),
        None => Ok((ZERO, SeriesKind::FiniteMatrix)),
    }
}

pub fn sf_residue_cocycle(t: &SpectralTripleRep, u_name: &str) -> Result<f64> {
    ResidueEngine::new(t).sf_residue_cocycle(t, u_name)
}

pub fn sf_zeta_sum_residue(t: &SpectralTripleRep, u_name: &str) -> Result<f64> {
    ResidueEngine::new(t).sf_zeta_sum_residue(t, u_name)
}

pub fn low_dim_flow(t: &SpectralTripleRep, u_name: &str) -> Result<f64> {
    ResidueEngine::new(t).low_dim_flow(t, u_name)
}

/// (Γ(p/2+h+z)/Γ(p/2+z), Σ_j σ_{h,j}(z − (1−p)/2)^j).
pub fn gamma_quotient_check(p: f64, h: usize, z: C64) -> Result<(C64, C64)> {
    let lhs = gamma(z + p / 2.0 + h as f64)? / gamma(z + p / 2.0)?;
    let y = z - (1.0 - p) / 2.0;
    let sig = sigma_coeffs(h);
    let rhs = (0..=h).rev().fold(ZERO, |acc, j| acc * y + q_to_f64(&sig.get(j)));
    Ok((lhs, rhs))
}
