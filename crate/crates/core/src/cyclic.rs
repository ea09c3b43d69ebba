//! The normalized (b, B) complex over a finite-dimensional matrix algebra.
//!
//! Algebra elements in chains are words in registered generators; a generator registered
//! as unitary cancels against its adjoint. Normalization drops any term whose factor in
//! position ≥ 1 is the empty word or evaluates to a scalar multiple of the identity.

use crate::constants::{q_to_f64, Q};
use crate::error::{Error, Result};
use crate::numkernel::{ComplexMatrix, C64, ZERO};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

pub type Sym = u16;
pub type Word = Vec<Sym>;

#[derive(Debug)]
pub struct Algebra {
    dim: usize,
    names: Vec<String>,
    mats: Vec<ComplexMatrix>,
    inverse: Vec<Option<Sym>>,
    is_identity: Vec<bool>,
    scalar_cache: Mutex<HashMap<Word, bool>>,
}

impl Algebra {
    pub fn new(dim: usize) -> Self {
        Self { dim, names: Vec::new(), mats: Vec::new(), inverse: Vec::new(), is_identity: Vec::new(), scalar_cache: Mutex::new(HashMap::new()) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn push(&mut self, name: &str, m: ComplexMatrix) -> Result<Sym> {
        if m.rows() != self.dim || m.cols() != self.dim {
            return Err(Error::Dimension(format!("generator {name} is {}x{}", m.rows(), m.cols())));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(Error::Precondition(format!("generator {name} already registered")));
        }
        let id = m.approx_eq(&ComplexMatrix::identity(self.dim), 1e-12);
        self.names.push(name.to_string());
        self.mats.push(m);
        self.inverse.push(None);
        self.is_identity.push(id);
        Ok((self.names.len() - 1) as Sym)
    }

    pub fn add(&mut self, name: &str, m: ComplexMatrix) -> Result<Sym> {
        self.push(name, m)
    }

    /// Registers u and u* = u⁻¹ (named `name*`).
    pub fn add_unitary(&mut self, name: &str, u: ComplexMatrix) -> Result<(Sym, Sym)> {
        let id = ComplexMatrix::identity(self.dim);
        if !u.adjoint().mul(&u).approx_eq(&id, 1e-10) || !u.mul(&u.adjoint()).approx_eq(&id, 1e-10) {
            return Err(Error::Precondition(format!("generator {name} is not unitary")));
        }
        let us = u.adjoint();
        let a = self.push(name, u)?;
        let b = self.push(&format!("{name}*"), us)?;
        self.inverse[a as usize] = Some(b);
        self.inverse[b as usize] = Some(a);
        Ok((a, b))
    }

    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.names.iter().position(|n| n == name).map(|i| i as Sym)
    }

    pub fn name(&self, s: Sym) -> &str {
        &self.names[s as usize]
    }

    pub fn inverse_of(&self, s: Sym) -> Option<Sym> {
        self.inverse[s as usize]
    }

    pub fn reduce(&self, w: &[Sym]) -> Word {
        let mut out: Word = Vec::with_capacity(w.len());
        for &s in w {
            if self.is_identity[s as usize] {
                continue;
            }
            match out.last() {
                Some(&t) if self.inverse[t as usize] == Some(s) => {
                    out.pop();
                }
                _ => out.push(s),
            }
        }
        out
    }

    pub fn eval(&self, w: &[Sym]) -> ComplexMatrix {
        w.iter().fold(ComplexMatrix::identity(self.dim), |acc, &s| acc.mul(&self.mats[s as usize]))
    }

    fn is_scalar(&self, w: &Word) -> bool {
        if w.is_empty() {
            return true;
        }
        if let Some(&b) = self.scalar_cache.lock().expect("cache").get(w) {
            return b;
        }
        let m = self.eval(w);
        let b = m.scalar_multiple_of_identity(1e-12 * m.max_abs().max(1.0)).is_some();
        self.scalar_cache.lock().expect("cache").insert(w.clone(), b);
        b
    }

    pub fn format_word(&self, w: &[Sym]) -> String {
        if w.is_empty() {
            return "1".into();
        }
        w.iter().map(|&s| self.name(s)).collect::<Vec<_>>().join("·")
    }
}

/// A graded sum of normalized tensors with exact coefficients.
#[derive(Clone)]
pub struct Chain {
    alg: Arc<Algebra>,
    terms: BTreeMap<usize, BTreeMap<Vec<Word>, Q>>,
}

impl fmt::Debug for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, ts) in &self.terms {
            for (fs, c) in ts {
                let parts: Vec<String> = fs.iter().map(|w| self.alg.format_word(w)).collect();
                writeln!(f, "[{m}] {c} ({})", parts.join(", "))?;
            }
        }
        Ok(())
    }
}

impl PartialEq for Chain {
    fn eq(&self, o: &Self) -> bool {
        self.sub(o).is_zero()
    }
}

impl Chain {
    pub fn zero(alg: &Arc<Algebra>) -> Self {
        Self { alg: alg.clone(), terms: BTreeMap::new() }
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    pub fn term(alg: &Arc<Algebra>, coeff: Q, factors: Vec<Word>) -> Self {
        let mut c = Self::zero(alg);
        c.insert(coeff, factors);
        c
    }

    /// Adds coeff·(a₀ ⊗ … ⊗ a_m) after reduction and normalization.
    pub fn insert(&mut self, coeff: Q, factors: Vec<Word>) {
        if coeff.is_zero() || factors.is_empty() {
            return;
        }
        let fs: Vec<Word> = factors.iter().map(|w| self.alg.reduce(w)).collect();
        if fs[1..].iter().any(|w| self.alg.is_scalar(w)) {
            return;
        }
        let m = fs.len() - 1;
        let slot = self.terms.entry(m).or_default();
        let vanished = {
            let e = slot.entry(fs.clone()).or_insert_with(Q::zero);
            *e += coeff;
            e.is_zero()
        };
        if vanished {
            slot.remove(&fs);
            if slot.is_empty() {
                self.terms.remove(&m);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.terms.keys().copied().collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Vec<Word>, &Q)> {
        self.terms.iter().flat_map(|(&m, ts)| ts.iter().map(move |(f, c)| (m, f, c)))
    }

    pub fn len(&self) -> usize {
        self.terms.values().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coeff(&self, factors: &[Word]) -> Q {
        let fs: Vec<Word> = factors.iter().map(|w| self.alg.reduce(w)).collect();
        self.terms.get(&(fs.len().saturating_sub(1))).and_then(|t| t.get(&fs)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn degree_part(&self, m: usize) -> Chain {
        let mut c = Self::zero(&self.alg);
        if let Some(t) = self.terms.get(&m) {
            c.terms.insert(m, t.clone());
        }
        c
    }

    pub fn truncate(&self, max_degree: usize) -> Chain {
        Self { alg: self.alg.clone(), terms: self.terms.range(..=max_degree).map(|(k, v)| (*k, v.clone())).collect() }
    }

    pub fn add(&self, o: &Chain) -> Chain {
        let mut c = self.clone();
        for (_, f, q) in o.terms() {
            c.insert(q.clone(), f.clone());
        }
        c
    }

    pub fn scale(&self, s: &Q) -> Chain {
        let mut c = Self::zero(&self.alg);
        for (_, f, q) in self.terms() {
            c.insert(q * s, f.clone());
        }
        c
    }

    pub fn sub(&self, o: &Chain) -> Chain {
        self.add(&o.scale(&-Q::one()))
    }

    /// Random linear functional on each tensor power: Σ coeff Π_k tr(R_k·a_k), with factors in
    /// positions ≥ 1 projected to trace zero. Vanishes on zero chains; used for numeric checks.
    pub fn probe(&self, rs: &[ComplexMatrix]) -> BTreeMap<usize, C64> {
        let n = self.alg.dim as f64;
        let mut out = BTreeMap::new();
        for (m, f, q) in self.terms() {
            let mut v = C64::new(q_to_f64(q), 0.0);
            for (k, w) in f.iter().enumerate() {
                let a = self.alg.eval(w);
                let r = &rs[k % rs.len()];
                let mut t = r.mul(&a).trace();
                if k >= 1 {
                    t -= a.trace() / n * r.trace();
                }
                v *= t;
            }
            *out.entry(m).or_insert(ZERO) += v;
        }
        out
    }

    pub fn to_json(&self) -> ChainJson {
        let generators = (0..self.alg.names.len())
            .map(|i| {
                let m = &self.alg.mats[i];
                let es = m.to_sparse().entries().iter().map(|&(a, b, v)| (a, b, v.re, v.im)).collect();
                (self.alg.names[i].clone(), es)
            })
            .collect();
        let terms = self
            .terms()
            .map(|(m, f, q)| TermJson {
                degree: m,
                coeff: q.to_string(),
                factors: f.iter().map(|w| w.iter().map(|&s| self.alg.name(s).to_string()).collect()).collect(),
            })
            .collect();
        ChainJson { dimension: self.alg.dim, generators, terms }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub degree: usize,
    pub coeff: String,
    pub factors: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainJson {
    pub dimension: usize,
    pub generators: BTreeMap<String, Vec<(usize, usize, f64, f64)>>,
    pub terms: Vec<TermJson>,
}

/// Rebuilds a chain over an existing algebra (generator names must match).
pub fn chain_from_json(alg: &Arc<Algebra>, j: &ChainJson) -> Result<Chain> {
    let mut c = Chain::zero(alg);
    for t in &j.terms {
        let q: Q = t.coeff.parse().map_err(|e| Error::Parse(format!("coefficient {}: {e}", t.coeff)))?;
        let mut fs = Vec::new();
        for w in &t.factors {
            let mut word = Vec::new();
            for n in w {
                word.push(alg.sym(n).ok_or_else(|| Error::Unknown(format!("generator {n}")))?);
            }
            fs.push(word);
        }
        if fs.len() != t.degree + 1 {
            return Err(Error::Parse(format!("term of degree {} has {} factors", t.degree, fs.len())));
        }
        c.insert(q, fs);
    }
    Ok(c)
}

fn sign(k: usize) -> Q {
    if k.is_multiple_of(2) {
        Q::one()
    } else {
        -Q::one()
    }
}

fn concat(a: &Word, b: &Word) -> Word {
    a.iter().chain(b).copied().collect()
}

/// b(a₀⊗…⊗a_m) = Σ_{j<m} (−1)^j (…, a_j a_{j+1}, …) + (−1)^m (a_m a₀, a₁, …, a_{m−1}).
pub fn b_chain(c: &Chain) -> Chain {
    let mut out = Chain::zero(&c.alg);
    for (m, f, q) in c.terms() {
        if m == 0 {
            continue;
        }
        for j in 0..m {
            let mut g: Vec<Word> = Vec::with_capacity(m);
            g.extend(f[..j].iter().cloned());
            g.push(concat(&f[j], &f[j + 1]));
            g.extend(f[j + 2..].iter().cloned());
            out.insert(q * sign(j), g);
        }
        let mut g = vec![concat(&f[m], &f[0])];
        g.extend(f[1..m].iter().cloned());
        out.insert(q * sign(m), g);
    }
    out
}

/// B(a₀⊗…⊗a_m) = Σ_j (−1)^{mj} 1⊗a_j⊗…⊗a_m⊗a₀⊗…⊗a_{j−1}.
pub fn big_b_chain(c: &Chain) -> Chain {
    let mut out = Chain::zero(&c.alg);
    for (m, f, q) in c.terms() {
        for j in 0..=m {
            let mut g: Vec<Word> = vec![Vec::new()];
            g.extend(f[j..].iter().cloned());
            g.extend(f[..j].iter().cloned());
            out.insert(q * sign(m * j), g);
        }
    }
    out
}

fn alternating(u: Sym, us: Sym, lead_one: bool, pairs: usize) -> Vec<Word> {
    let mut f = Vec::with_capacity(2 * pairs + 1);
    if lead_one {
        f.push(Vec::new());
    }
    for _ in 0..pairs {
        f.push(vec![us]);
        f.push(vec![u]);
    }
    f
}

/// (−1)^m m!.
fn c_odd(m: usize) -> Q {
    let f: BigInt = (1..=m).fold(BigInt::one(), |a, k| a * BigInt::from(k));
    Q::from_integer(f) * sign(m)
}

/// Coefficient (−1)^j j! of Ch_m for m = 2j + 1.
pub fn chern_coefficient(m: usize) -> Result<Q> {
    if m.is_multiple_of(2) {
        return Err(Error::Precondition(format!("Chern character lives in odd degrees, got {m}")));
    }
    Ok(c_odd((m - 1) / 2))
}

/// Ch_{2j+1}(u) = (−1)^j j!·u*⊗u⊗…⊗u* ⊗u for 2j+1 ≤ m_max.
pub fn chern_chain(alg: &Arc<Algebra>, u: Sym, m_max: usize) -> Result<Chain> {
    let us = alg.inverse_of(u).ok_or_else(|| Error::Precondition(format!("{} is not registered as unitary", alg.name(u))))?;
    let mut c = Chain::zero(alg);
    let mut j = 0;
    while 2 * j < m_max {
        c.insert(c_odd(j), alternating(u, us, false, j + 1));
        j += 1;
    }
    Ok(c)
}

/// z = Σ_m (−1)^m m!·(1, u*, u, …, u*, u) in degrees 2m+2 ≤ m_max+1, checked against
/// (b + B)z = Ch(u*) + Ch(u) through degree m_max.
pub fn boundary_witness(alg: &Arc<Algebra>, u: Sym, m_max: usize) -> Result<Chain> {
    let us = alg.inverse_of(u).ok_or_else(|| Error::Precondition(format!("{} is not registered as unitary", alg.name(u))))?;
    let mut z = Chain::zero(alg);
    let mut m = 0;
    while 2 * m < m_max {
        z.insert(c_odd(m), alternating(u, us, true, m + 1));
        m += 1;
    }
    let lhs = b_chain(&z).add(&big_b_chain(&z)).truncate(m_max);
    let rhs = chern_chain(alg, u, m_max)?.add(&chern_chain(alg, us, m_max)?);
    if lhs != rhs {
        return Err(Error::Consistency(format!("(b+B)z differs from Ch(u*)+Ch(u):\n{:?}", lhs.sub(&rhs))));
    }
    Ok(z)
}

pub type Evaluator = Arc<dyn Fn(&[ComplexMatrix]) -> C64 + Send + Sync>;

/// A degree-m multilinear functional on (m+1)-tuples of matrices.
#[derive(Clone)]
pub struct CochainEval {
    pub degree: usize,
    pub f: Evaluator,
}

impl fmt::Debug for CochainEval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CochainEval(degree {})", self.degree)
    }
}

impl CochainEval {
    pub fn new(degree: usize, f: impl Fn(&[ComplexMatrix]) -> C64 + Send + Sync + 'static) -> Self {
        Self { degree, f: Arc::new(f) }
    }

    pub fn eval(&self, args: &[ComplexMatrix]) -> Result<C64> {
        if args.len() != self.degree + 1 {
            return Err(Error::Dimension(format!("degree-{} cochain given {} arguments", self.degree, args.len())));
        }
        Ok((self.f)(args))
    }

    /// Largest relative deviation from φ(…, c·a_k, …) = c·φ(…) over each slot.
    pub fn multilinearity_defect(&self, args: &[ComplexMatrix], c: C64) -> Result<f64> {
        let base = self.eval(args)?;
        let mut worst: f64 = 0.0;
        for k in 0..args.len() {
            let mut a = args.to_vec();
            a[k] = a[k].scale(c);
            let v = self.eval(&a)?;
            worst = worst.max((v - base * c).norm() / (base * c).norm().max(1e-300));
        }
        Ok(worst)
    }

    /// (bφ)(a₀, …, a_{m+1}).
    pub fn b(&self) -> CochainEval {
        let phi = self.clone();
        CochainEval::new(self.degree + 1, move |a| {
            let m1 = a.len() - 1;
            let mut s = ZERO;
            for j in 0..m1 {
                let mut g: Vec<ComplexMatrix> = Vec::with_capacity(m1);
                g.extend(a[..j].iter().cloned());
                g.push(a[j].mul(&a[j + 1]));
                g.extend(a[j + 2..].iter().cloned());
                let v = (phi.f)(&g);
                s += if j % 2 == 0 { v } else { -v };
            }
            let mut g = vec![a[m1].mul(&a[0])];
            g.extend(a[1..m1].iter().cloned());
            let v = (phi.f)(&g);
            s + if m1 % 2 == 0 { v } else { -v }
        })
    }

    /// (Bφ)(a₀, …, a_{m−2}) = Σ_j (−1)^{(m−1)j} φ(1, a_j, …, a_{j−1}); zero in degree 0.
    pub fn big_b(&self) -> Option<CochainEval> {
        if self.degree == 0 {
            return None;
        }
        let phi = self.clone();
        Some(CochainEval::new(self.degree - 1, move |a| {
            let m = a.len() - 1;
            let one = ComplexMatrix::identity(a[0].rows());
            let mut s = ZERO;
            for j in 0..=m {
                let mut g = vec![one.clone()];
                g.extend(a[j..].iter().cloned());
                g.extend(a[..j].iter().cloned());
                let v = (phi.f)(&g);
                s += if (m * j) % 2 == 0 { v } else { -v };
            }
            s
        }))
    }
}

/// ⟨φ, c⟩ = Σ_m φ_m(c_m).
pub fn pair(phi: &[CochainEval], c: &Chain) -> Result<C64> {
    let mut total = ZERO;
    for (m, f, q) in c.terms() {
        let e = phi.iter().find(|p| p.degree == m).ok_or_else(|| Error::Precondition(format!("no cochain of degree {m}")))?;
        let args: Vec<ComplexMatrix> = f.iter().map(|w| c.alg.eval(w)).collect();
        total += e.eval(&args)? * q_to_f64(q);
    }
    Ok(total)
}

/// (b + B)φ on a finite family: the degree-m part is b φ_{m−1} + B φ_{m+1}.
pub fn cochain_b_plus_big_b(phi: &[CochainEval]) -> Vec<CochainEval> {
    let mut by_deg: BTreeMap<usize, Vec<CochainEval>> = BTreeMap::new();
    for p in phi {
        by_deg.entry(p.degree + 1).or_default().push(p.b());
        if let Some(bb) = p.big_b() {
            by_deg.entry(bb.degree).or_default().push(bb);
        }
    }
    by_deg
        .into_iter()
        .map(|(d, parts)| CochainEval::new(d, move |a| parts.iter().map(|p| (p.f)(a)).sum()))
        .collect()
}

pub fn coeff_abs_max(c: &Chain) -> Q {
    c.terms().map(|(_, _, q)| q.abs()).fold(Q::zero(), |a, b| if b > a { b } else { a })
}
