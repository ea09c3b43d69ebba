//! Exact noncommutative rewriting for resolvent words.
//!
//! Words are products of R = (λ − Q)^{−1}, a fixed trailing R̃ and operands A(i, j), the j-fold
//! commutator [Q, ·]^j of the i-th operand. The single rule R·A = A·R + R·A'·R moves
//! resolvents to the right; collecting coefficients of the normal words gives the
//! expansion coefficients C(k).

use crate::constants::{big_c, binomial, MultiIndex, Q};
use crate::error::{Error, Result};
use crate::numkernel::{inverse, ComplexMatrix, C64};
use crate::triples::DoubledTriple;
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NCSymbol {
    R,
    Rtilde,
    /// Operand i (from 1) with derivation order j.
    A(u8, u8),
}

impl fmt::Display for NCSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NCSymbol::R => write!(f, "R"),
            NCSymbol::Rtilde => write!(f, "R~"),
            NCSymbol::A(i, 0) => write!(f, "A{i}"),
            NCSymbol::A(i, j) => write!(f, "A{i}^({j})"),
        }
    }
}

pub type Symbols = Vec<NCSymbol>;

#[derive(Clone, Debug, PartialEq)]
pub struct NCWord {
    pub coeff: Q,
    pub symbols: Symbols,
}

/// Total derivation order of a word.
pub fn order(w: &[NCSymbol]) -> usize {
    w.iter().map(|s| if let NCSymbol::A(_, j) = s { *j as usize } else { 0 }).sum()
}

fn redex(w: &[NCSymbol]) -> Option<usize> {
    w.windows(2).position(|p| p[0] == NCSymbol::R && matches!(p[1], NCSymbol::A(..)))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NCPoly {
    words: BTreeMap<Symbols, Q>,
}

impl NCPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn word(symbols: Symbols) -> Self {
        let mut p = Self::zero();
        p.add_word(symbols, Q::one());
        p
    }

    pub fn add_word(&mut self, symbols: Symbols, c: Q) {
        if c.is_zero() {
            return;
        }
        let slot = self.words.entry(symbols).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.words.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &o.words {
            out.add_word(w.clone(), c.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn coeff(&self, w: &[NCSymbol]) -> Q {
        self.words.get(w).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbols, &Q)> {
        self.words.iter()
    }

    pub fn words(&self) -> Vec<NCWord> {
        self.words.iter().map(|(s, c)| NCWord { coeff: c.clone(), symbols: s.clone() }).collect()
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.words.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.words.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for s in w {
                write!(f, "·{s}")?;
            }
        }
        Ok(())
    }
}

/// One application of R·A(i,j) → A(i,j)·R + R·A(i,j+1)·R at the leftmost redex of each word.
pub fn rewrite_step(p: &NCPoly) -> NCPoly {
    let mut out = NCPoly::zero();
    for (w, c) in p.iter() {
        match redex(w) {
            None => out.add_word(w.clone(), c.clone()),
            Some(i) => {
                let NCSymbol::A(op, j) = w[i + 1] else { unreachable!() };
                let mut swapped = w.clone();
                swapped.swap(i, i + 1);
                out.add_word(swapped, c.clone());
                let mut grown = w[..i].to_vec();
                grown.extend([NCSymbol::R, NCSymbol::A(op, j + 1), NCSymbol::R]);
                grown.extend_from_slice(&w[i + 2..]);
                out.add_word(grown, c.clone());
            }
        }
    }
    out
}

/// Rewrites until every word of order ≤ M is normal; words of higher order are set aside.
pub fn expand(p: &NCPoly, big_m: usize) -> (NCPoly, NCPoly) {
    let mut normal = NCPoly::zero();
    let mut remainder = NCPoly::zero();
    let mut cur = p.clone();
    while !cur.is_zero() {
        let mut pending = NCPoly::zero();
        for (w, c) in cur.iter() {
            if order(w) > big_m {
                remainder.add_word(w.clone(), c.clone());
            } else if redex(w).is_none() {
                normal.add_word(w.clone(), c.clone());
            } else {
                pending.add_word(w.clone(), c.clone());
            }
        }
        cur = rewrite_step(&pending);
    }
    (normal, remainder)
}

/// R·A₁·R·A₂⋯R·A_m·R̃.
pub fn resolvent_word(m: usize) -> Symbols {
    let mut w = Vec::with_capacity(2 * m + 1);
    for i in 1..=m {
        w.push(NCSymbol::R);
        w.push(NCSymbol::A(i as u8, 0));
    }
    w.push(NCSymbol::Rtilde);
    w
}

/// A(1,k₁)⋯A(m,k_m)·R^{m+|k|}·R̃.
pub fn normal_word(k: &MultiIndex) -> Symbols {
    let mut w: Symbols = k.0.iter().enumerate().map(|(i, &kj)| NCSymbol::A(i as u8 + 1, kj as u8)).collect();
    w.extend(std::iter::repeat_n(NCSymbol::R, k.m() + k.order()));
    w.push(NCSymbol::Rtilde);
    w
}

pub fn expand_to_depth(m: usize, big_m: usize) -> Result<(NCPoly, NCPoly)> {
    if m == 0 {
        return Err(Error::Precondition("expansion needs m ≥ 1".into()));
    }
    Ok(expand(&NCPoly::word(resolvent_word(m)), big_m))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientRow {
    pub k: Vec<usize>,
    pub coefficient: String,
    pub expected: String,
}

/// Collected normal coefficients for all |k| ≤ M next to C(k); errors on any mismatch or on
/// a normal word of unexpected shape.
pub fn coefficient_table(m: usize, big_m: usize) -> Result<Vec<CoefficientRow>> {
    let (normal, _) = expand_to_depth(m, big_m)?;
    let ks = MultiIndex::all_up_to(m, big_m);
    if normal.len() != ks.len() {
        return Err(Error::Consistency(format!("{} normal words for {} multi-indices", normal.len(), ks.len())));
    }
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        let got = normal.coeff(&normal_word(&k));
        let want = big_c(&k)?;
        if got != want {
            return Err(Error::Consistency(format!("k = {:?}: rewriting gives {got}, C(k) = {want}", k.0)));
        }
        rows.push(CoefficientRow { k: k.0.clone(), coefficient: got.to_string(), expected: want.to_string() });
    }
    Ok(rows)
}

/// Coefficients of A^{(j)}·R^{n+j} in R^n·A, j ≤ j_max.
pub fn power_coefficients(n: usize, j_max: usize) -> Vec<Q> {
    let mut w = vec![NCSymbol::R; n];
    w.push(NCSymbol::A(1, 0));
    let (normal, _) = expand(&NCPoly::word(w), j_max);
    (0..=j_max)
        .map(|j| {
            let mut nw = vec![NCSymbol::A(1, j as u8)];
            nw.extend(std::iter::repeat_n(NCSymbol::R, n + j));
            normal.coeff(&nw)
        })
        .collect()
}

/// Σ_{j=1}^n binom(j+k−1, k) = binom(n+k, k+1).
pub fn verify_binomial_lemma(n: usize, k: usize) -> bool {
    if n == 0 {
        return false;
    }
    let lhs: num_bigint::BigInt = (1..=n).map(|j| binomial(j + k - 1, k)).sum();
    lhs == binomial(n + k, k + 1)
}

/// Evaluates p with Q = 1 + D̃² + s², R = (λ − Q)^{−1}, R̃ = (λ − Q − s{D̃,q})^{−1} and
/// A(i, j) = [Q, ·]^j applied to operands[i − 1].
pub fn numerical_instantiation(p: &NCPoly, dt: &DoubledTriple, s: f64, lam: C64, operands: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let n = dt.dim();
    let id = ComplexMatrix::identity(n);
    let qm = id.scale_re(1.0 + s * s).add(&dt.dt.mul(&dt.dt).to_dense());
    let r = inverse(&id.scale(lam).sub(&qm))?;
    let rt = inverse(&id.scale(lam).sub(&qm.add(&dt.anti.to_dense().scale_re(s))))?;
    let mut cache: HashMap<(u8, u8), ComplexMatrix> = HashMap::new();
    let mut total = ComplexMatrix::zeros(n, n);
    for (w, c) in p.iter() {
        let mut acc = id.clone();
        for sym in w {
            let f = match *sym {
                NCSymbol::R => r.clone(),
                NCSymbol::Rtilde => rt.clone(),
                NCSymbol::A(i, j) => {
                    if let Some(m) = cache.get(&(i, j)) {
                        m.clone()
                    } else {
                        let base = operands
                            .get((i as usize).wrapping_sub(1))
                            .ok_or_else(|| Error::Unknown(format!("operand A{i} is not registered")))?;
                        if base.rows() != n || base.cols() != n {
                            return Err(Error::Dimension(format!("operand A{i} must be {n}x{n}")));
                        }
                        let m = (0..j).fold(base.clone(), |x, _| qm.commutator(&x));
                        cache.insert((i, j), m.clone());
                        m
                    }
                }
            };
            acc = acc.mul(&f);
        }
        total = total.add(&acc.scale_re(crate::constants::q_to_f64(c)));
    }
    Ok(total)
}
