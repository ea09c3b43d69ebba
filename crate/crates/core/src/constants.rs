//! Combinatorial constants and special functions.
//!
//! * α(k) = 1 / (k₁!⋯k_m! (k₁+1)(k₁+k₂+2)⋯(|k|+m))
//! * σ_{h,j}: ∏_{j=0}^{h−1}(z + j + 1/2) = Σ_j σ_{h,j} z^j
//! * C(k) = (|k|+m)! α(k)
//! * 𝒞(m) = −2√(2πi)/Γ((m+1)/2)
//! * C_β = ∫(1+x²)^{−β}dx = Γ(β−1/2)Γ(1/2)/Γ(β)

use crate::error::{Error, Result};
use crate::numkernel::C64;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Q = BigRational;

/// Sign applied to the principal value of √(2πi). Flip to −1.0 to use the other branch.
pub const SQRT_2PI_I_BRANCH: f64 = 1.0;

pub fn sqrt_2pi_i() -> C64 {
    C64::from_polar((2.0 * PI).sqrt(), PI / 4.0) * SQRT_2PI_I_BRANCH
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn m(&self) -> usize {
        self.0.len()
    }
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }
    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    /// All multi-indices of length m with |k| ≤ max, in lexicographic order.
    pub fn all_up_to(m: usize, max: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0usize; m];
        fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if i == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for v in 0..=left {
                cur[i] = v;
                rec(i + 1, left - v, cur, out);
            }
            cur[i] = 0;
        }
        rec(0, max, &mut cur, &mut out);
        out
    }
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

pub fn q_to_f64(q: &Q) -> f64 {
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

pub fn alpha(k: &MultiIndex) -> Result<Q> {
    if k.m() == 0 {
        return Err(Error::Precondition("alpha of an empty multi-index".into()));
    }
    let mut den = BigInt::one();
    let mut partial = 0usize;
    for (j, &kj) in k.parts().iter().enumerate() {
        den *= factorial(kj);
        partial += kj;
        den *= BigInt::from(partial + j + 1);
    }
    Ok(Q::new(BigInt::one(), den))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymCoeffs {
    pub h: usize,
    #[serde(with = "q_vec_serde")]
    pub coeffs: Vec<Q>,
}

mod q_vec_serde {
    use super::Q;
    use serde::{Deserialize, Deserializer, Serializer};
    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|q| q.to_string()))
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter().map(|s| s.parse::<Q>().map_err(serde::de::Error::custom)).collect()
    }
}

impl SymCoeffs {
    pub fn get(&self, j: usize) -> Q {
        self.coeffs.get(j).cloned().unwrap_or_else(Q::zero)
    }
    pub fn as_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(q_to_f64).collect()
    }
}

pub fn sigma_coeffs(h: usize) -> SymCoeffs {
    let mut c = vec![Q::one()];
    for j in 0..h {
        let root = Q::new(BigInt::from(2 * j + 1), BigInt::from(2));
        let mut next = vec![Q::zero(); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci * &root;
            next[i + 1] += ci;
        }
        c = next;
    }
    SymCoeffs { h, coeffs: c }
}

pub fn big_c(k: &MultiIndex) -> Result<Q> {
    Ok(alpha(k)? * Q::from_integer(factorial(k.order() + k.m())))
}

pub fn script_c(m: usize) -> Result<C64> {
    if m.is_multiple_of(2) {
        return Err(Error::Precondition(format!("scriptC needs odd m, got {m}")));
    }
    Ok(-2.0 * sqrt_2pi_i() / gamma(C64::new((m as f64 + 1.0) / 2.0, 0.0))?)
}

pub fn c_beta(beta: C64) -> Result<C64> {
    if beta.re <= 0.5 {
        return Err(Error::Precondition(format!("cBeta needs Re β > 1/2, got {beta}")));
    }
    Ok(gamma(beta - 0.5)? * PI.sqrt() / gamma(beta)?)
}

pub fn n_cap(p: f64) -> usize {
    (p / 2.0).floor() as usize + 1
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex Gamma function: Lanczos (g = 7) with reflection for Re z < 1/2.
pub fn gamma(z: C64) -> Result<C64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::Pole(format!("Gamma at {}", z.re)));
    }
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return Ok(PI / (s * gamma(1.0 - z)?));
    }
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x)
}

pub fn gamma_re(x: f64) -> Result<f64> {
    Ok(gamma(C64::new(x, 0.0))?.re)
}

/// Γ(β + n)/Γ(β) as a rising product.
pub fn pochhammer(beta: C64, n: usize) -> C64 {
    (0..n).fold(C64::new(1.0, 0.0), |acc, j| acc * (beta + j as f64))
}
