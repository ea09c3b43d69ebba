//! Finite spectral triples (A, H, D, τ), the Clifford doubling built from a unitary,
//! iterated commutators with D², and the trace-norm tail bound used by the half-line
//! integrals.

use crate::constants::c_beta;
use crate::error::{Error, Result};
use crate::numkernel::{eigh_sparse, trace_tau, ComplexMatrix, HermitianMatrix, SparseMatrix, TraceWeights, C64, I, ONE};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    Plain,
    Circulant,
}

/// How far a generator is from being unitary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unitarity {
    Unitary,
    /// u*u and uu* are projections.
    PartialIsometry,
    Other,
}

#[derive(Clone, Debug)]
pub struct SpectralTripleRep {
    pub d: HermitianMatrix,
    pub gens: BTreeMap<String, ComplexMatrix>,
    pub weights: TraceWeights,
    pub p: f64,
    pub label: String,
    pub truncation: Option<Truncation>,
    /// Contiguous index ranges (start, len) of independent summands; edges are taken per block.
    pub blocks: Vec<(usize, usize)>,
}

impl SpectralTripleRep {
    pub fn new(
        d: HermitianMatrix,
        gens: BTreeMap<String, ComplexMatrix>,
        weights: TraceWeights,
        p: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let n = d.dim();
        let t = Self { d, gens, weights, p, label: label.into(), truncation: None, blocks: vec![(0, n)] };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.d.dim();
        if self.weights.len() != n {
            return Err(Error::Dimension(format!("{} weights for dimension {n}", self.weights.len())));
        }
        for (name, g) in &self.gens {
            if g.rows() != n || g.cols() != n {
                return Err(Error::Dimension(format!("generator {name} is {}x{}", g.rows(), g.cols())));
            }
        }
        if self.p < 1.0 {
            return Err(Error::Precondition(format!("spectral dimension {} < 1", self.p)));
        }
        let w = self.weights.as_slice();
        let dm = self.d.matrix();
        let scale = dm.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..n {
                if (dm[(i, j)] * (w[i] - w[j])).norm() > 1e-12 * scale {
                    return Err(Error::Precondition("weights do not commute with D".into()));
                }
            }
        }
        let covered: usize = self.blocks.iter().map(|b| b.1).sum();
        if covered != n {
            return Err(Error::Dimension("block ranges do not cover the space".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d.dim()
    }

    pub fn gen(&self, name: &str) -> Result<&ComplexMatrix> {
        self.gens.get(name).ok_or_else(|| Error::Unknown(format!("generator {name}")))
    }

    /// [D, a].
    pub fn comm_d(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.d.matrix().commutator(a)
    }

    pub fn tau(&self, x: &ComplexMatrix) -> Result<C64> {
        trace_tau(x, &self.weights)
    }

    pub fn unitarity(&self, name: &str) -> Result<Unitarity> {
        Ok(unitarity(self.gen(name)?))
    }

    /// Adds `name = a^k` (adjoint powers for k < 0).
    pub fn with_power(mut self, base: &str, k: i32, name: &str) -> Result<Self> {
        let a = self.gen(base)?;
        let m = if k >= 0 { a.pow(k as u32) } else { a.adjoint().pow((-k) as u32) };
        self.gens.insert(name.to_string(), m);
        Ok(self)
    }

    /// Same triple with D replaced by `d` (block metadata kept).
    pub fn with_d(&self, d: HermitianMatrix) -> Result<Self> {
        let mut t = self.clone();
        t.d = d;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> TripleJson {
        let dm = self.d.matrix();
        let d = if dm.is_diagonal() { MatrixJson::Diagonal(self.d.real_diag()) } else { MatrixJson::from_dense(dm) };
        TripleJson {
            label: self.label.clone(),
            dimension: self.dim(),
            d,
            generators: self.gens.iter().map(|(k, v)| (k.clone(), MatrixJson::entries_of(v))).collect(),
            weights: Some(self.weights.as_slice().to_vec()),
            p: self.p,
            truncation_mode: self.truncation,
            blocks: Some(self.blocks.clone()),
        }
    }

    pub fn from_json(j: &TripleJson) -> Result<Self> {
        let n = j.dimension;
        let d = HermitianMatrix::new(j.d.to_dense(n)?)?;
        let mut gens = BTreeMap::new();
        for (k, v) in &j.generators {
            gens.insert(k.clone(), v.to_dense(n)?);
        }
        let weights = match &j.weights {
            Some(w) => TraceWeights::new(w.clone())?,
            None => TraceWeights::uniform(n),
        };
        let t = Self {
            d,
            gens,
            weights,
            p: j.p,
            label: j.label.clone(),
            truncation: j.truncation_mode,
            blocks: j.blocks.clone().unwrap_or_else(|| vec![(0, n)]),
        };
        t.validate()?;
        Ok(t)
    }
}

pub fn unitarity(u: &ComplexMatrix) -> Unitarity {
    let n = u.rows();
    let id = ComplexMatrix::identity(n);
    let a = u.adjoint().mul(u);
    let b = u.mul(&u.adjoint());
    if a.approx_eq(&id, 1e-10) && b.approx_eq(&id, 1e-10) {
        Unitarity::Unitary
    } else if a.mul(&a).approx_eq(&a, 1e-10) && b.mul(&b).approx_eq(&b, 1e-10) {
        Unitarity::PartialIsometry
    } else {
        Unitarity::Other
    }
}

/// Serializable description of a triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TripleJson {
    pub label: String,
    pub dimension: usize,
    #[serde(rename = "D")]
    pub d: MatrixJson,
    #[serde(default)]
    pub generators: BTreeMap<String, MatrixJson>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub p: f64,
    #[serde(default)]
    pub truncation_mode: Option<Truncation>,
    #[serde(default)]
    pub blocks: Option<Vec<(usize, usize)>>,
}

/// `{"diagonal": [..]}`, `{"dense": [[[re, im], ..], ..]}` or `{"entries": [[i, j, re, im], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixJson {
    Diagonal(Vec<f64>),
    Dense(Vec<Vec<[f64; 2]>>),
    Entries(Vec<(usize, usize, f64, f64)>),
}

impl MatrixJson {
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        MatrixJson::Dense((0..m.rows()).map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect()).collect())
    }

    pub fn entries_of(m: &ComplexMatrix) -> Self {
        MatrixJson::Entries(m.to_sparse().entries().iter().map(|&(i, j, v)| (i, j, v.re, v.im)).collect())
    }

    pub fn to_dense(&self, n: usize) -> Result<ComplexMatrix> {
        match self {
            MatrixJson::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::Dimension(format!("diagonal of length {} for dimension {n}", d.len())));
                }
                Ok(ComplexMatrix::from_real_diag(d))
            }
            MatrixJson::Dense(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Dimension(format!("dense matrix is not {n}x{n}")));
                }
                Ok(ComplexMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            }
            MatrixJson::Entries(es) => {
                let mut m = ComplexMatrix::zeros(n, n);
                for &(i, j, a, b) in es {
                    if i >= n || j >= n {
                        return Err(Error::Dimension(format!("entry ({i}, {j}) outside {n}x{n}")));
                    }
                    m[(i, j)] += C64::new(a, b);
                }
                Ok(m)
            }
        }
    }
}

/// D = diag(−N..N) on span{e_{−N}..e_N}, generator "u" shifting e_n → e_{n+1}.
pub fn circle_triple(n_cut: usize, mode: Truncation) -> Result<SpectralTripleRep> {
    if n_cut < 1 {
        return Err(Error::Precondition("circle cutoff must be ≥ 1".into()));
    }
    let dim = 2 * n_cut + 1;
    let diag: Vec<f64> = (0..dim).map(|i| i as f64 - n_cut as f64).collect();
    let mut u = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        u[(i + 1, i)] = ONE;
    }
    if mode == Truncation::Circulant {
        u[(0, dim - 1)] = ONE;
    }
    let mut gens = BTreeMap::new();
    gens.insert("u".to_string(), u);
    let label = match mode {
        Truncation::Plain => format!("circle-{n_cut}"),
        Truncation::Circulant => format!("circle-{n_cut}-circulant"),
    };
    let mut t = SpectralTripleRep::new(HermitianMatrix::from_real_diag(&diag), gens, TraceWeights::uniform(dim), 1.0, label)?;
    t.truncation = Some(mode);
    Ok(t)
}

fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (n1, n2) = (a.rows(), b.rows());
    let mut m = ComplexMatrix::zeros(n1 + n2, n1 + n2);
    for i in 0..n1 {
        for j in 0..n1 {
            m[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..n2 {
        for j in 0..n2 {
            m[(n1 + i, n1 + j)] = b[(i, j)];
        }
    }
    m
}

/// t1 ⊕ t2 with trace w1·τ₁ ⊕ w2·τ₂.
pub fn weighted_sum_triple(t1: &SpectralTripleRep, t2: &SpectralTripleRep, w1: f64, w2: f64) -> Result<SpectralTripleRep> {
    if !t1.gens.keys().eq(t2.gens.keys()) {
        return Err(Error::Precondition("summands have different generator names".into()));
    }
    let d = HermitianMatrix::new(direct_sum(t1.d.matrix(), t2.d.matrix()))?;
    let gens = t1.gens.iter().map(|(k, a)| (k.clone(), direct_sum(a, &t2.gens[k]))).collect();
    let weights = TraceWeights::new(t1.weights.scaled(w1).concat(&t2.weights.scaled(w2)).as_slice().to_vec())?;
    let off = t1.dim();
    let blocks = t1.blocks.iter().copied().chain(t2.blocks.iter().map(|&(s, l)| (s + off, l))).collect();
    let t = SpectralTripleRep {
        d,
        gens,
        weights,
        p: t1.p.max(t2.p),
        label: format!("{}+{}", t1.label, t2.label),
        truncation: if t1.truncation == t2.truncation { t1.truncation } else { None },
        blocks,
    };
    t.validate()?;
    Ok(t)
}

/// T^{(n)} = [D², [D², … [D², T]…]].
pub fn iterated_comm(t: &SpectralTripleRep, x: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let d2 = t.d.square();
    (0..n).fold(x.clone(), |acc, _| d2.matrix().commutator(&acc))
}

pub fn pauli(k: usize) -> SparseMatrix {
    let mut m = BTreeMap::new();
    match k {
        1 => {
            m.insert((0, 1), ONE);
            m.insert((1, 0), ONE);
        }
        2 => {
            m.insert((0, 1), -I);
            m.insert((1, 0), I);
        }
        3 => {
            m.insert((0, 0), ONE);
            m.insert((1, 1), -ONE);
        }
        _ => return SparseMatrix::identity(2),
    }
    SparseMatrix::from_map(2, 2, m)
}

fn unit2(i: usize, j: usize) -> SparseMatrix {
    let mut m = BTreeMap::new();
    m.insert((i, j), ONE);
    SparseMatrix::from_map(2, 2, m)
}

/// [[a, b], [c, d]] from n×n blocks.
pub fn block2(a: &SparseMatrix, b: &SparseMatrix, c: &SparseMatrix, d: &SparseMatrix) -> SparseMatrix {
    unit2(0, 0).kron(a).add(&unit2(0, 1).kron(b)).add(&unit2(1, 0).kron(c)).add(&unit2(1, 1).kron(d))
}

/// The doubled package on C²⊗C²⊗H (Kronecker order σ-factor ⊗ 2×2 ⊗ H).
#[derive(Clone, Debug)]
pub struct DoubledTriple {
    pub n: usize,
    /// D̃ = σ₂⊗1₂⊗D.
    pub dt: SparseMatrix,
    /// q = σ₃⊗[[0, −iu*], [iu, 0]].
    pub q: SparseMatrix,
    /// Γ = σ₂⊗σ₃⊗1.
    pub gamma: SparseMatrix,
    /// ρ = σ₂⊗1₂⊗1.
    pub rho: SparseMatrix,
    /// {D̃, q}.
    pub anti: SparseMatrix,
    /// σ₂⊗diag(u*[D,u], u[D,u*]), the r-derivative of the straight path from D̃.
    pub ddot: SparseMatrix,
    pub weights4: TraceWeights,
    pub unitarity: Unitarity,
    pub p: f64,
}

impl DoubledTriple {
    pub fn dim(&self) -> usize {
        4 * self.n
    }
    pub fn dt_dense(&self) -> HermitianMatrix {
        HermitianMatrix::new(self.dt.to_dense()).expect("D̃ is Hermitian")
    }
    pub fn q_dense(&self) -> HermitianMatrix {
        HermitianMatrix::new(self.q.to_dense()).expect("q is Hermitian")
    }
    pub fn gamma_dense(&self) -> HermitianMatrix {
        HermitianMatrix::new(self.gamma.to_dense()).expect("Γ is Hermitian")
    }
    pub fn rho_dense(&self) -> HermitianMatrix {
        HermitianMatrix::new(self.rho.to_dense()).expect("ρ is Hermitian")
    }
    pub fn anti_dense(&self) -> ComplexMatrix {
        self.anti.to_dense()
    }

    /// Sτ(X) = ½τ(ΓX).
    pub fn supertrace(&self, x: &ComplexMatrix) -> Result<C64> {
        Ok(trace_tau(&self.gamma.to_dense().mul(x), &self.weights4)? * 0.5)
    }

    /// Sτ(X·F) for sparse X and block-diagonal F, i.e. ½ Σ w_i (ΓX)_ij F_ji.
    pub fn supertrace_with(&self, x: &SparseMatrix, f: &crate::numkernel::BlockDiag) -> C64 {
        f.trace_with(&self.gamma.mul(x), self.weights4.as_slice()) * 0.5
    }

    /// Maximum deviation from the algebraic relations among q, Γ, ρ, D̃.
    pub fn relation_defects(&self) -> BTreeMap<&'static str, f64> {
        let id = SparseMatrix::identity(self.dim());
        let z = |m: SparseMatrix| m.max_abs();
        let mut out = BTreeMap::new();
        out.insert("q^2-1", z(self.q.mul(&self.q).sub(&id)));
        out.insert("gamma^2-1", z(self.gamma.mul(&self.gamma).sub(&id)));
        out.insert("rho^2-1", z(self.rho.mul(&self.rho).sub(&id)));
        out.insert("[gamma,q]", z(self.gamma.commutator(&self.q)));
        out.insert("[gamma,Dt]", z(self.gamma.commutator(&self.dt)));
        out.insert("[rho,gamma]", z(self.rho.commutator(&self.gamma)));
        out.insert("{rho,q}", z(self.rho.anticommutator(&self.q)));
        out
    }
}

/// Builds the doubled package. Accepts unitaries and partial isometries; for a partial
/// isometry q² ≠ 1 but every other relation holds.
pub fn double_up(t: &SpectralTripleRep, u_name: &str) -> Result<DoubledTriple> {
    let um = t.gen(u_name)?;
    let kind = unitarity(um);
    if kind == Unitarity::Other {
        return Err(Error::Precondition(format!("generator {u_name} is not unitary")));
    }
    let n = t.dim();
    let d = t.d.matrix().to_sparse();
    let u = um.to_sparse();
    let us = u.adjoint();
    let id_n = SparseMatrix::identity(n);
    let zero = SparseMatrix::zeros(n, n);
    let id2 = SparseMatrix::identity(2);

    let dt = pauli(2).kron(&id2).kron(&d);
    let inner = block2(&zero, &us.scale(-I), &u.scale(I), &zero);
    let q = pauli(3).kron(&inner);
    let gamma = pauli(2).kron(&pauli(3)).kron(&id_n);
    let rho = pauli(2).kron(&id2).kron(&id_n);

    let du = d.commutator(&u);
    let dus = d.commutator(&us);
    let anti = dt.anticommutator(&q);
    let anti_block = pauli(1).kron(&block2(&zero, &dus, &du.scale_re(-1.0), &zero));
    let scale = anti.max_abs().max(1.0);
    if !anti.approx_eq(&anti_block, 1e-10 * scale) {
        return Err(Error::Consistency("anticommutator block formula disagrees with direct product".into()));
    }
    let ddot = pauli(2).kron(&block2(&us.mul(&du), &zero, &zero, &u.mul(&dus)));
    let w = &t.weights;
    let weights4 = w.concat(w).concat(&w.concat(w));
    Ok(DoubledTriple { n, dt, q, gamma, rho, anti, ddot, weights4, unitarity: kind, p: t.p })
}

/// C_{p+ε}·(1/2 + s² − s‖A‖)^{−r+ε} with C_{p+ε} = ‖(1/2 + D²)^{−(p/2+ε)}‖₁.
pub fn tail_bound_big(t: &SpectralTripleRep, norm_a: f64, p_eff: f64, r_re: f64, eps: f64, s: f64) -> Result<f64> {
    let c = tail_constant(&t.d.matrix().to_sparse(), t.weights.as_slice(), p_eff, eps)?;
    tail_bound_with(c, norm_a, r_re, eps, s)
}

/// τ((1/2 + D²)^{−(p/2+ε)}); the operator is positive so this is its trace norm.
pub fn tail_constant(d: &SparseMatrix, w: &[f64], p_eff: f64, eps: f64) -> Result<f64> {
    let f = eigh_sparse(d)?.apply_fn(|l| Ok(C64::new((0.5 + l * l).powf(-(p_eff / 2.0 + eps)), 0.0)))?;
    Ok((0..d.rows()).map(|i| w[i] * f.get(i, i).re).sum())
}

pub fn tail_bound_with(c: f64, norm_a: f64, r_re: f64, eps: f64, s: f64) -> Result<f64> {
    if norm_a >= 2f64.sqrt() {
        return Err(Error::Precondition(format!("tail bound needs ‖A‖ < √2, got {norm_a}")));
    }
    if r_re <= 0.0 || eps <= 0.0 {
        return Err(Error::Precondition("tail bound needs r > 0 and ε > 0".into()));
    }
    let base = 0.5 + s * s - s * norm_a;
    Ok(c * base.powf(-r_re + eps))
}

/// C_β for real β.
pub fn c_beta_re(beta: f64) -> Result<f64> {
    Ok(c_beta(C64::new(beta, 0.0))?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{eigh, op_norm, trace_norm, ZERO};

    #[test]
    fn circle_n1() {
        let t = circle_triple(1, Truncation::Plain).unwrap();
        assert_eq!(t.d.real_diag(), vec![-1.0, 0.0, 1.0]);
        let u = t.gen("u").unwrap();
        // e₀ is the middle basis vector, index 1.
        assert_eq!(u[(2, 1)], ONE);
        assert_eq!(u.column(2), vec![ZERO; 3]);
        assert_eq!(t.unitarity("u").unwrap(), Unitarity::PartialIsometry);
        let c = circle_triple(1, Truncation::Circulant).unwrap();
        assert_eq!(c.unitarity("u").unwrap(), Unitarity::Unitary);
        assert!(c.gen("u").unwrap().pow(3).approx_eq(&ComplexMatrix::identity(3), 0.0));
    }

    #[test]
    fn circle_commutator_interior() {
        let t = circle_triple(6, Truncation::Plain).unwrap();
        let u = t.gen("u").unwrap();
        let du = t.comm_d(u);
        assert!(du.approx_eq(u, 1e-14));
    }

    #[test]
    fn weighted_sum_dimension() {
        let a = circle_triple(3, Truncation::Plain).unwrap();
        let s = weighted_sum_triple(&a, &a, 1.0, 0.5).unwrap();
        assert!((s.weights.total() - 1.5 * 7.0).abs() < 1e-14);
        assert_eq!(s.blocks, vec![(0, 7), (7, 7)]);
        let z = weighted_sum_triple(&a, &a, 1.0, 0.0).unwrap();
        let x = ComplexMatrix::identity(14);
        assert!((z.tau(&x).unwrap().re - 7.0).abs() < 1e-14);
        let mut b = a.clone();
        b.gens.insert("v".into(), ComplexMatrix::identity(7));
        assert!(weighted_sum_triple(&a, &b, 1.0, 1.0).is_err());
    }

    #[test]
    fn doubled_relations_circulant() {
        let t = circle_triple(2, Truncation::Circulant).unwrap();
        let dt = double_up(&t, "u").unwrap();
        for (k, v) in dt.relation_defects() {
            assert!(v <= 1e-12, "{k}: {v}");
        }
        let q = eigh(&dt.q_dense()).unwrap();
        assert!(q.eigenvalues.iter().all(|l| (l.abs() - 1.0).abs() < 1e-12));
        let du = op_norm(&t.comm_d(t.gen("u").unwrap())).unwrap();
        assert!((op_norm(&dt.anti_dense()).unwrap() - du).abs() < 1e-10);
    }

    #[test]
    fn doubled_identity_has_zero_anti() {
        let mut t = circle_triple(2, Truncation::Plain).unwrap();
        t.gens.insert("one".into(), ComplexMatrix::identity(5));
        let dt = double_up(&t, "one").unwrap();
        assert_eq!(dt.anti.max_abs(), 0.0);
    }

    #[test]
    fn doubled_plain_keeps_parity_relations() {
        let t = circle_triple(3, Truncation::Plain).unwrap();
        let dt = double_up(&t, "u").unwrap();
        let d = dt.relation_defects();
        assert!(d["q^2-1"] > 0.5);
        assert!(d["{rho,q}"] < 1e-14 && d["[gamma,q]"] < 1e-14);
    }

    #[test]
    fn double_up_rejects_general_matrix() {
        let mut t = circle_triple(1, Truncation::Plain).unwrap();
        t.gens.insert("a".into(), ComplexMatrix::identity(3).scale_re(2.0));
        assert!(double_up(&t, "a").is_err());
    }

    #[test]
    fn iterated_comm_diagonal() {
        let t = circle_triple(2, Truncation::Plain).unwrap();
        let x = ComplexMatrix::from_fn(5, 5, |i, j| C64::new(i as f64 + 1.0, j as f64));
        assert!(iterated_comm(&t, &x, 0).approx_eq(&x, 0.0));
        let d = t.d.real_diag();
        let one = iterated_comm(&t, &x, 1);
        for i in 0..5 {
            for j in 0..5 {
                assert!((one[(i, j)] - x[(i, j)] * (d[i] * d[i] - d[j] * d[j])).norm() < 1e-12);
            }
        }
        let diag = ComplexMatrix::from_real_diag(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(iterated_comm(&t, &diag, 3).is_zero(0.0));
    }

    #[test]
    fn tail_bound_dominates() {
        let t = circle_triple(32, Truncation::Plain).unwrap();
        let bound = tail_bound_big(&t, 0.0, 1.0, 1.0, 0.05, 10.0).unwrap();
        let h = t.d.square();
        let x = crate::numkernel::func_calc(&h, |l| C64::new((1.0 + l + 100.0).powf(-1.5), 0.0)).unwrap();
        let actual = trace_norm(&x, &t.weights).unwrap();
        assert!(bound > actual, "{bound} vs {actual}");
        let c = tail_constant(&t.d.matrix().to_sparse(), t.weights.as_slice(), 1.0, 0.05).unwrap();
        let at0 = tail_bound_big(&t, 0.0, 1.0, 1.0, 0.05, 0.0).unwrap();
        assert!((at0 - c * 2f64.powf(0.95)).abs() < 1e-12 * at0);
        assert!(tail_bound_big(&t, 1.5, 1.0, 1.0, 0.05, 1.0).is_err());
    }

    #[test]
    fn tail_bound_decay() {
        let t = circle_triple(4, Truncation::Plain).unwrap();
        let a = tail_bound_big(&t, 0.0, 1.0, 1.0, 0.05, 1e3).unwrap();
        let b = tail_bound_big(&t, 0.0, 1.0, 1.0, 0.05, 2e3).unwrap();
        assert!((a / b - 2f64.powf(1.9)).abs() < 1e-3);
    }

    #[test]
    fn json_round_trip() {
        let a = circle_triple(3, Truncation::Plain).unwrap();
        let s = weighted_sum_triple(&a, &a, 1.0, 0.5).unwrap();
        let text = serde_json::to_string(&s.to_json()).unwrap();
        let back = SpectralTripleRep::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert!(back.d.matrix().approx_eq(s.d.matrix(), 0.0));
        assert!(back.gens["u"].approx_eq(&s.gens["u"], 0.0));
        assert_eq!(back.weights, s.weights);
        assert_eq!(back.blocks, s.blocks);
    }
}
