//! Cyclic Jacobi eigensolver for Hermitian matrices, with a block-aware variant
//! that splits the index set into connected components of the sparsity graph.

use super::matrix::{ComplexMatrix, HermitianMatrix, SparseMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 80;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let d: Vec<C64> = self.eigenvalues.iter().map(|&x| C64::new(x, 0.0)).collect();
        v.mul(&ComplexMatrix::from_diag(&d)).mul(&v.adjoint())
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }
}

/// Unitary V = [[c, s], [-conj(e) s, conj(e) c]] diagonalising [[a, g], [conj(g), b]].
fn rotation(a: f64, b: f64, g: C64) -> (f64, f64, C64) {
    let ag = g.norm();
    let e = g / ag;
    let zeta = (b - a) / (2.0 * ag);
    let t = if zeta >= 0.0 { 1.0 / (zeta + (1.0 + zeta * zeta).sqrt()) } else { -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, e)
}

fn off_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Jacobi on a dense Hermitian block; returns unsorted eigenvalues and eigenvectors.
fn jacobi_dense(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.rows();
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    if n == 1 {
        return Ok((vec![a[(0, 0)].re], v));
    }
    let total = a.frobenius();
    let target = 1e-15 * total.max(f64::MIN_POSITIVE);
    for _sweep in 0..MAX_SWEEPS {
        if off_norm(&a) <= target {
            return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = a[(p, q)];
                if g.norm() <= 1e-300 {
                    continue;
                }
                let (c, s, e) = rotation(a[(p, p)].re, a[(q, q)].re, g);
                let ec = e.conj();
                let (vpp, vpq, vqp, vqq) = (C64::new(c, 0.0), C64::new(s, 0.0), -ec * s, ec * c);
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * vpp + akq * vqp;
                    a[(k, q)] = akp * vpq + akq * vqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
                    a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * vpp + vkq * vqp;
                    v[(k, q)] = vkp * vpq + vkq * vqq;
                }
            }
        }
    }
    let off = off_norm(&a);
    if off <= 1e-13 * total.max(f64::MIN_POSITIVE) {
        return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS, off })
}

/// One eigen-block: global indices plus the local decomposition.
#[derive(Clone, Debug)]
pub struct SpecBlock {
    pub idx: Vec<usize>,
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Spectral decomposition organised by connected components.
#[derive(Clone, Debug)]
pub struct BlockSpectral {
    pub n: usize,
    pub blocks: Vec<SpecBlock>,
}

fn components(n: usize, entries: &[(usize, usize, C64)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j, _) in entries {
        if i != j {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Block-aware Hermitian eigensolver on sparse input. The caller guarantees hermiticity.
pub fn eigh_sparse(h: &SparseMatrix) -> Result<BlockSpectral> {
    let n = h.rows();
    if n != h.cols() {
        return Err(Error::Dimension("eigh of non-square matrix".into()));
    }
    let comps = components(n, h.entries());
    let mut pos = vec![(0usize, 0usize); n];
    for (b, c) in comps.iter().enumerate() {
        for (l, &g) in c.iter().enumerate() {
            pos[g] = (b, l);
        }
    }
    let mut locals: Vec<ComplexMatrix> = comps.iter().map(|c| ComplexMatrix::zeros(c.len(), c.len())).collect();
    for &(i, j, v) in h.entries() {
        let (b, li) = pos[i];
        let (_, lj) = pos[j];
        locals[b][(li, lj)] = v;
    }
    let mut blocks = Vec::with_capacity(comps.len());
    for (idx, m) in comps.into_iter().zip(locals) {
        let hm = HermitianMatrix::new(m)?;
        let (values, vectors) = jacobi_dense(hm.matrix())?;
        blocks.push(SpecBlock { idx, values, vectors });
    }
    Ok(BlockSpectral { n, blocks })
}

impl BlockSpectral {
    /// Dense decomposition with eigenvalues ascending (ties keep block order).
    pub fn to_dense(&self) -> EigenDecomposition {
        let mut order: Vec<(f64, usize, usize)> = Vec::with_capacity(self.n);
        for (b, blk) in self.blocks.iter().enumerate() {
            for (k, &v) in blk.values.iter().enumerate() {
                order.push((v, b, k));
            }
        }
        order.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut vecs = ComplexMatrix::zeros(self.n, self.n);
        for (col, &(_, b, k)) in order.iter().enumerate() {
            let blk = &self.blocks[b];
            for (l, &g) in blk.idx.iter().enumerate() {
                vecs[(g, col)] = blk.vectors[(l, k)];
            }
        }
        EigenDecomposition { eigenvalues: order.iter().map(|o| o.0).collect(), eigenvectors: vecs }
    }

    /// f(H) in block form.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Result<C64>) -> Result<BlockDiag> {
        let mut loc = vec![(0u32, 0u32); self.n];
        let mut out = Vec::with_capacity(self.blocks.len());
        for (b, blk) in self.blocks.iter().enumerate() {
            let k = blk.idx.len();
            let fv: Vec<C64> = blk.values.iter().map(|&x| f(x)).collect::<Result<_>>()?;
            let mut m = ComplexMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    let mut s = ZERO;
                    for (l, &fl) in fv.iter().enumerate() {
                        s += blk.vectors[(i, l)] * fl * blk.vectors[(j, l)].conj();
                    }
                    m[(i, j)] = s;
                }
            }
            for (l, &g) in blk.idx.iter().enumerate() {
                loc[g] = (b as u32, l as u32);
            }
            out.push((blk.idx.clone(), m));
        }
        Ok(BlockDiag { n: self.n, blocks: out, loc })
    }
}

/// Block-diagonal matrix (after a permutation of the basis).
#[derive(Clone, Debug)]
pub struct BlockDiag {
    pub n: usize,
    pub blocks: Vec<(Vec<usize>, ComplexMatrix)>,
    loc: Vec<(u32, u32)>,
}

impl BlockDiag {
    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (bi, li) = self.loc[i];
        let (bj, lj) = self.loc[j];
        if bi != bj {
            return ZERO;
        }
        self.blocks[bi as usize].1[(li as usize, lj as usize)]
    }

    /// τ(X·F) = Σ_{ij} w_i X_ij F_ji for sparse X.
    pub fn trace_with(&self, x: &SparseMatrix, w: &[f64]) -> C64 {
        x.entries().iter().map(|&(i, j, v)| w[i] * v * self.get(j, i)).sum()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for (idx, b) in &self.blocks {
            for (li, &gi) in idx.iter().enumerate() {
                for (lj, &gj) in idx.iter().enumerate() {
                    m[(gi, gj)] = b[(li, lj)];
                }
            }
        }
        m
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    Ok(eigh_sparse(&h.matrix().to_sparse())?.to_dense())
}

/// One-sided Jacobi: singular values (ascending) and right singular vectors of `b`.
pub fn svd_right(b: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (m, n) = (b.rows(), b.cols());
    let mut a = b.clone();
    let mut v = ComplexMatrix::identity(n);
    let col = |a: &ComplexMatrix, p: usize, q: usize| -> C64 { (0..m).map(|k| a[(k, p)].conj() * a[(k, q)]).sum() };
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = col(&a, p, p).re;
                let beta = col(&a, q, q).re;
                let g = col(&a, p, q);
                if g.norm() <= 1e-15 * (alpha * beta).sqrt() || g.norm() <= 1e-300 {
                    continue;
                }
                rotated = true;
                let (c, s, e) = rotation(alpha, beta, g);
                let ec = e.conj();
                let (vpp, vpq, vqp, vqq) = (C64::new(c, 0.0), C64::new(s, 0.0), -ec * s, ec * c);
                for k in 0..m {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * vpp + y * vqp;
                    a[(k, q)] = x * vpq + y * vqq;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * vpp + y * vqp;
                    v[(k, q)] = x * vpq + y * vqq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS, off: f64::NAN });
    }
    let mut sv: Vec<(f64, usize)> = (0..n).map(|j| (col(&a, j, j).re.max(0.0).sqrt(), j)).collect();
    sv.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
    let vecs = ComplexMatrix::from_fn(n, n, |i, k| v[(i, sv[k].1)]);
    Ok((sv.into_iter().map(|x| x.0).collect(), vecs))
}

/// Operator norm via the largest singular value.
pub fn op_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let g = HermitianMatrix::new(a.adjoint().mul(a))?;
    let e = eigh(&g)?;
    Ok(e.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

pub fn unit(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[k] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::matrix::c;

    fn sample(n: usize, seed: u64) -> HermitianMatrix {
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c(next(), 0.0);
            for j in i + 1..n {
                let z = c(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianMatrix::new(m).unwrap()
    }

    #[test]
    fn diagonal_input_sorted() {
        let e = eigh(&HermitianMatrix::from_real_diag(&[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = eigh(&HermitianMatrix::from_real_diag(&[1.0; 3])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 3]);
        assert!(e.eigenvectors.adjoint().mul(&e.eigenvectors).approx_eq(&ComplexMatrix::identity(3), 1e-14));
    }

    #[test]
    fn random_reconstruction() {
        for seed in 0..5 {
            let h = sample(8, seed);
            let e = eigh(&h).unwrap();
            let err = e.reconstruct().sub(h.matrix()).frobenius();
            assert!(err <= 1e-10 * h.matrix().frobenius(), "err {err}");
            let v = &e.eigenvectors;
            assert!(v.adjoint().mul(v).approx_eq(&ComplexMatrix::identity(8), 1e-10));
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn singular_values_of_rank_deficient() {
        let b = ComplexMatrix::from_real_rows(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let (s, v) = svd_right(&b).unwrap();
        assert!(s[0] < 1e-14);
        assert!((s[1] - 2.0).abs() < 1e-12 && (s[2] - 2.0).abs() < 1e-12);
        let k = v.column(0);
        assert!(b.mul_vec(&k).iter().all(|x| x.norm() < 1e-14));
    }
}
