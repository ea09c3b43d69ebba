//! Spectral flow engines: eigenvalue crossings, index of PuP, the t-integral formula and
//! the doubled half-line formula, plus the path manipulations on the doubled space.
//!
//! Orientation: `crossing_flow`, `index_pup`, `doubled_flow` and `factor_two_flow` report
//! sf(D, u*Du); `cp_integral_flow` reports sf(D, uDu*).

use crate::constants::c_beta;
use crate::error::{Error, Result};
use crate::numkernel::{
    eigh, eigh_sparse, inner, integrate, quad_half_line, quad_vertical_line_auto, svd_right, unit, BlockDiag,
    ComplexMatrix, ContourSpec, EigenDecomposition, HalfLineOpts, HermitianMatrix, QuadOpts, QuadResult, SparseMatrix,
    TraceWeights, C64, ZERO,
};
use crate::triples::{tail_constant, DoubledTriple, SpectralTripleRep, Unitarity};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FlowMethod {
    Crossing,
    IndexPuP,
    CpIntegral,
    Doubled,
}

impl FlowMethod {
    pub fn name(self) -> &'static str {
        match self {
            FlowMethod::Crossing => "crossing",
            FlowMethod::IndexPuP => "indexPuP",
            FlowMethod::CpIntegral => "cpIntegral",
            FlowMethod::Doubled => "doubled",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowReport {
    pub method: FlowMethod,
    pub value: f64,
    pub error_estimate: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl FlowReport {
    fn new(method: FlowMethod, value: f64, error_estimate: f64) -> Self {
        Self { method, value, error_estimate: error_estimate.abs(), diagnostics: BTreeMap::new() }
    }
    fn diag(mut self, k: &str, v: f64) -> Self {
        self.diagnostics.insert(k.to_string(), v);
        self
    }
}

pub type Sampler = Arc<dyn Fn(f64) -> HermitianMatrix + Send + Sync>;

/// A path t ↦ D_t on [0, 1], linear unless a sampler is supplied.
#[derive(Clone)]
pub struct FlowPath {
    pub d0: HermitianMatrix,
    pub d1: HermitianMatrix,
    sampler: Option<Sampler>,
    pub steps: usize,
    /// Index ranges whose outermost entries are treated as edges.
    pub blocks: Vec<(usize, usize)>,
}

impl std::fmt::Debug for FlowPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowPath").field("dim", &self.d0.dim()).field("steps", &self.steps).field("blocks", &self.blocks).finish()
    }
}

impl FlowPath {
    pub fn linear(d0: HermitianMatrix, d1: HermitianMatrix, steps: usize) -> Result<Self> {
        if d0.dim() != d1.dim() {
            return Err(Error::Dimension("path endpoints differ in dimension".into()));
        }
        if steps < 2 {
            return Err(Error::Precondition("path needs at least 2 steps".into()));
        }
        let n = d0.dim();
        Ok(Self { d0, d1, sampler: None, steps, blocks: vec![(0, n)] })
    }

    pub fn with_sampler(d0: HermitianMatrix, d1: HermitianMatrix, sampler: Sampler, steps: usize) -> Result<Self> {
        let mut p = Self::linear(d0, d1, steps)?;
        let tol = 1e-12 * p.d0.matrix().max_abs().max(p.d1.matrix().max_abs()).max(1.0);
        if !sampler(0.0).matrix().approx_eq(p.d0.matrix(), tol) || !sampler(1.0).matrix().approx_eq(p.d1.matrix(), tol) {
            return Err(Error::Precondition("sampler does not match the endpoints".into()));
        }
        p.sampler = Some(sampler);
        Ok(p)
    }

    pub fn with_blocks(mut self, blocks: Vec<(usize, usize)>) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn at(&self, t: f64) -> HermitianMatrix {
        match &self.sampler {
            Some(s) => s(t),
            None if t == 0.0 => self.d0.clone(),
            None if t == 1.0 => self.d1.clone(),
            None => HermitianMatrix::lincomb(1.0 - t, &self.d0, t, &self.d1),
        }
    }

    /// D → u*Du for a generator of the triple.
    pub fn conjugation(t: &SpectralTripleRep, u_name: &str, steps: usize) -> Result<Self> {
        let u = t.gen(u_name)?;
        let d1 = HermitianMatrix::new(u.adjoint().mul(t.d.matrix()).mul(u))?;
        Ok(Self::linear(t.d.clone(), d1, steps)?.with_blocks(t.blocks.clone()))
    }
}

/// Excludes vectors with more than `threshold` of their mass on the outermost `margin`
/// indices of each block.
#[derive(Clone, Debug)]
pub struct EdgeFilter {
    mask: Vec<bool>,
    pub threshold: f64,
}

impl EdgeFilter {
    pub fn new(n: usize, blocks: &[(usize, usize)], margin: usize) -> Self {
        let mut mask = vec![false; n];
        for &(s, l) in blocks {
            let m = margin.min(l);
            for i in 0..m {
                mask[s + i] = true;
                mask[s + l - 1 - i] = true;
            }
        }
        Self { mask, threshold: 0.1 }
    }

    pub fn mass(&self, x: &[C64]) -> f64 {
        x.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(v, _)| v.norm_sqr()).sum()
    }

    /// Rotates span(xs) (orthonormal) to diagonalize the edge mass, then returns the
    /// τ-weight of the interior directions and their count.
    pub fn weighted_dim(&self, xs: &[Vec<C64>], w: &TraceWeights) -> Result<(f64, usize)> {
        let k = xs.len();
        if k == 0 {
            return Ok((0.0, 0));
        }
        let m = ComplexMatrix::from_fn(k, k, |i, j| {
            xs[i].iter().zip(&xs[j]).zip(&self.mask).filter(|(_, &e)| e).map(|((a, b), _)| a.conj() * b).sum()
        });
        let e = eigh(&HermitianMatrix::new(m)?)?;
        let mut total = 0.0;
        let mut kept = 0;
        for l in 0..k {
            if e.eigenvalues[l] > self.threshold {
                continue;
            }
            let mut x = vec![ZERO; xs[0].len()];
            for (i, xi) in xs.iter().enumerate() {
                let c = e.eigenvectors[(i, l)];
                for (a, b) in x.iter_mut().zip(xi) {
                    *a += c * b;
                }
            }
            total += w.expectation(&x);
            kept += 1;
        }
        Ok((total, kept))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CrossingOpts {
    pub max_refinements: usize,
    pub stable_tol: f64,
}

impl Default for CrossingOpts {
    fn default() -> Self {
        Self { max_refinements: 8, stable_tol: 1e-9 }
    }
}

struct Sample {
    d: HermitianMatrix,
    eig: EigenDecomposition,
}

#[derive(Default, Clone, Copy)]
struct LevelStats {
    value: f64,
    up: usize,
    down: usize,
    up_kept: usize,
    down_kept: usize,
}

fn pick(e: &EigenDecomposition, lo: f64, hi: f64, hi_open: bool) -> Vec<usize> {
    (0..e.eigenvalues.len())
        .filter(|&i| {
            let l = e.eigenvalues[i];
            l >= lo && if hi_open { l < hi } else { l <= hi }
        })
        .collect()
}

/// Orthonormal basis (in the b-frame) of the directions in span(vb[cols_b]) that overlap
/// span(va[cols_a]) with singular value above 1/2.
fn crossing_subspace(ea: &EigenDecomposition, cols_a: &[usize], eb: &EigenDecomposition, cols_b: &[usize]) -> Result<Vec<Vec<C64>>> {
    if cols_a.is_empty() || cols_b.is_empty() {
        return Ok(Vec::new());
    }
    let va: Vec<Vec<C64>> = cols_a.iter().map(|&i| ea.vector(i)).collect();
    let vb: Vec<Vec<C64>> = cols_b.iter().map(|&j| eb.vector(j)).collect();
    let o = ComplexMatrix::from_fn(va.len(), vb.len(), |i, j| inner(&va[i], &vb[j]));
    let g = HermitianMatrix::new(o.adjoint().mul(&o))?;
    let e = eigh(&g)?;
    let n = vb[0].len();
    let mut out = Vec::new();
    for l in 0..vb.len() {
        if e.eigenvalues[l] <= 0.25 {
            continue;
        }
        let mut x = vec![ZERO; n];
        for (j, v) in vb.iter().enumerate() {
            let c = e.eigenvectors[(j, l)];
            for (a, b) in x.iter_mut().zip(v) {
                *a += c * b;
            }
        }
        out.push(x);
    }
    Ok(out)
}

fn run_level(
    path: &FlowPath,
    steps: usize,
    cache: &mut BTreeMap<u64, Sample>,
    filter: &EdgeFilter,
    w: &TraceWeights,
    ztol: f64,
) -> Result<Option<LevelStats>> {
    let ts: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    for &t in &ts {
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(t.to_bits()) {
            let d = path.at(t);
            let eig = eigh(&d)?;
            e.insert(Sample { d, eig });
        }
    }
    let nonneg = |e: &EigenDecomposition| e.eigenvalues.iter().filter(|&&l| l >= -ztol).count() as i64;
    let mut st = LevelStats::default();
    for win in ts.windows(2) {
        let a = &cache[&win[0].to_bits()];
        let b = &cache[&win[1].to_bits()];
        let delta = b.d.matrix().sub(a.d.matrix()).max_row_sum() + ztol;
        let na = pick(&a.eig, -delta - ztol, -ztol, true);
        let pb = pick(&b.eig, -ztol, delta + ztol, false);
        let pa = pick(&a.eig, -ztol, delta + ztol, false);
        let nb = pick(&b.eig, -delta - ztol, -ztol, true);
        let up = crossing_subspace(&a.eig, &na, &b.eig, &pb)?;
        let down = crossing_subspace(&a.eig, &pa, &b.eig, &nb)?;
        if up.len() as i64 - down.len() as i64 != nonneg(&b.eig) - nonneg(&a.eig) {
            return Ok(None);
        }
        let (wu, ku) = filter.weighted_dim(&up, w)?;
        let (wd, kd) = filter.weighted_dim(&down, w)?;
        st.value += wu - wd;
        st.up += up.len();
        st.down += down.len();
        st.up_kept += ku;
        st.down_kept += kd;
    }
    Ok(Some(st))
}

pub fn crossing_flow(path: &FlowPath, weights: &TraceWeights, edge_margin: usize) -> Result<FlowReport> {
    crossing_flow_opts(path, weights, edge_margin, CrossingOpts::default())
}

/// Weighted count of eigenvalue branches crossing into [0, ∞) minus those leaving it.
/// The sample grid is doubled until three consecutive grids agree.
pub fn crossing_flow_opts(path: &FlowPath, weights: &TraceWeights, edge_margin: usize, opts: CrossingOpts) -> Result<FlowReport> {
    let n = path.d0.dim();
    if weights.len() != n {
        return Err(Error::Dimension("weights do not match the path".into()));
    }
    let ztol = 1e-12 * path.d0.matrix().max_abs().max(path.d1.matrix().max_abs()).max(1.0);
    let filter = EdgeFilter::new(n, &path.blocks, edge_margin);
    let mut cache = BTreeMap::new();
    let mut history: Vec<Option<LevelStats>> = Vec::new();
    let mut steps = path.steps;
    for _ in 0..=opts.max_refinements {
        history.push(run_level(path, steps, &mut cache, &filter, weights, ztol)?);
        if let [.., Some(x), Some(y), Some(z)] = history.as_slice() {
            if (x.value - y.value).abs() <= opts.stable_tol && (y.value - z.value).abs() <= opts.stable_tol {
                return Ok(FlowReport::new(FlowMethod::Crossing, z.value, 0.0)
                    .diag("steps", steps as f64)
                    .diag("upCrossings", z.up as f64)
                    .diag("downCrossings", z.down as f64)
                    .diag("upKept", z.up_kept as f64)
                    .diag("downKept", z.down_kept as f64));
            }
        }
        steps *= 2;
    }
    let vals: Vec<f64> = history.iter().map(|h| h.map_or(f64::NAN, |s| s.value)).collect();
    let k = vals.len();
    Err(Error::Unstable(vals[k - 2], vals[k - 1]))
}

/// Kernel of a sparse matrix, solved per connected component of its column graph.
fn kernel_vectors(b: &SparseMatrix) -> Result<Vec<Vec<C64>>> {
    let n = b.cols();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut rows_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(i, j, _) in b.entries() {
        rows_of.entry(i).or_default().push(j);
    }
    for cols in rows_of.values() {
        for w in cols.windows(2) {
            let (x, y) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if x != y {
                parent[x.max(y)] = x.min(y);
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for j in 0..n {
        let r = find(&mut parent, j);
        comps.entry(r).or_default().push(j);
    }
    let mut comp_rows: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&i, cols) in &rows_of {
        let r = find(&mut parent, cols[0]);
        comp_rows.entry(r).or_default().push(i);
    }
    let mut out = Vec::new();
    for (root, cols) in comps {
        let rows = comp_rows.remove(&root).unwrap_or_default();
        if rows.is_empty() {
            out.extend(cols.iter().map(|&j| unit(n, j)));
            continue;
        }
        let sub = ComplexMatrix::from_fn(rows.len(), cols.len(), |a, c| b.get(rows[a], cols[c]));
        let (sig, v) = svd_right(&sub)?;
        for (k, &s) in sig.iter().enumerate() {
            if s < 1e-8 {
                let mut x = vec![ZERO; n];
                for (l, &j) in cols.iter().enumerate() {
                    x[j] = v[(l, k)];
                }
                out.push(x);
            } else if s <= 1e-4 {
                return Err(Error::DeadZone(s));
            }
        }
    }
    Ok(out)
}

/// Index of PuP on PH (P the projection onto [0, ∞) of D), reported as sf = −index.
pub fn index_pup(t: &SpectralTripleRep, u_name: &str, edge_margin: usize) -> Result<FlowReport> {
    let u = t.gen(u_name)?.to_sparse();
    let n = t.dim();
    let ztol = 1e-12 * t.d.matrix().max_abs().max(1.0);
    let spec = eigh_sparse(&t.d.matrix().to_sparse())?;
    let mut vp = BTreeMap::new();
    let mut k = 0usize;
    for blk in &spec.blocks {
        for (c, &l) in blk.values.iter().enumerate() {
            if l < -ztol {
                continue;
            }
            for (r, &g) in blk.idx.iter().enumerate() {
                let v = blk.vectors[(r, c)];
                if v != ZERO {
                    vp.insert((g, k), v);
                }
            }
            k += 1;
        }
    }
    let vp = SparseMatrix::from_map(n, k, vp);
    let b = vp.adjoint().mul(&u).mul(&vp);
    let lift = |ys: Vec<Vec<C64>>| -> Vec<Vec<C64>> {
        ys.into_iter()
            .map(|y| {
                let mut x = vec![ZERO; n];
                for &(i, j, v) in vp.entries() {
                    x[i] += v * y[j];
                }
                x
            })
            .collect()
    };
    let ker = lift(kernel_vectors(&b)?);
    let coker = lift(kernel_vectors(&b.adjoint())?);
    let filter = EdgeFilter::new(n, &t.blocks, edge_margin);
    let (dk, kk) = filter.weighted_dim(&ker, &t.weights)?;
    let (dc, kc) = filter.weighted_dim(&coker, &t.weights)?;
    let index = dk - dc;
    Ok(FlowReport::new(FlowMethod::IndexPuP, -index, 0.0)
        .diag("index", index)
        .diag("kernel", ker.len() as f64)
        .diag("cokernel", coker.len() as f64)
        .diag("kernelKept", kk as f64)
        .diag("cokernelKept", kc as f64))
}

fn power_resolvent(h: &SparseMatrix, beta: f64) -> Result<BlockDiag> {
    eigh_sparse(h)?.apply_fn(|l| {
        let v = (1.0 + l * l).powf(-beta);
        if v.is_finite() {
            Ok(C64::new(v, 0.0))
        } else {
            Err(Error::Domain(l))
        }
    })
}

fn positive_power(h: &SparseMatrix, beta: f64) -> Result<BlockDiag> {
    eigh_sparse(h)?.apply_fn(|l| if l > 0.0 { Ok(C64::new(l.powf(-beta), 0.0)) } else { Err(Error::Domain(l)) })
}

/// (1/C_{n/2}) ∫₀¹ τ(u[D,u*](1 + (D + t u[D,u*])²)^{−n/2}) dt, which is sf(D, uDu*).
pub fn cp_integral_flow(t: &SpectralTripleRep, u_name: &str, n: f64) -> Result<FlowReport> {
    if n <= t.p {
        return Err(Error::Precondition(format!("need n > p, got n={n}, p={}", t.p)));
    }
    let u = t.gen(u_name)?;
    if t.unitarity(u_name)? == Unitarity::Other {
        return Err(Error::Precondition(format!("generator {u_name} is not unitary")));
    }
    let x = HermitianMatrix::new(u.mul(&t.comm_d(&u.adjoint())))?;
    let xs = x.matrix().to_sparse();
    let ds = t.d.matrix().to_sparse();
    let w = t.weights.as_slice();
    let beta = n / 2.0;
    let err = std::cell::Cell::new(None);
    let f = |tt: f64| -> C64 {
        let h = ds.add(&xs.scale_re(tt));
        match power_resolvent(&h, beta) {
            Ok(fm) => fm.trace_with(&xs, w),
            Err(e) => {
                err.set(Some(e));
                ZERO
            }
        }
    };
    let r = integrate(&f, 0.0, 1.0, QuadOpts { rel_tol: 1e-9, abs_tol: 1e-13, max_subdiv: 500 })?;
    if let Some(e) = err.take() {
        return Err(e);
    }
    let c = c_beta(C64::new(beta, 0.0))?.re;
    Ok(FlowReport::new(FlowMethod::CpIntegral, r.value.re / c, r.error / c).diag("n", n).diag("cBeta", c))
}

/// The same with n = p + 2r.
pub fn cp_integral_flow_r(t: &SpectralTripleRep, u_name: &str, r: f64) -> Result<FlowReport> {
    cp_integral_flow(t, u_name, t.p + 2.0 * r)
}

pub fn doubled_flow(dt: &DoubledTriple, p_eff: f64, r: f64) -> Result<FlowReport> {
    doubled_flow_opts(dt, p_eff, r, HalfLineOpts { rel_tol: 1e-7, abs_tol: 1e-12, s_max: 1e9, first: 1.0, max_subdiv: 400 })
}

/// (1/C_{p/2+r}) ∫₀^∞ Sτ(q(1 + D̃² + s{D̃,q} + s²)^{−p/2−r}) ds, which is sf(D, u*Du).
pub fn doubled_flow_opts(dt: &DoubledTriple, p_eff: f64, r: f64, opts: HalfLineOpts) -> Result<FlowReport> {
    if r <= 0.0 {
        return Err(Error::Precondition(format!("need r > 0, got {r}")));
    }
    let beta = p_eff / 2.0 + r;
    let nd = dt.dim();
    let id = SparseMatrix::identity(nd);
    let base = id.add(&dt.dt.mul(&dt.dt));
    let gq = dt.gamma.mul(&dt.q);
    let w = dt.weights4.as_slice();
    let err = std::cell::Cell::new(None);
    let g = |s: f64| -> C64 {
        let h = base.add(&dt.anti.scale_re(s)).add(&id.scale_re(s * s));
        match positive_power(&h, beta) {
            Ok(f) => f.trace_with(&gq, w) * 0.5,
            Err(e) => {
                err.set(Some(e));
                ZERO
            }
        }
    };
    let tail = doubled_tail(dt, p_eff, r)?;
    let res = quad_half_line(&g, &tail, opts)?;
    if let Some(e) = err.take() {
        return Err(e);
    }
    let c = c_beta(C64::new(beta, 0.0))?.re;
    Ok(FlowReport::new(FlowMethod::Doubled, res.value.re / c, res.error / c).diag("beta", beta).diag("cBeta", c))
}

/// S ↦ bound on ∫_S^∞ |Sτ(qF(s))| ds, the smaller of a crude spectral bound and the
/// trace-norm bound (when ‖{D̃,q}‖ < √2). Both use s² − s‖A‖ ≥ s²/2 for s ≥ 2‖A‖.
fn doubled_tail(dt: &DoubledTriple, p_eff: f64, r: f64) -> Result<impl Fn(f64) -> f64> {
    let beta = p_eff / 2.0 + r;
    let c = dt.anti.max_row_sum();
    let tau1 = dt.weights4.total();
    let eps = (r / 4.0).min(0.05);
    let tn_const = if c < 2f64.sqrt() && 2.0 * (r - eps) > 1.0 {
        Some(tail_constant(&dt.dt, dt.weights4.as_slice(), p_eff, eps)?)
    } else {
        None
    };
    Ok(move |s: f64| {
        if s < 2.0 * c || s <= 0.0 {
            return f64::INFINITY;
        }
        let crude = 0.5 * tau1 * 2f64.powf(beta) * s.powf(1.0 - 2.0 * beta) / (2.0 * beta - 1.0);
        let tn = tn_const.map_or(f64::INFINITY, |cc| {
            let g = r - eps;
            0.5 * cc * 2f64.powf(g) * s.powf(1.0 - 2.0 * g) / (2.0 * g - 1.0)
        });
        crude.min(tn)
    })
}

/// ∫₀¹ Sτ(Ḋ_r(1 + D_r²)^{−n/2}) dr along D_r = D̃ + r·σ₂⊗diag(u*[D,u], u[D,u*]).
pub fn factor_two_integral(dt: &DoubledTriple, n: f64) -> Result<QuadResult> {
    let gd = dt.gamma.mul(&dt.ddot);
    let w = dt.weights4.as_slice();
    let err = std::cell::Cell::new(None);
    let f = |r: f64| -> C64 {
        let h = dt.dt.add(&dt.ddot.scale_re(r));
        match power_resolvent(&h, n / 2.0) {
            Ok(fm) => fm.trace_with(&gd, w) * 0.5,
            Err(e) => {
                err.set(Some(e));
                ZERO
            }
        }
    };
    let r = integrate(&f, 0.0, 1.0, QuadOpts { rel_tol: 1e-9, abs_tol: 1e-13, max_subdiv: 500 })?;
    match err.take() {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// The factor-2 integral divided by 2C_{n/2}, i.e. sf(D, u*Du).
pub fn factor_two_flow(dt: &DoubledTriple, n: f64) -> Result<FlowReport> {
    let r = factor_two_integral(dt, n)?;
    let c = c_beta(C64::new(n / 2.0, 0.0))?.re;
    Ok(FlowReport::new(FlowMethod::Doubled, r.value.re / (2.0 * c), r.error / (2.0 * c)).diag("integral", r.value.re))
}

fn check_even(dt: &DoubledTriple, x: &HermitianMatrix) -> Result<()> {
    if x.dim() != dt.dim() {
        return Err(Error::Dimension("perturbation does not act on the doubled space".into()));
    }
    let g = dt.gamma.to_dense();
    if !g.commutator(x.matrix()).is_zero(1e-12 * x.matrix().max_abs().max(1.0)) {
        return Err(Error::Precondition("perturbation does not commute with the grading".into()));
    }
    Ok(())
}

/// ∫ Sτ(Ẋ(1 + (D̃ + X)²)^{−n/2}) along the polygon through `points`.
pub fn path_integral(dt: &DoubledTriple, points: &[HermitianMatrix], n: f64) -> Result<QuadResult> {
    let w = dt.weights4.as_slice();
    let mut total = QuadResult { value: ZERO, error: 0.0 };
    for seg in points.windows(2) {
        let (x0, x1) = (seg[0].matrix().to_sparse(), seg[1].matrix().to_sparse());
        let dx = x1.sub(&x0);
        let gdx = dt.gamma.mul(&dx);
        let err = std::cell::Cell::new(None);
        let f = |t: f64| -> C64 {
            let h = dt.dt.add(&x0).add(&dx.scale_re(t));
            match power_resolvent(&h, n / 2.0) {
                Ok(fm) => fm.trace_with(&gdx, w) * 0.5,
                Err(e) => {
                    err.set(Some(e));
                    ZERO
                }
            }
        };
        let r = integrate(&f, 0.0, 1.0, QuadOpts { rel_tol: 1e-12, abs_tol: 1e-14, max_subdiv: 500 })?;
        if let Some(e) = err.take() {
            return Err(e);
        }
        total.value += r.value;
        total.error += r.error;
    }
    Ok(total)
}

/// |∫_A − ∫_B| for two polygons from x0 to x1 through the given intermediate points.
pub fn path_independence_check(
    dt: &DoubledTriple,
    x0: &HermitianMatrix,
    x1: &HermitianMatrix,
    via_a: &[HermitianMatrix],
    via_b: &[HermitianMatrix],
    n: f64,
) -> Result<f64> {
    let build = |via: &[HermitianMatrix]| -> Vec<HermitianMatrix> {
        std::iter::once(x0.clone()).chain(via.iter().cloned()).chain(std::iter::once(x1.clone())).collect()
    };
    let (pa, pb) = (build(via_a), build(via_b));
    for x in pa.iter().chain(&pb) {
        check_even(dt, x)?;
    }
    let a = path_integral(dt, &pa, n)?;
    let b = path_integral(dt, &pb, n)?;
    Ok((a.value - b.value).norm())
}

/// |Sτ(q(1 + D_{1,s}²)^{−n/2}) + Sτ(q(1 + D_{0,s}²)^{−n/2})| with D_{1,s} = −qD̃q + sq and
/// D_{0,s} = D̃ + sq.
pub fn rho_symmetry_check(dt: &DoubledTriple, s: f64, n: f64) -> Result<f64> {
    if dt.unitarity != Unitarity::Unitary {
        return Err(Error::Precondition("the ρ-symmetry needs q² = 1".into()));
    }
    let sq = dt.q.scale_re(s);
    let d1 = dt.q.mul(&dt.dt).mul(&dt.q).scale_re(-1.0).add(&sq);
    let d0 = dt.dt.add(&sq);
    let gq = dt.gamma.mul(&dt.q);
    let w = dt.weights4.as_slice();
    let a = power_resolvent(&d1, n / 2.0)?.trace_with(&gq, w) * 0.5;
    let b = power_resolvent(&d0, n / 2.0)?.trace_with(&gq, w) * 0.5;
    Ok((a + b).norm())
}

/// (1/2πi)∫_ℓ λ^{−β} Sτ(q(R{D̃,q})^k R) dλ with R = (λ − (1 + s² + D̃²))^{−1}.
/// The ρ-conjugation forces this to vanish for even k.
pub fn even_term_supertrace(dt: &DoubledTriple, k: usize, s: f64, beta: f64, spec: &ContourSpec) -> Result<QuadResult> {
    let d2 = dt.dt.mul(&dt.dt).to_dense();
    let h = HermitianMatrix::new(d2)?;
    let e = eigh(&h)?;
    let v = &e.eigenvectors;
    let mu: Vec<f64> = e.eigenvalues.iter().map(|l| 1.0 + s * s + l).collect();
    let gq = dt.gamma.mul(&dt.q).to_dense();
    let anti = v.adjoint().mul(&dt.anti.to_dense()).mul(v);
    let gq_e = v.adjoint().mul(&gq).mul(v);
    let w = dt.weights4.as_matrix();
    let w_e = v.adjoint().mul(&w).mul(v);
    let f = |lam: C64| -> C64 {
        let r: Vec<C64> = mu.iter().map(|m| 1.0 / (lam - m)).collect();
        let mut m = ComplexMatrix::from_diag(&r);
        for _ in 0..k {
            m = ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| r[i] * anti.row(i).iter().zip(0..).map(|(a, l)| a * m[(l, j)]).sum::<C64>());
        }
        let prod = w_e.mul(&gq_e).mul(&m);
        prod.trace() * 0.5 * lam.powf(-beta)
    };
    let scale = mu.iter().cloned().fold(1.0, f64::max);
    quad_vertical_line_auto(&f, spec, beta + k as f64 + 1.0, scale)
}
