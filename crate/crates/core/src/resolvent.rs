//! Expectations ⟨A₀, …, A_m⟩_{m,s,r} = τ((1/2πi)∫_ℓ λ^{−β} A₀R_s(λ)A₁⋯A_mR_s(λ) dλ) with
//! β = p/2 + r and R_s(λ) = (λ − (1 + s² + D²))^{−1}, the resolvent cochain φ_m^r and its
//! cocycle defect, and the scalar Cauchy and Laplace kernels.
//!
//! In the eigenbasis of D the trace expands over index paths, each contributing a
//! coefficient times Π_k (λ − μ_k)^{−1}. The λ-integral of one path is the divided
//! difference of λ^{−β} over its nodes; it is computed either by contour quadrature or
//! directly.

use crate::constants::{gamma, script_c};
use crate::error::{Error, Result};
use crate::numkernel::{
    eigh, inverse, quad_half_line, quad_vertical_line_auto, ComplexMatrix, ContourSpec, HalfLineOpts, C64, ONE, ZERO,
};
use crate::triples::{DoubledTriple, SpectralTripleRep};
use std::collections::BTreeMap;

/// How the λ-integral along the vertical line is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LineMethod {
    Contour(ContourSpec),
    DividedDifference,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectationParams {
    pub m: usize,
    pub s: f64,
    pub r: C64,
    pub p_eff: f64,
    pub method: LineMethod,
}

impl ExpectationParams {
    pub fn beta(&self) -> C64 {
        self.r + self.p_eff / 2.0
    }
}

/// x ↦ f^{(k)}(x)/k! for f(x) = x^a on x > 0.
pub fn power_taylor(a: C64, k: usize, x: f64) -> C64 {
    let mut c = ONE;
    for j in 0..k {
        c *= (a - j as f64) / (j as f64 + 1.0);
    }
    c * ((a - k as f64) * x.ln()).exp()
}

/// f[x₀, …, x_m] on real nodes, confluent nodes handled by `taylor(k, x) = f^{(k)}(x)/k!`.
pub fn divided_difference(nodes: &[f64], taylor: &dyn Fn(usize, f64) -> C64) -> C64 {
    let mut x = nodes.to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len();
    let mut t: Vec<C64> = x.iter().map(|&xi| taylor(0, xi)).collect();
    for k in 1..n {
        for i in 0..n - k {
            let (a, b) = (x[i], x[i + k]);
            t[i] = if b - a <= 1e-11 * b.abs().max(1e-300) { taylor(k, 0.5 * (a + b)) } else { (t[i + 1] - t[i]) / (b - a) };
        }
    }
    t[0]
}

/// The triple in the eigenbasis of D.
#[derive(Clone, Debug)]
pub struct Frame {
    pub v: ComplexMatrix,
    pub d: Vec<f64>,
    pub w: Vec<f64>,
}

impl Frame {
    pub fn new(t: &SpectralTripleRep) -> Result<Self> {
        let e = eigh(&t.d)?;
        let v = e.eigenvectors;
        let wm = v.adjoint().mul(&t.weights.as_matrix()).mul(&v);
        let scale = wm.max_abs().max(1e-300);
        let n = v.rows();
        for i in 0..n {
            for j in 0..n {
                if i != j && wm[(i, j)].norm() > 1e-10 * scale {
                    return Err(Error::Precondition("weights do not commute with D".into()));
                }
            }
        }
        Ok(Self { w: (0..n).map(|i| wm[(i, i)].re).collect(), d: e.eigenvalues, v })
    }

    pub fn to_eigenbasis(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.v.adjoint().mul(a).mul(&self.v)
    }

    /// 1 + d_i².
    pub fn mu(&self, i: usize) -> f64 {
        1.0 + self.d[i] * self.d[i]
    }
}

/// τ(A₀RA₁R⋯A_mR) as Σ_nodes coeff · Π_k R(μ_{node_k}), grouped by sorted node multiset.
#[derive(Clone, Debug)]
pub struct PathTensor {
    pub m: usize,
    pub groups: Vec<(Vec<u32>, C64)>,
    pub abs_sum: f64,
}

impl PathTensor {
    pub fn new(frame: &Frame, ops: &[ComplexMatrix]) -> Result<Self> {
        let n = frame.d.len();
        if ops.is_empty() {
            return Err(Error::Precondition("expectation needs at least one operator".into()));
        }
        for a in ops {
            if a.rows() != n || a.cols() != n {
                return Err(Error::Dimension(format!("operator is {}x{}, triple has dimension {n}", a.rows(), a.cols())));
            }
        }
        let eb: Vec<ComplexMatrix> = ops.iter().map(|a| frame.to_eigenbasis(a)).collect();
        let rows: Vec<Vec<Vec<(u32, C64)>>> = eb
            .iter()
            .map(|a| {
                let cut = 1e-15 * a.max_abs();
                (0..n).map(|i| (0..n).filter(|&j| a[(i, j)].norm() > cut).map(|j| (j as u32, a[(i, j)])).collect()).collect()
            })
            .collect();
        let m = ops.len() - 1;
        let mut groups: BTreeMap<Vec<u32>, C64> = BTreeMap::new();
        let mut path = Vec::with_capacity(m + 1);
        for i0 in 0..n {
            if frame.w[i0] == 0.0 {
                continue;
            }
            path.clear();
            path.push(i0 as u32);
            walk(&rows, 0, i0 as u32, C64::new(frame.w[i0], 0.0), &mut path, &mut groups);
        }
        let groups: Vec<(Vec<u32>, C64)> = groups.into_iter().filter(|(_, c)| *c != ZERO).collect();
        let abs_sum = groups.iter().map(|g| g.1.norm()).sum();
        Ok(Self { m, groups, abs_sum })
    }

    /// Σ coeff · f[μ + s²] with f = λ^{−β}.
    pub fn eval_dd(&self, frame: &Frame, s: f64, beta: C64) -> C64 {
        let f = |k: usize, x: f64| power_taylor(-beta, k, x);
        self.groups
            .iter()
            .map(|(nodes, c)| {
                let xs: Vec<f64> = nodes.iter().map(|&i| frame.mu(i as usize) + s * s).collect();
                c * divided_difference(&xs, &f)
            })
            .sum()
    }

    /// λ ↦ λ^{−β} Σ coeff Π (λ − μ − s²)^{−1}.
    pub fn integrand(&self, frame: &Frame, s: f64, beta: C64, lam: C64) -> C64 {
        let mut total = ZERO;
        for (nodes, c) in &self.groups {
            let mut p = *c;
            for &i in nodes {
                p /= lam - (frame.mu(i as usize) + s * s);
            }
            total += p;
        }
        total * lam.powc(-beta)
    }

    pub fn eval_contour(&self, frame: &Frame, s: f64, beta: C64, spec: &ContourSpec) -> Result<C64> {
        if self.groups.is_empty() {
            return Ok(ZERO);
        }
        let f = |lam: C64| self.integrand(frame, s, beta, lam);
        let top = self.groups.iter().flat_map(|g| g.0.iter()).map(|&i| frame.mu(i as usize)).fold(1.0, f64::max) + s * s;
        Ok(quad_vertical_line_auto(&f, spec, beta.re + self.m as f64 + 1.0, top)?.value)
    }

    pub fn eval(&self, frame: &Frame, s: f64, beta: C64, method: &LineMethod) -> Result<C64> {
        match method {
            LineMethod::DividedDifference => Ok(self.eval_dd(frame, s, beta)),
            LineMethod::Contour(spec) => self.eval_contour(frame, s, beta, spec),
        }
    }

    /// Bound on ∫_S^∞ s^k |expectation| ds from |f[⋯]| ≤ sup|f^{(m)}|/m! on [1 + s², ∞).
    pub fn tail(&self, k: usize, beta: C64, s: f64) -> f64 {
        let m = self.m;
        let mut c = 1.0;
        for j in 0..m {
            c *= (beta + j as f64).norm() / (j as f64 + 1.0);
        }
        let e = 2.0 * beta.re + 2.0 * m as f64 - k as f64 - 1.0;
        if e <= 0.0 || s <= 0.0 {
            return f64::INFINITY;
        }
        self.abs_sum * c * s.powf(-e) / e
    }

    /// ∫₀^∞ s^k ⟨⋯⟩ ds by half-line quadrature.
    pub fn s_integral(&self, frame: &Frame, k: usize, beta: C64, method: &LineMethod, rel_tol: f64) -> Result<C64> {
        if self.groups.is_empty() {
            return Ok(ZERO);
        }
        let err = std::cell::Cell::new(None);
        let g = |s: f64| -> C64 {
            match self.eval(frame, s, beta, method) {
                Ok(v) => v * s.powi(k as i32),
                Err(e) => {
                    err.set(Some(e));
                    ZERO
                }
            }
        };
        let tail = |s: f64| self.tail(k, beta, s);
        let opts = HalfLineOpts { rel_tol, abs_tol: 1e-300, s_max: 1e12, first: 1.0, max_subdiv: 400 };
        let r = quad_half_line(&g, &tail, opts)?;
        match err.take() {
            Some(e) => Err(e),
            None => Ok(r.value),
        }
    }

    /// ∫₀^∞ s^k ⟨⋯⟩ ds exactly: the divided difference of
    /// x ↦ Γ((k+1)/2)Γ(β − (k+1)/2)/(2Γ(β)) · x^{(k+1)/2 − β}.
    pub fn s_integral_closed(&self, frame: &Frame, k: usize, beta: C64) -> Result<C64> {
        let h = (k as f64 + 1.0) / 2.0;
        if beta.re <= h {
            return Err(Error::Precondition(format!("closed form needs Re β > {h}, got {beta}")));
        }
        let pref = gamma(C64::new(h, 0.0))? * gamma(beta - h)? / (gamma(beta)? * 2.0);
        let f = |j: usize, x: f64| power_taylor(h - beta, j, x);
        Ok(pref
            * self
                .groups
                .iter()
                .map(|(nodes, c)| {
                    let xs: Vec<f64> = nodes.iter().map(|&i| frame.mu(i as usize)).collect();
                    c * divided_difference(&xs, &f)
                })
                .sum::<C64>())
    }
}

fn walk(
    rows: &[Vec<Vec<(u32, C64)>>],
    k: usize,
    at: u32,
    coeff: C64,
    path: &mut Vec<u32>,
    out: &mut BTreeMap<Vec<u32>, C64>,
) {
    let last = k == rows.len() - 1;
    for &(j, a) in &rows[k][at as usize] {
        if last {
            if j == path[0] {
                let mut key = path.clone();
                key.sort_unstable();
                *out.entry(key).or_insert(ZERO) += coeff * a;
            }
        } else {
            path.push(j);
            walk(rows, k + 1, j, coeff * a, path, out);
            path.pop();
        }
    }
}

pub fn expectation(t: &SpectralTripleRep, ops: &[ComplexMatrix], params: &ExpectationParams) -> Result<C64> {
    if ops.len() != params.m + 1 {
        return Err(Error::Dimension(format!("expected {} operators, got {}", params.m + 1, ops.len())));
    }
    let frame = Frame::new(t)?;
    let pt = PathTensor::new(&frame, ops)?;
    pt.eval(&frame, params.s, params.beta(), &params.method)
}

/// Evaluation settings for the resolvent cochain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CochainOpts {
    pub p_eff: f64,
    pub method: LineMethod,
    pub rel_tol: f64,
    /// Use the closed-form s-integral instead of half-line quadrature.
    pub closed_form: bool,
}

impl CochainOpts {
    pub fn quadrature(p_eff: f64) -> Self {
        Self { p_eff, method: LineMethod::DividedDifference, rel_tol: 1e-11, closed_form: false }
    }
    pub fn closed(p_eff: f64) -> Self {
        Self { p_eff, method: LineMethod::DividedDifference, rel_tol: 1e-11, closed_form: true }
    }
}

/// Resolvent cochain evaluator bound to one triple.
#[derive(Clone, Debug)]
pub struct ResolventCochain {
    pub frame: Frame,
    d: ComplexMatrix,
    pub opts: CochainOpts,
}

impl ResolventCochain {
    pub fn new(t: &SpectralTripleRep, opts: CochainOpts) -> Result<Self> {
        Ok(Self { frame: Frame::new(t)?, d: t.d.matrix().clone(), opts })
    }

    pub fn s_moment(&self, ops: &[ComplexMatrix], k: usize, r: C64) -> Result<C64> {
        let pt = PathTensor::new(&self.frame, ops)?;
        let beta = r + self.opts.p_eff / 2.0;
        if self.opts.closed_form {
            pt.s_integral_closed(&self.frame, k, beta)
        } else {
            pt.s_integral(&self.frame, k, beta, &self.opts.method, self.opts.rel_tol)
        }
    }

    /// φ_m^r(a₀, …, a_m) = 𝒞(m) ∫₀^∞ s^m ⟨a₀, [D,a₁], …, [D,a_m]⟩ ds.
    pub fn phi(&self, m: usize, r: C64, args: &[ComplexMatrix]) -> Result<C64> {
        if m.is_multiple_of(2) {
            return Err(Error::Precondition(format!("resolvent cochain needs odd m, got {m}")));
        }
        if args.len() != m + 1 {
            return Err(Error::Dimension(format!("φ_{m} takes {} arguments, got {}", m + 1, args.len())));
        }
        if r.re <= (1.0 - m as f64) / 2.0 {
            return Err(Error::Precondition(format!("need Re r > {}, got {r}", (1.0 - m as f64) / 2.0)));
        }
        let mut ops = vec![args[0].clone()];
        ops.extend(args[1..].iter().map(|a| self.d.commutator(a)));
        Ok(script_c(m)? * self.s_moment(&ops, m, r)?)
    }

    /// (Bφ_{m+2} + bφ_m)(a₀, …, a_{m+1}) together with the largest term magnitude.
    pub fn cocycle_defect(&self, m: usize, r: C64, args: &[ComplexMatrix]) -> Result<(C64, f64)> {
        if args.len() != m + 2 {
            return Err(Error::Dimension(format!("defect in degree {m} takes {} arguments", m + 2)));
        }
        let n = args.len();
        let one = ComplexMatrix::identity(args[0].rows());
        let mut terms = Vec::new();
        for j in 0..n {
            let mut g = vec![one.clone()];
            g.extend(args[j..].iter().cloned());
            g.extend(args[..j].iter().cloned());
            terms.push(self.phi(m + 2, r, &g)?);
        }
        let m1 = m + 1;
        for j in 0..m1 {
            let mut g: Vec<ComplexMatrix> = args[..j].to_vec();
            g.push(args[j].mul(&args[j + 1]));
            g.extend(args[j + 2..].iter().cloned());
            let v = self.phi(m, r, &g)?;
            terms.push(if j % 2 == 0 { v } else { -v });
        }
        let mut g = vec![args[m1].mul(&args[0])];
        g.extend(args[1..m1].iter().cloned());
        let v = self.phi(m, r, &g)?;
        terms.push(if m1.is_multiple_of(2) { v } else { -v });
        let scale = terms.iter().map(|x| x.norm()).fold(0.0, f64::max);
        Ok((terms.iter().sum(), scale))
    }

    /// (Bφ₁)(a₀) = φ₁(1, a₀).
    pub fn b_phi1(&self, r: C64, a0: &ComplexMatrix) -> Result<C64> {
        self.phi(1, r, &[ComplexMatrix::identity(a0.rows()), a0.clone()])
    }
}

pub fn phi_r(t: &SpectralTripleRep, m: usize, r: C64, args: &[ComplexMatrix]) -> Result<C64> {
    ResolventCochain::new(t, CochainOpts::quadrature(t.p))?.phi(m, r, args)
}

pub fn cocycle_defect(t: &SpectralTripleRep, m: usize, r: C64, args: &[ComplexMatrix]) -> Result<(C64, f64)> {
    ResolventCochain::new(t, CochainOpts::quadrature(t.p))?.cocycle_defect(m, r, args)
}

/// ‖R̃ − Σ_{k≤M}(R sA)^k R − (R sA)^{M+1} R̃‖ / ‖R̃‖ with A = {D̃, q}.
pub fn resolvent_expansion_check(dt: &DoubledTriple, s: f64, lam: C64, big_m: usize) -> Result<f64> {
    let n = dt.dim();
    let id = ComplexMatrix::identity(n);
    let base = id.scale_re(1.0 + s * s).add(&dt.dt.mul(&dt.dt).to_dense());
    let sa = dt.anti.to_dense().scale_re(s);
    let r = inverse(&id.scale(lam).sub(&base))?;
    let rt = inverse(&id.scale(lam).sub(&base.add(&sa)))?;
    let step = r.mul(&sa);
    let mut acc = ComplexMatrix::zeros(n, n);
    let mut pw = id.clone();
    for _ in 0..=big_m {
        acc = acc.add(&pw.mul(&r));
        pw = pw.mul(&step);
    }
    let rhs = acc.add(&pw.mul(&rt));
    Ok(rhs.sub(&rt).max_abs() / rt.max_abs().max(1e-300))
}

/// Both sides of k∫s^{k−1}⟨A₀..A_m⟩ds = −2Σ_j∫s^{k+1}⟨A₀..A_j, 1, A_{j+1}..A_m⟩ds.
pub fn s_exponent_shift(t: &SpectralTripleRep, ops: &[ComplexMatrix], k: usize, r: C64, opts: CochainOpts) -> Result<(C64, C64)> {
    if k == 0 {
        return Err(Error::Precondition("s-exponent shift needs k ≥ 1".into()));
    }
    let rc = ResolventCochain::new(t, opts)?;
    let lhs = rc.s_moment(ops, k - 1, r)? * k as f64;
    let one = ComplexMatrix::identity(t.dim());
    let mut rhs = ZERO;
    for j in 0..ops.len() {
        let mut g: Vec<ComplexMatrix> = ops[..=j].to_vec();
        g.push(one.clone());
        g.extend(ops[j + 1..].iter().cloned());
        rhs += rc.s_moment(&g, k + 1, r)?;
    }
    Ok((lhs, rhs * -2.0))
}

/// (1/2πi)∫_ℓ λ^{−β}(λ − μ)^{−n}dλ by quadrature, checked against the derivative formula
/// (−β)(−β−1)⋯(−β−n+2)/(n−1)!·μ^{−β−n+1}.
pub fn scalar_cauchy_oracle(mu: f64, beta: C64, n: usize, contour: &ContourSpec) -> Result<C64> {
    if mu < 1.0 || n == 0 {
        return Err(Error::Precondition(format!("need μ ≥ 1 and n ≥ 1, got μ={mu}, n={n}")));
    }
    let f = |lam: C64| lam.powc(-beta) / (lam - mu).powi(n as i32);
    let q = quad_vertical_line_auto(&f, contour, beta.re + n as f64, mu)?.value;
    let exact = power_taylor(-beta, n - 1, mu);
    if (q - exact).norm() > 1e-8 * exact.norm().max(1e-300) {
        return Err(Error::Consistency(format!("contour value {q} differs from {exact}; refine the contour settings")));
    }
    Ok(q)
}

/// ∫₀^∞ s^m(1 + s² + μ²)^{−β}ds = Γ((m+1)/2)Γ(β − (m+1)/2)/(2Γ(β))·(1 + μ²)^{−β+(m+1)/2}.
pub fn scalar_laplace_oracle(mu: f64, m: usize, beta: C64) -> Result<C64> {
    let h = (m as f64 + 1.0) / 2.0;
    if beta.re <= h {
        return Err(Error::Precondition(format!("need Re β > {h}, got {beta}")));
    }
    let x = 1.0 + mu * mu;
    let closed = gamma(C64::new(h, 0.0))? * gamma(beta - h)? / (gamma(beta)? * 2.0) * C64::new(x, 0.0).powc(h - beta);
    let g = |s: f64| C64::new(x + s * s, 0.0).powc(-beta) * s.powi(m as i32);
    let e = 2.0 * beta.re - m as f64 - 1.0;
    let tail = |s: f64| s.powf(-e) / e;
    let q = quad_half_line(&g, &tail, HalfLineOpts { rel_tol: 1e-12, abs_tol: 1e-300, s_max: 1e14, first: x.sqrt(), max_subdiv: 400 })?;
    if (q.value - closed).norm() > 1e-8 * closed.norm().max(1e-300) {
        return Err(Error::Consistency(format!("Laplace quadrature {} differs from {closed}", q.value)));
    }
    Ok(closed)
}

/// C_β by quadrature of ∫(1+x²)^{−β}dx, for cross-checking the Gamma form.
pub fn c_beta_quadrature(beta: f64) -> Result<f64> {
    let g = |x: f64| C64::new(2.0 * (1.0 + x * x).powf(-beta), 0.0);
    let e = 2.0 * beta - 1.0;
    let tail = |x: f64| 2.0 * x.powf(-e) / e;
    Ok(quad_half_line(&g, &tail, HalfLineOpts { rel_tol: 1e-13, abs_tol: 1e-300, s_max: 1e15, first: 1.0, max_subdiv: 400 })?.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{c, HermitianMatrix, TraceWeights};
    use crate::triples::{circle_triple, double_up, Truncation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rand_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let data = (0..n * n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        ComplexMatrix::from_vec(n, n, data).unwrap()
    }

    fn rand_triple(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SpectralTripleRep {
        let x = rand_matrix(rng, n);
        let d = HermitianMatrix::new(x.add(&x.adjoint()).scale_re(1.5)).unwrap();
        SpectralTripleRep::new(d, BTreeMap::new(), TraceWeights::uniform(n), p, "random").unwrap()
    }

    fn dd_spec() -> ExpectationParams {
        ExpectationParams { m: 0, s: 0.0, r: c(0.5, 0.0), p_eff: 3.0, method: LineMethod::DividedDifference }
    }

    #[test]
    fn divided_difference_basics() {
        let f = |k: usize, x: f64| power_taylor(c(2.0, 0.0), k, x);
        // x² has [a,b] = a + b and [a,b,c] = 1.
        assert!((divided_difference(&[1.0, 3.0], &f) - c(4.0, 0.0)).norm() < 1e-14);
        assert!((divided_difference(&[1.0, 3.0, 7.0], &f) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((divided_difference(&[2.0, 2.0], &f) - c(4.0, 0.0)).norm() < 1e-14);
        assert!((divided_difference(&[2.0, 2.0, 5.0], &f) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn unit_pole_example() {
        let t = SpectralTripleRep::new(HermitianMatrix::from_real_diag(&[0.0]), BTreeMap::new(), TraceWeights::uniform(1), 1.0, "pt").unwrap();
        let p = ExpectationParams { m: 0, s: 0.0, r: c(1.5, 0.0), p_eff: 1.0, method: LineMethod::Contour(ContourSpec::default()) };
        let v = expectation(&t, &[ComplexMatrix::identity(1)], &p).unwrap();
        assert!((v - ONE).norm() < 1e-9, "{v}");
        let z = expectation(&t, &[ComplexMatrix::zeros(1, 1)], &p).unwrap();
        assert_eq!(z, ZERO);
    }

    #[test]
    fn commuting_case_matches_gamma_form() {
        let t = circle_triple(3, Truncation::Plain).unwrap();
        let d = t.d.real_diag();
        let a0 = ComplexMatrix::from_real_diag(&d.iter().map(|x| 1.0 + x * 0.3).collect::<Vec<_>>());
        let a1 = ComplexMatrix::from_real_diag(&d.iter().map(|x| 2.0 - x * x * 0.1).collect::<Vec<_>>());
        let (s, beta) = (0.7, c(1.75, 0.3));
        for method in [LineMethod::DividedDifference, LineMethod::Contour(ContourSpec::default())] {
            let p = ExpectationParams { m: 1, s, r: beta - 0.5, p_eff: 1.0, method };
            let v = expectation(&t, &[a0.clone(), a1.clone()], &p).unwrap();
            let ratio = gamma(beta + 1.0).unwrap() / gamma(beta).unwrap();
            let expect: C64 = (0..7)
                .map(|i| -ratio * a0[(i, i)] * a1[(i, i)] * C64::new(1.0 + d[i] * d[i] + s * s, 0.0).powc(-beta - 1.0))
                .sum();
            assert!((v - expect).norm() < 1e-9 * expect.norm(), "{v} vs {expect}");
        }
    }

    #[test]
    fn contour_agrees_with_divided_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = rand_triple(&mut rng, 4, 3.0);
        let ops: Vec<ComplexMatrix> = (0..3).map(|_| rand_matrix(&mut rng, 4)).collect();
        let mut p = dd_spec();
        p.m = 2;
        p.s = 1.3;
        let a = expectation(&t, &ops, &p).unwrap();
        p.method = LineMethod::Contour(ContourSpec::default());
        let b = expectation(&t, &ops, &p).unwrap();
        assert!((a - b).norm() < 1e-9 * a.norm(), "{a} vs {b}");
    }

    #[test]
    fn cyclicity_of_s_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=2 {
            let t = rand_triple(&mut rng, 4, 3.0);
            let ops: Vec<ComplexMatrix> = (0..=m).map(|_| rand_matrix(&mut rng, 4)).collect();
            let mut rot = vec![ops[m].clone()];
            rot.extend(ops[..m].iter().cloned());
            let rc = ResolventCochain::new(&t, CochainOpts::quadrature(3.0)).unwrap();
            for k in 1..=2 {
                let a = rc.s_moment(&ops, k, c(2.0, 0.0)).unwrap();
                let b = rc.s_moment(&rot, k, c(2.0, 0.0)).unwrap();
                assert!((a - b).norm() <= 1e-6 * a.norm(), "m={m} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn commutator_identity_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = rand_triple(&mut rng, 4, 3.0);
        let ops: Vec<ComplexMatrix> = (0..3).map(|_| rand_matrix(&mut rng, 4)).collect();
        let d2 = t.d.square();
        let mut p = dd_spec();
        p.s = 0.8;
        p.m = 2;
        let j = 1;
        let mut lhs_ops = ops.clone();
        lhs_ops[j] = d2.matrix().commutator(&ops[j]);
        let lhs = -expectation(&t, &lhs_ops, &p).unwrap();
        p.m = 1;
        let a = expectation(&t, &[ops[0].mul(&ops[1]), ops[2].clone()], &p).unwrap();
        let b = expectation(&t, &[ops[0].clone(), ops[1].mul(&ops[2])], &p).unwrap();
        assert!((lhs - (a - b)).norm() < 1e-8 * lhs.norm().max(1.0), "{lhs} vs {}", a - b);
    }

    #[test]
    fn phi_examples() {
        let t = circle_triple(8, Truncation::Plain).unwrap();
        let id = ComplexMatrix::identity(17);
        assert_eq!(phi_r(&t, 1, c(1.0, 0.0), &[id.clone(), id.clone()]).unwrap(), ZERO);
        let u = t.gen("u").unwrap().clone();
        let a = phi_r(&t, 1, c(1.0, 0.0), &[u.adjoint(), u.clone()]).unwrap();
        let b = phi_r(&t, 1, c(1.0, 0.0), &[u.adjoint().scale_re(2.0), u.clone()]).unwrap();
        assert!((b - a * 2.0).norm() < 1e-12 * b.norm());
        let rc = ResolventCochain::new(&t, CochainOpts::closed(1.0)).unwrap();
        let cl = rc.phi(1, c(1.0, 0.0), &[u.adjoint(), u.clone()]).unwrap();
        assert!((a - cl).norm() < 1e-9 * cl.norm(), "{a} vs {cl}");
        assert!(phi_r(&t, 1, c(-0.5, 0.0), &[u.adjoint(), u]).is_err());
    }

    #[test]
    fn cocycle_defect_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = rand_triple(&mut rng, 4, 3.0);
        let args: Vec<ComplexMatrix> = (0..3).map(|_| rand_matrix(&mut rng, 4)).collect();
        let (d, scale) = cocycle_defect(&t, 1, c(2.0, 0.0), &args).unwrap();
        assert!(scale > 1e-6 && d.norm() <= 1e-7 * scale, "{d} vs {scale}");
        let rc = ResolventCochain::new(&t, CochainOpts::quadrature(3.0)).unwrap();
        assert!(rc.b_phi1(c(2.0, 0.0), &args[0]).unwrap().norm() <= 1e-9);
        let id = ComplexMatrix::identity(4);
        let (z, _) = rc.cocycle_defect(1, c(2.0, 0.0), &[id.clone(), id.clone(), id]).unwrap();
        assert!(z.norm() <= 1e-12);
    }

    #[test]
    fn expansion_identity() {
        let t = circle_triple(16, Truncation::Circulant).unwrap();
        let dt = double_up(&t, "u").unwrap();
        assert!(resolvent_expansion_check(&dt, 2.0, c(0.25, 3.0), 5).unwrap() <= 1e-12);
        assert!(resolvent_expansion_check(&dt, 2.0, c(0.25, 3.0), 0).unwrap() <= 1e-12);
        assert_eq!(resolvent_expansion_check(&dt, 0.0, c(0.25, 3.0), 3).unwrap(), 0.0);
    }

    #[test]
    fn s_shift_identity() {
        let t = circle_triple(32, Truncation::Plain).unwrap().with_power("u", 1, "v").unwrap();
        let u = t.gen("u").unwrap().clone();
        let ops = vec![u.adjoint(), t.comm_d(&u)];
        let (a, b) = s_exponent_shift(&t, &ops, 1, c(3.0, 0.0), CochainOpts::quadrature(1.0)).unwrap();
        assert!((a - b).norm() <= 1e-6 * a.norm(), "{a} vs {b}");
        let z = vec![ComplexMatrix::zeros(65, 65)];
        assert_eq!(s_exponent_shift(&t, &z, 1, c(3.0, 0.0), CochainOpts::quadrature(1.0)).unwrap(), (ZERO, ZERO));
        // m = 0 with a commuting operator reduces to Beta integrals.
        let diag = ComplexMatrix::from_real_diag(&t.d.real_diag().iter().map(|x| 1.0 / (1.0 + x * x)).collect::<Vec<_>>());
        let (a, b) = s_exponent_shift(&t, &[diag], 2, c(3.0, 0.0), CochainOpts::quadrature(1.0)).unwrap();
        assert!((a - b).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn cauchy_oracle_examples() {
        let cs = ContourSpec::default();
        assert!((scalar_cauchy_oracle(3.0, c(1.5, 0.0), 1, &cs).unwrap().re - 3f64.powf(-1.5)).abs() < 1e-9);
        let v = scalar_cauchy_oracle(2.0, c(1.5, 0.0), 2, &cs).unwrap();
        assert!((v.re + 1.5 * 2f64.powf(-2.5)).abs() < 1e-9);
        let v = scalar_cauchy_oracle(4.0, c(1.0, 0.0), 3, &cs).unwrap();
        assert!((v.re - 4f64.powi(-3)).abs() < 1e-10);
    }

    #[test]
    fn laplace_oracle_examples() {
        assert!((scalar_laplace_oracle(0.0, 1, c(2.0, 0.0)).unwrap().re - 0.5).abs() < 1e-12);
        assert!((scalar_laplace_oracle(0.0, 0, c(1.0, 0.0)).unwrap().re - PI / 2.0).abs() < 1e-12);
        assert!(scalar_laplace_oracle(3.0, 3, c(4.0, 0.0)).is_ok());
        assert!(scalar_laplace_oracle(3.0, 3, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn c_beta_by_quadrature() {
        for b in [1.0, 1.5, 2.0, 3.0] {
            let q = c_beta_quadrature(b).unwrap();
            let g = crate::constants::c_beta(c(b, 0.0)).unwrap().re;
            assert!((q - g).abs() < 1e-9, "{b}: {q} vs {g}");
        }
    }
}
