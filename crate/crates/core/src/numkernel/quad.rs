//! Adaptive Gauss–Kronrod (7/15) quadrature and the contour / half-line drivers.

use super::matrix::C64;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use std::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
}

/// One GK15 panel: (Kronrod estimate, |K − G|).
pub fn gk15(f: &dyn Fn(f64) -> C64, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

struct Panel {
    a: f64,
    b: f64,
    val: C64,
    err: f64,
}
impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err.total_cmp(&o.err).is_eq() && self.a.total_cmp(&o.a).is_eq()
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err).then(o.a.total_cmp(&self.a))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdiv: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-300, max_subdiv: 2000 }
    }
}

/// Adaptive GK15 over the given breakpoints (ascending). Panels with the largest error are bisected first.
pub fn integrate_breaks(f: &dyn Fn(f64) -> C64, breaks: &[f64], opts: QuadOpts) -> Result<QuadResult> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (val, err) = gk15(f, w[0], w[1]);
            heap.push(Panel { a: w[0], b: w[1], val, err });
        }
    }
    let mut splits = 0;
    loop {
        let (mut total, mut err) = (C64::new(0.0, 0.0), 0.0);
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        for p in &panels {
            total += p.val;
            err += p.err;
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            return Ok(QuadResult { value: total, error: err });
        }
        if splits >= opts.max_subdiv {
            return Err(Error::Quadrature { estimate: err });
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        if !(m > worst.a && m < worst.b) {
            return Err(Error::Quadrature { estimate: err });
        }
        let (v1, e1) = gk15(f, worst.a, m);
        let (v2, e2) = gk15(f, m, worst.b);
        heap.push(Panel { a: worst.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, val: v2, err: e2 });
        splits += 1;
    }
}

pub fn integrate(f: &dyn Fn(f64) -> C64, a: f64, b: f64, opts: QuadOpts) -> Result<QuadResult> {
    integrate_breaks(f, &[a, b], opts)
}

/// Breakpoints 0, h, 2h, 4h, … up to `end`.
pub fn geometric_breaks(h: f64, end: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = h.min(end);
    while x < end {
        b.push(x);
        x *= 2.0;
    }
    b.push(end);
    b
}

/// The vertical line ℓ = {a + iv}, truncated at |v| ≤ vMax.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub a: f64,
    pub v_max: f64,
    pub rel_tol: f64,
    pub max_subdiv: usize,
}

impl ContourSpec {
    pub fn new(a: f64, v_max: f64, rel_tol: f64, max_subdiv: usize) -> Result<Self> {
        if !(a > 0.0 && a < 0.5) || !(v_max > 0.0) {
            return Err(Error::Precondition(format!("contour needs 0 < a < 1/2 and vMax > 0, got a={a}, vMax={v_max}")));
        }
        Ok(Self { a, v_max, rel_tol, max_subdiv })
    }
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self { a: 0.25, v_max: 1e4, rel_tol: 1e-11, max_subdiv: 4000 }
    }
}

/// (1/2πi)∫_ℓ f(λ)dλ with ℓ oriented so that a simple pole μ to the right of the line
/// contributes +Res_μ f. `decay` is the polynomial decay exponent of |f| along the line
/// (must exceed 1); `scale` is a characteristic height for the first panel.
pub fn quad_vertical_line(f: &dyn Fn(C64) -> C64, spec: &ContourSpec, decay: f64, scale: f64) -> Result<QuadResult> {
    if decay <= 1.0 {
        return Err(Error::Precondition(format!("decay exponent {decay} must exceed 1")));
    }
    let a = spec.a;
    let g = |v: f64| f(C64::new(a, v)) + f(C64::new(a, -v));
    let breaks = geometric_breaks((scale / 8.0).max(1e-3), spec.v_max);
    let opts = QuadOpts { rel_tol: spec.rel_tol, abs_tol: 1e-300, max_subdiv: spec.max_subdiv };
    let inner = integrate_breaks(&g, &breaks, opts)?;
    let v = spec.v_max;
    let cst = f(C64::new(a, v)).norm().max(f(C64::new(a, -v)).norm()) * v.powf(decay);
    let tail = 2.0 * cst * v.powf(1.0 - decay) / (decay - 1.0);
    let value = inner.value * (-1.0 / (2.0 * PI));
    let scale_abs = value.norm();
    let tail_scaled = tail / (2.0 * PI);
    if tail_scaled > spec.rel_tol * scale_abs && tail_scaled > 1e-300 {
        let ratio = tail_scaled / (spec.rel_tol * scale_abs).max(1e-300);
        let suggested = v * ratio.powf(1.0 / (decay - 1.0)) * 1.5;
        return Err(Error::LineTruncation { tail: tail_scaled, suggested });
    }
    Ok(QuadResult { value, error: inner.error / (2.0 * PI) + tail_scaled })
}

/// Like [`quad_vertical_line`] but grows vMax along the suggested values.
pub fn quad_vertical_line_auto(f: &dyn Fn(C64) -> C64, spec: &ContourSpec, decay: f64, scale: f64) -> Result<QuadResult> {
    let mut s = *spec;
    for _ in 0..8 {
        match quad_vertical_line(f, &s, decay, scale) {
            Err(Error::LineTruncation { suggested, .. }) if suggested.is_finite() => s.v_max = suggested.max(2.0 * s.v_max),
            other => return other,
        }
    }
    quad_vertical_line(f, &s, decay, scale)
}

/// Fixed-transform variant: v = tan θ over θ ∈ (−π/2, π/2); no truncation.
pub fn quad_vertical_line_tan(f: &dyn Fn(C64) -> C64, a: f64, opts: QuadOpts) -> Result<QuadResult> {
    let g = |th: f64| {
        let (s, c) = th.sin_cos();
        if c.abs() < 1e-300 {
            return C64::new(0.0, 0.0);
        }
        let v = s / c;
        let jac = 1.0 / (c * c);
        let out = (f(C64::new(a, v)) + f(C64::new(a, -v))) * jac;
        if out.re.is_finite() && out.im.is_finite() {
            out
        } else {
            C64::new(0.0, 0.0)
        }
    };
    let r = integrate(&g, 0.0, 0.5 * PI, opts)?;
    Ok(QuadResult { value: r.value * (-1.0 / (2.0 * PI)), error: r.error / (2.0 * PI) })
}

#[derive(Clone, Copy, Debug)]
pub struct HalfLineOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub s_max: f64,
    pub first: f64,
    pub max_subdiv: usize,
}

impl Default for HalfLineOpts {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-300, s_max: 1e15, first: 1.0, max_subdiv: 400 }
    }
}

/// ∫₀^∞ g(s)ds: panels [0,h],[h,2h],[2h,4h],… until tail(S) ≤ relTol·|partial|.
pub fn quad_half_line(g: &dyn Fn(f64) -> C64, tail: &dyn Fn(f64) -> f64, opts: HalfLineOpts) -> Result<QuadResult> {
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let (mut lo, mut hi) = (0.0, opts.first);
    loop {
        let po = QuadOpts { rel_tol: opts.rel_tol, abs_tol: (0.1 * opts.rel_tol * total.norm()).max(opts.abs_tol), max_subdiv: opts.max_subdiv };
        let r = integrate(g, lo, hi, po)?;
        total += r.value;
        err += r.error;
        let t = tail(hi);
        if t <= opts.rel_tol * total.norm() || t <= opts.abs_tol {
            return Ok(QuadResult { value: total, error: err + t });
        }
        if hi >= opts.s_max {
            return Err(Error::HalfLineTail { tail: t, s: hi });
        }
        lo = hi;
        hi *= 2.0;
    }
}
