//! Dense and sparse complex matrices.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::{Index, IndexMut};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for {rows}x{cols}", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let v: Vec<C64> = d.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&v)
    }

    /// Build from real rows (test convenience).
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "add: shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "sub: shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Product; zero entries of the left factor are skipped, so banded inputs stay cheap.
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "mul: inner dimension mismatch");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * o.cols..(i + 1) * o.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &o.data[k * o.cols..(k + 1) * o.cols];
                for (x, &b) in orow.iter_mut().zip(brow) {
                    *x += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn anticommutator(&self, o: &Self) -> Self {
        self.mul(o).add(&o.mul(self))
    }

    pub fn kron(&self, o: &Self) -> Self {
        let (r, c) = (self.rows * o.rows, self.cols * o.cols);
        Self::from_fn(r, c, |i, j| self[(i / o.rows, j / o.cols)] * o[(i % o.rows, j % o.cols)])
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.sub(o).max_abs() <= tol
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == ZERO))
    }

    /// Returns the scalar c when the matrix equals c·I within `tol` (absolute).
    pub fn scalar_multiple_of_identity(&self, tol: f64) -> Option<C64> {
        if !self.is_square() || self.rows == 0 {
            return None;
        }
        let c = self.trace() / self.rows as f64;
        let ok = (0..self.rows)
            .all(|i| (0..self.cols).all(|j| (self[(i, j)] - if i == j { c } else { ZERO }).norm() <= tol));
        ok.then_some(c)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Maximal absolute row sum; bounds the operator norm of Hermitian matrices.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let mut e = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let x = self[(i, j)];
                if x != ZERO {
                    e.push((i, j, x));
                }
            }
        }
        SparseMatrix { rows: self.rows, cols: self.cols, entries: e }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square complex matrix that is Hermitian by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Accepts `m` if it is Hermitian within 1e-12 relative to its largest entry, then symmetrises.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.rows, m.cols)));
        }
        let scale = m.max_abs().max(1.0);
        let n = m.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > 1e-12 * scale {
            return Err(Error::NotHermitian(worst));
        }
        let mut s = m;
        for i in 0..n {
            s[(i, i)] = C64::new(s[(i, i)].re, 0.0);
            for j in i + 1..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)].conj());
                s[(i, j)] = v;
                s[(j, i)] = v.conj();
            }
        }
        Ok(Self(s))
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diag(d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real combination aA + bB of Hermitian matrices.
    pub fn lincomb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        Self(x.0.scale_re(a).add(&y.0.scale_re(b)))
    }

    pub fn square(&self) -> Self {
        let p = self.0.mul(&self.0);
        Self::new(p).expect("square of Hermitian is Hermitian")
    }

    pub fn real_diag(&self) -> Vec<f64> {
        self.0.diag().iter().map(|x| x.re).collect()
    }
}

/// Coordinate-format sparse matrix, entries sorted row-major with no duplicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self { rows: n, cols: n, entries: (0..n).map(|i| (i, i, ONE)).collect() }
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let e = d.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, &x)| (i, i, C64::new(x, 0.0))).collect();
        Self { rows: d.len(), cols: d.len(), entries: e }
    }

    pub fn from_map(rows: usize, cols: usize, map: BTreeMap<(usize, usize), C64>) -> Self {
        let entries = map.into_iter().filter(|(_, v)| *v != ZERO).map(|((i, j), v)| (i, j, v)).collect();
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
        }
        m
    }

    fn to_map(&self) -> BTreeMap<(usize, usize), C64> {
        self.entries.iter().map(|&(i, j, v)| ((i, j), v)).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self.entries.binary_search_by(|e| (e.0, e.1).cmp(&(i, j))) {
            Ok(k) => self.entries[k].2,
            Err(_) => ZERO,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == ZERO {
            return Self::zeros(self.rows, self.cols);
        }
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * s)).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "sparse add: shape mismatch");
        let mut m = self.to_map();
        for &(i, j, v) in &o.entries {
            *m.entry((i, j)).or_insert(ZERO) += v;
        }
        Self::from_map(self.rows, self.cols, m)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale_re(-1.0))
    }

    pub fn adjoint(&self) -> Self {
        let m = self.entries.iter().map(|&(i, j, v)| ((j, i), v.conj())).collect();
        Self::from_map(self.cols, self.rows, m)
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "sparse mul: inner dimension mismatch");
        let mut starts = vec![0usize; o.rows + 1];
        for &(i, _, _) in &o.entries {
            starts[i + 1] += 1;
        }
        for i in 0..o.rows {
            starts[i + 1] += starts[i];
        }
        let mut m: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for &(i, k, a) in &self.entries {
            for &(_, j, b) in &o.entries[starts[k]..starts[k + 1]] {
                *m.entry((i, j)).or_insert(ZERO) += a * b;
            }
        }
        Self::from_map(self.rows, o.cols, m)
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn anticommutator(&self, o: &Self) -> Self {
        self.mul(o).add(&o.mul(self))
    }

    pub fn kron(&self, o: &Self) -> Self {
        let mut m = BTreeMap::new();
        for &(i, j, a) in &self.entries {
            for &(k, l, b) in &o.entries {
                m.insert((i * o.rows + k, j * o.cols + l), a * b);
            }
        }
        Self::from_map(self.rows * o.rows, self.cols * o.cols, m)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, o: &Self, tol: f64) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.sub(o).max_abs() <= tol
    }

    pub fn trace(&self) -> C64 {
        self.entries.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum()
    }

    pub fn max_row_sum(&self) -> f64 {
        let mut s = vec![0.0; self.rows];
        for &(i, _, v) in &self.entries {
            s[i] += v.norm();
        }
        s.into_iter().fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && self.sub(&self.adjoint()).max_abs() <= tol
    }
}

impl From<&ComplexMatrix> for SparseMatrix {
    fn from(m: &ComplexMatrix) -> Self {
        m.to_sparse()
    }
}

/// Solve A X = B by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::Dimension("solve".into()));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let nc = b.cols();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (p, best) = (k..n).map(|i| (i, lu[(i, k)].norm())).fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if best <= 1e-300 * scale || best == 0.0 {
            return Err(Error::Singular);
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..nc {
                let t = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = t;
            }
        }
        let piv = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / piv;
            if f == ZERO {
                continue;
            }
            lu[(i, k)] = f;
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..nc {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for j in 0..nc {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    solve(a, &ComplexMatrix::identity(a.rows()))
}

/// Hermitian inner product ⟨x, y⟩ = Σ conj(x_i) y_i.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}
