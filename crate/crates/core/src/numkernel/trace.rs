use super::eigen::eigh_sparse;
use super::matrix::{ComplexMatrix, HermitianMatrix, C64};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Diagonal weights of a faithful weighted trace τ(X) = Σ w_i X_ii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceWeights(Vec<f64>);

impl TraceWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(x) = w.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::Precondition(format!("trace weight {x} is not a finite nonnegative number")));
        }
        Ok(Self(w))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x * s).collect())
    }

    pub fn concat(&self, o: &Self) -> Self {
        Self(self.0.iter().chain(&o.0).copied().collect())
    }

    /// ⟨x, W x⟩.
    pub fn expectation(&self, x: &[C64]) -> f64 {
        x.iter().zip(&self.0).map(|(v, w)| w * v.norm_sqr()).sum()
    }

    pub fn as_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diag(&self.0)
    }
}

pub fn trace_tau(x: &ComplexMatrix, w: &TraceWeights) -> Result<C64> {
    if !x.is_square() || x.rows() != w.len() {
        return Err(Error::Dimension(format!("trace of {}x{} with {} weights", x.rows(), x.cols(), w.len())));
    }
    Ok(x.diag().iter().zip(w.as_slice()).map(|(d, wi)| d * wi).sum())
}

/// ‖X‖₁ = τ(|X|), |X| = (X*X)^{1/2}.
pub fn trace_norm(x: &ComplexMatrix, w: &TraceWeights) -> Result<f64> {
    if x.cols() != w.len() {
        return Err(Error::Dimension("trace norm weights".into()));
    }
    let g = HermitianMatrix::new(x.adjoint().mul(x))?;
    let absx = eigh_sparse(&g.matrix().to_sparse())?.apply_fn(|l| Ok(C64::new(l.max(0.0).sqrt(), 0.0)))?;
    Ok(w.as_slice().iter().enumerate().map(|(i, wi)| wi * absx.get(i, i).re).sum())
}

/// f(H) = V diag(f(λ)) V*.
pub fn func_calc(h: &HermitianMatrix, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
    let spec = eigh_sparse(&h.matrix().to_sparse())?;
    let out = spec.apply_fn(|l| {
        let v = f(l);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(l))
        }
    })?;
    Ok(out.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::matrix::{c, re};

    #[test]
    fn weighted_identity_trace() {
        let w = TraceWeights::new(vec![1.0, 0.5]).unwrap();
        assert_eq!(trace_tau(&ComplexMatrix::identity(2), &w).unwrap(), re(1.5));
        assert_eq!(trace_tau(&ComplexMatrix::identity(4), &TraceWeights::uniform(4)).unwrap(), re(4.0));
    }

    #[test]
    fn trace_norm_examples() {
        let d = ComplexMatrix::from_real_diag(&[3.0, -4.0]);
        assert!((trace_norm(&d, &TraceWeights::uniform(2)).unwrap() - 7.0).abs() < 1e-12);
        let w = TraceWeights::new(vec![1.0, 0.5]).unwrap();
        assert!((trace_norm(&d, &w).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3), &TraceWeights::uniform(3)).unwrap(), 0.0);
    }

    #[test]
    fn nilpotent_has_zero_trace() {
        let n = ComplexMatrix::from_fn(3, 3, |i, j| if j > i { c(1.0, 2.0) } else { re(0.0) });
        let w = TraceWeights::new(vec![0.3, 2.0, 1.0]).unwrap();
        assert_eq!(trace_tau(&n, &w).unwrap(), re(0.0));
    }

    #[test]
    fn func_calc_examples() {
        let h = HermitianMatrix::from_real_diag(&[0.0, 1.0, 2.0]);
        let f = func_calc(&h, |x| re((1.0 + x * x).powf(-1.5))).unwrap();
        let expect = ComplexMatrix::from_real_diag(&[1.0, 2f64.powf(-1.5), 5f64.powf(-1.5)]);
        assert!(f.approx_eq(&expect, 1e-15));
        let g = func_calc(&HermitianMatrix::from_real_diag(&[0.0]), |x| re((1.0 + x * x).powf(-0.5))).unwrap();
        assert_eq!(g[(0, 0)], re(1.0));
    }

    #[test]
    fn func_calc_domain_error_names_eigenvalue() {
        let h = HermitianMatrix::from_real_diag(&[0.0, 1.0]);
        let e = func_calc(&h, |x| re(1.0 / x)).unwrap_err();
        assert_eq!(e, Error::Domain(0.0));
    }
}
