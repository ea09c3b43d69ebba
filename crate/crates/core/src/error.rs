use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("function undefined at eigenvalue {0}")]
    Domain(f64),
    #[error("line truncation too small: tail bound {tail:.3e} exceeds tolerance; try vMax >= {suggested:.3e}")]
    LineTruncation { tail: f64, suggested: f64 },
    #[error("half-line tail never fell below tolerance (last tail {tail:.3e} at S = {s:.3e})")]
    HalfLineTail { tail: f64, s: f64 },
    #[error("quadrature did not reach tolerance (estimate {estimate:.3e})")]
    Quadrature { estimate: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("pole of {0}")]
    Pole(String),
    #[error("singular matrix")]
    Singular,
    #[error("precision: singular value {0:.3e} lies in the kernel dead zone [1e-8, 1e-4]")]
    DeadZone(f64),
    #[error("crossing count did not stabilise: candidates {0} and {1}")]
    Unstable(f64, f64),
    #[error("zeta continuation needs more binomial terms (K >= {0})")]
    ZetaTerms(usize),
    #[error("residue extraction did not converge: {0}")]
    Residue(String),
    #[error("unknown name: {0}")]
    Unknown(String),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
