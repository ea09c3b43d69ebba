//! Spectral flow for finite spectral triples: crossing counts, Toeplitz index,
//! integral formulas, the doubled construction, the resolvent and residue cocycles,
//! and the cyclic (b, B) machinery they rest on.

pub mod constants;
pub mod cyclic;
pub mod error;
pub mod flow;
pub mod ncexpand;
pub mod numkernel;
pub mod resolvent;
pub mod triples;
pub mod zeta;

pub use error::{Error, Result};
