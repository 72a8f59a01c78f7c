//! Secret-key rates for one-way quantum key distribution.
//!
//! This crate computes provable lower and upper bounds on the asymptotic
//! secret-key rate of prepare-and-measure QKD protocols (six-state, BB84,
//! B92) under collective attacks, together with the finite-key machinery
//! (information reconciliation, privacy amplification, direct security
//! verification) needed to certify keys at small block lengths.
//!
//! The crate is organized into five modules:
//!
//! - [`qmat`]: dense complex linear algebra for small Hilbert spaces
//!   (Hermitian eigendecomposition, tensor products, partial traces,
//!   purification, trace distance, fidelity).
//! - [`entropy`]: Shannon / von Neumann entropies and smooth Rényi
//!   entropies of orders 0 and 2, including conditional variants and
//!   exact type-class evaluation for n-fold product spectra.
//! - [`states`]: the Bell-basis formalism, Bell-diagonal attack states,
//!   symmetrization twirls, Eve's conditional states, and per-protocol
//!   encoding operators and constraint families.
//! - [`keyrate`]: evaluation and optimization of the key-rate bounds and
//!   noise thresholds.
//! - [`finitekey`]: collective-attack sampling, parameter estimation,
//!   random-binning error correction, Toeplitz privacy amplification,
//!   finite key-length accounting, and direct security checks.
//!
//! All operations are pure functions of their inputs. Randomized routines
//! take an explicit 64-bit seed and are bit-reproducible.

pub mod entropy;
pub mod finitekey;
pub mod keyrate;
pub mod qmat;
pub mod states;

pub use qmat::{ComplexMatrix, DensityMatrix, PureState};

use thiserror::Error;

/// Errors produced by numerical and validation failures across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not Hermitian (max |M - M^dag| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace deviates from expected value by {deviation:e}")]
    BadTrace { deviation: f64 },

    #[error("state vector norm deviates from 1 by {deviation:e}")]
    BadNorm { deviation: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    EigNoConvergence { sweeps: usize, residual: f64 },

    #[error("Kraus set is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid probability value {value}")]
    BadProbability { value: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
