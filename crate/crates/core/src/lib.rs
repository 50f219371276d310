//! # ndsense
//!
//! Exact minimum-cost analysis of pixelated image sensing through lossy
//! phase-shifting channels.
//!
//! A scene is a finite set of hypotheses ("images"), each described pixel by
//! pixel as a beam splitter with transmittance `eta` and phase shift `theta`.
//! A probe state occupies a finite number of signal modes, possibly entangled
//! with idler modes that are retained losslessly. The receiver measures the
//! returned and idler modes jointly and pays a cost depending on the true
//! hypothesis and the measurement outcome.
//!
//! The crate computes, for any such problem:
//!
//! - the minimum error probability attainable by a number-diagonal signal
//!   (NDS) probe with a given photon-number distribution, assembled exactly
//!   from per-leak-pattern Gram matrices ([`gram`]);
//! - the same quantity by brute force, via an explicit Fock-space density
//!   matrix simulation ([`oracle`]), used as an independent cross-check;
//! - closed forms for binary 0-vs-pi phase discrimination with at most two
//!   photons ([`phase`]);
//! - optimal photon-number distributions under energy constraints
//!   ([`optimize`]).
//!
//! All sums are exact and finite: distributions carry explicit finite support
//! and every photon cutoff is derived from that support. Values are immutable
//! after construction and every operation is pure, so everything here is safe
//! to call from multiple threads.

#![forbid(unsafe_code)]

pub mod decision;
pub mod fmt;
pub mod fock;
pub mod gram;
mod linalg;
pub mod optimize;
pub mod oracle;
pub mod phase;
pub mod scene;
pub mod verify;

pub use decision::{Ensemble, Povm};
pub use fock::{ModeLayout, ModePattern, PhotonPmf};
pub use gram::SubEnsembleGram;
pub use oracle::{DensityMatrix, PureInputState};
pub use phase::TrianglePoint;
pub use scene::{CostFunction, Image, Pixel, SceneSpec};

use thiserror::Error;

/// Errors surfaced by state construction and the numerical operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("pattern has {got} modes but the layout has {expected}")]
    PatternLengthMismatch { expected: usize, got: usize },

    #[error("probabilities sum to {0}, outside the 1e-12 normalization tolerance")]
    NotNormalized(f64),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("duplicate pattern in support")]
    DuplicatePattern,

    #[error("leak pattern exceeds the photon pattern componentwise")]
    LeakExceedsPattern,

    #[error("leak pattern has zero weight; conditional quantities are undefined")]
    DegenerateLeakPattern,

    #[error("operation supports {expected} hypotheses, scene has {got}")]
    UnsupportedArity { expected: usize, got: usize },

    #[error("scene is not lossless: pixel with eta = {0} < 1")]
    NotLossless(f64),

    #[error("matrix is not positive semidefinite: min eigenvalue {0}")]
    NotPsd(f64),

    #[error("matrix is not Hermitian within tolerance (deviation {0})")]
    NotHermitian(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("mean-energy constraint alone does not bound the support; add a peak cap")]
    UnboundedSupport,

    #[error("claimed property failed verification: {0}")]
    VerificationFailed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Normalization tolerance applied to probability vectors on construction.
pub const PROB_TOL: f64 = 1e-12;
