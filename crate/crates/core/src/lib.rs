//! Exact-arithmetic toolkit for a renorming of c₀ whose finite-codimension
//! subspaces fail to be proximinal.
//!
//! The norm is `‖x‖ = ‖x‖₀ + Σ_k 2^{-a_k²} |⟨x, u_k − e_{a_k}⟩|`, where
//! `(u_k)` lists every finitely supported rational sequence infinitely often
//! and `(a_k)` grows fast enough for the series to converge. The crate
//! evaluates that norm and its one-sided directional derivatives with exact
//! rational enclosures, checks the approximate linearity of the derivative on
//! sparse index sets, and emits re-checkable certificates of strict norm
//! decrease inside a coset `x + H`.
//!
//! The sparse-vector and linear-algebra layers ([`sparse`], [`linalg`]) are
//! generic over [`Scalar`]; everything that certifies uses [`Rational`].

pub mod approx;
pub mod config;
pub mod construction;
pub mod demo;
pub mod descent;
pub mod error;
pub mod gateaux;
pub mod interval;
pub mod linalg;
pub mod norm;
pub mod scalar;
pub mod series;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
pub use sparse::{Sign, SparseVec};

/// Finitely supported exact rational sequence.
pub type SparseRationalVec = SparseVec<Rational>;
/// Same sequence over `f64`, for quick non-certified experiments.
pub type SparseF64Vec = SparseVec<f64>;
/// Linear system over exact rationals.
pub type RationalSystem = linalg::LinearSystem<Rational>;

pub use construction::{ConstructionParams, ConstructionTable};
pub use gateaux::{d_minus_read_norm, d_plus_read_norm, DerivativeEnclosure, SignStatus};
pub use norm::{read_norm, Enclosure, NormOrder};
pub use approx::ApproxLinearityReport;
pub use config::Config;
pub use descent::{Chain, DescentCertificate, Subspace};
