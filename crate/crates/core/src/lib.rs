//! Differential-privacy accounting engine.
//!
//! The privacy loss distribution (PLD) is the common currency: mechanisms map
//! to distributions over the log likelihood ratio, composition is convolution,
//! and every headline guarantee (approximate DP, zCDP, RDP) is a functional of
//! the PLD. Modules:
//!
//! - [`types`]: guarantee records and the discrete PLD/distribution types
//! - [`mechanism`]: mechanism descriptions and their JSON wire format
//! - [`pld`]: PLD construction, convolution, and hockey-stick functionals
//! - [`gaussian`]: closed forms for the Gaussian mechanism
//! - [`accountant`]: zCDP and RDP bookkeeping and conversions to approximate DP
//! - [`composition`]: basic, advanced, and exact homogeneous composition
//! - [`curves`]: assembled bound-comparison datasets served by the CLI
//! - [`subsample`]: privacy amplification by Poisson subsampling
//! - [`attack`]: fingerprinting lower-bound simulator
//! - [`mc`]: Monte-Carlo estimators used as independent cross-checks
//! - [`selftest`]: randomized property suite shared by the CLI and tests

pub mod accountant;
pub mod attack;
pub mod composition;
pub mod curves;
pub mod error;
pub mod gaussian;
pub mod mc;
pub mod mechanism;
pub mod numeric;
pub mod pld;
pub mod selftest;
pub mod subsample;
pub mod types;

pub use error::{Error, Result};
pub use mechanism::MechanismSpec;
pub use types::{DiscreteDist, DiscretePld, EpsDelta, Neighbouring, RdpCurve, ZcdpBound};
