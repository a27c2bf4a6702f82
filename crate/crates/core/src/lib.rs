//! Hidden binary channel discrimination (HBCD).
//!
//! A two-qubit model in which an unknown x-rotation `e^{iθσx}`, with `θ ∈ {0, α}`,
//! acts on a hidden qubit that can only be probed through a controllable
//! measurement qubit. The crate provides:
//!
//! * [`qcore`]: dense complex linear algebra for the 2- and 4-dimensional
//!   state spaces (tensor products, conjugation, partial trace, norms, eigensolvers).
//! * [`query`]: the query unitary `Q(ψ, φ)`, query sequences and the
//!   diagonalizing four-query block.
//! * [`protocols`]: exact outcome distributions for sequential and multi-shot
//!   protocols, seeded shot sampling, and the depth-1 parallel invariance check.
//! * [`estimators`]: majority vote, likelihood-ratio decisions, exact Bayes
//!   error over the binomial sufficient statistic, operating characteristics.
//! * [`phaseopt`]: the phase-sequence loss, L-BFGS multi-restart optimization and
//!   the minimal sequential query search.
//! * [`analytic`]: perfect discrimination, query lower bounds, Helstrom and
//!   noisy-query error bounds, cavity cooperativity relations.
//! * [`harness`]: experiment drivers producing the scaling, operating
//!   characteristic, Monte-Carlo and noise tables.

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod phaseopt;
pub mod protocols;
pub mod qcore;
pub mod query;
pub mod rng;

mod polish;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
