//! Perron-Frobenius eigenvectors of primitive matrices from stopped branching
//! processes.
//!
//! For a primitive matrix `A` with Perron eigenvalue `lambda`, the normalized
//! left eigenvector satisfies `u(i) = 1 / D_i`, where `D_i` is the expected
//! `lambda`-discounted size of a Galton-Watson population started from one
//! type-`i` individual in which type-`i` descendants never reproduce. The
//! continuous-time analogue replaces the discount by `e^{-(lambda-1)t}`.
//!
//! The crate provides the deterministic evaluators ([`evaluate`]), the
//! simulators ([`gw`], [`ct`]) and the Monte Carlo estimators ([`estimator`]),
//! together with a power-iteration oracle ([`perron`]).

pub mod ct;
pub mod error;
pub mod estimator;
pub mod evaluate;
pub mod gw;
pub mod io;
pub mod law;
pub mod linalg;
pub mod matrix;
pub mod perron;
pub mod stream;

pub use error::{Error, Result};
pub use evaluate::{path_sum_check, resolvent_vector, series_vector, TruncationPlan};
pub use law::{LawKind, OffspringLaw, Population};
pub use matrix::{random_primitive, validate_primitive, NonNegativeMatrix, PrimitivityReport};
pub use perron::{perron_pair, stationary_markov, stopped_matrix, PerronPair, StoppedMatrix};
