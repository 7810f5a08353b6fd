//! Simulation and numerical verification of hybrid classical-quantum
//! systems.
//!
//! A hybrid state assigns a positive operator to each cell of a discrete
//! classical space ([`state::HybridState`]); hybrid operations move quantum
//! content between cells through Kraus blocks ([`channel::HybridChannel`]).
//! On top of these sit classical-quantum correlation measures
//! ([`correlations`]), LOCC protocols written as sequences of hybrid
//! operations ([`locc`]), JSON file formats ([`io`]) and randomized property
//! suites ([`properties`]).

// NaN must fail tolerance checks, hence `!(x <= tol)` throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod classical;
pub mod correlations;
pub mod error;
pub mod io;
pub mod locc;
pub mod operator;
pub mod properties;
pub mod random;
pub mod state;

pub use channel::{compose, non_interacting, random_channel, HybridChannel, KrausBlock};
pub use classical::{ClassicalSpace, MarkovKernel};
pub use error::{Error, Result};
pub use operator::{CMatrix, C64};
pub use state::{random_state, Effect, HybridState};
