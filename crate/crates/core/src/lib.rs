//! Exact strong simulation of linear optical circuits.
//!
//! Output amplitudes of an `n`-photon, `m`-mode interferometer are the
//! `n`-th order partial derivatives of the polynomial
//! `P(x) = prod_j (sum_i u_ij x_i)`. The [`traversal`] module walks the
//! lattice of these derivatives depth first while keeping a single vector of
//! `2^n` coefficients, which is enough to produce every output amplitude in
//! turn.
//!
//! Around that engine the crate provides:
//!
//! - [`permanent`]: Ryser/Glynn permanents and a per-amplitude oracle.
//! - [`slos`]: full and masked polynomial expansion baselines.
//! - [`steiner`]: traversal plans on the partition lattice that skip
//!   redundant interior nodes.
//! - [`adaptive`]: feedforward simulation keyed by measurement outcomes.
//! - [`noise`]: uniform loss, distinguishable groups and doubled emission.
//! - [`costmodel`]: exact operation and memory counts for every method.
//!
//! # Quick start
//!
//! ```
//! use loslap::{haar_random_unitary, traversal::iterate_amplitudes};
//!
//! let u = haar_random_unitary(4, 7).truncate_columns(2).unwrap();
//! let total: f64 = iterate_amplitudes(&u)
//!     .unwrap()
//!     .map(|(_, a)| a.norm_sqr())
//!     .sum();
//! assert!((total - 1.0).abs() < 1e-10);
//! ```

pub mod adaptive;
pub mod bits;
pub mod combinatorics;
pub mod costmodel;
mod error;
pub mod fock;
pub mod matrix;
pub mod noise;
pub mod permanent;
pub mod slos;
pub mod steiner;
pub mod traversal;

pub use error::{Error, Result};
pub use fock::{enumerate_fock_states, FockIndexer, FockState, ModeAssignment};
pub use matrix::{haar_random_unitary, InterferometerMatrix};

pub use num_complex::Complex64;

/// Bytes per stored complex coefficient (two `f64`s).
pub const COMPLEX_BYTES: u64 = 16;

/// Default refusal threshold for coefficient storage, 8 GiB.
pub const DEFAULT_MEMORY_CAP_BYTES: u64 = 8 << 30;
