//! Compound distributions on the nonnegative integers.
//!
//! The crate builds compound Bernoulli, binomial and Poisson laws from a
//! compounding distribution `Q` on `{1, 2, ...}`, measures their entropy, and
//! checks the log-concavity conditions under which the compound Poisson and
//! compound binomial laws maximise entropy. The [`semigroup`] module holds
//! the thinning flow and energy functionals used to verify those claims
//! numerically, and [`maxent`] runs the sweeps.
//!
//! ```
//! use cpent::compound::compound_poisson;
//! use cpent::dist::{entropy, CompoundingDist};
//!
//! let q = CompoundingDist::uniform(1, 2).unwrap();
//! let cpo = compound_poisson(0.01, &q, 1e-12).unwrap();
//! assert!(entropy(&cpo) > 0.0);
//! ```

#![forbid(unsafe_code)]

pub mod compound;
pub mod concavity;
pub mod dist;
mod error;
pub mod maxent;
pub mod random;
pub mod semigroup;

pub use error::{Error, Result};
