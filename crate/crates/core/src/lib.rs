//! Theta-constant quotients on the Siegel upper half-space.
//!
//! The crate is organized bottom-up:
//!
//! - [`characteristics`]: exact rational characteristic vectors and their `±` classes.
//! - [`symplectic`]: integral and mod-`N` similitude matrices, their actions, group tables.
//! - [`theta_num`]: theta constants by certified lattice sums and the quotients `Θ_v`.
//! - [`genus1`]: Siegel functions as q-products and the genus-one identities.
//! - [`orders_exact`]: exact vanishing-order signatures and the candidate analysis built on them.
//! - [`verify`]: the seeded verification suites behind the `siegel` binary.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod genus1;
pub mod orders_exact;
pub mod par;
pub mod symplectic;
pub mod theta_num;
pub mod verify;

pub use par::Exec;
