//! Cone-constrained ground states of supercritical elliptic problems on
//! domains of double and triple revolution.
//!
//! The crate reduces `-Δu + λu + V u = a(x) u^{p-1}` on an `O(m)×O(n)[×O(l)]`
//! invariant domain to a two (or three) variable problem in polar (spherical)
//! coordinates, discretizes it with a conservative cell-centered finite volume
//! scheme, and computes ground states restricted to convex cones of
//! nonnegative, angularly monotone, symmetric fields.
//!
//! Module map:
//!
//! - [`geometry`]: splits, domains, coordinate maps and exponent calculators
//! - [`discretize`]: grids, fields and weighted operators
//! - [`cones`]: cone membership and projection
//! - [`elliptic`]: linear solves and the pointwise invariance map
//! - [`groundstate`]: energy, Nehari rescaling, the constrained iteration
//! - [`spectra`]: Hardy constants and weighted angular eigenpairs
//! - [`symmetry`]: symmetry-breaking criterion, second variation, indices
//! - [`cli`]: the command line front end used by the `revsym` binary

pub mod cli;
pub mod cones;
pub mod discretize;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod groundstate;
pub mod io;
pub mod linalg;
pub mod spectra;
pub mod symmetry;

pub use error::{Error, Result};
