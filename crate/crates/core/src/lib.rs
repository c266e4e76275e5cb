//! Numerical toolkit for Lipschitz properties of disk maps with respect to
//! the distance ratio metric.
//!
//! - [`specfun`]: Pochhammer symbols and the Gauss hypergeometric function.
//! - [`metrics`]: the distance ratio metric, disk automorphisms and seeded pair sweeps.
//! - [`alphaharmonic`]: solutions of the weighted Laplace-type equation `T_α f = 0`
//!   built from hypergeometric expansions, and the coefficient condition that
//!   is claimed to make them `j`-contractions.
//! - [`quasiconformal`]: finite-difference Wirtinger calculus and pointwise
//!   certificates for `(K, K')`-quasiregularity and Poisson-type inequalities.
//! - [`maps`]: the registry of built-in maps addressable by name.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alphaharmonic;
pub mod error;
pub mod maps;
pub mod metrics;
pub mod quasiconformal;
pub mod report;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;
