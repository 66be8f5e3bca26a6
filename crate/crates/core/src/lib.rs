//! Decision procedure for proper actions of free Zariski-dense subgroups on
//! reductive homogeneous spaces `G/H`, and explicit Schottky constructions
//! with numerical certificates.
//!
//! - [`chamber`]: root data, Weyl groups and the existence decision.
//! - [`cartan`]: Cartan and Lyapunov projections, margins and word balls.
//! - [`proximal`]: projective geometry and ε-proximality certificates.
//! - [`schottky`]: cone construction, power search and witness verification.

// negated float comparisons are used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cartan;
pub mod chamber;
pub mod error;
pub mod linalg;
pub mod proximal;
pub mod rational;
pub mod schottky;
pub mod seed;

pub use error::{Error, Result};
