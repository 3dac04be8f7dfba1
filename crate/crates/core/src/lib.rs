//! Cost of cutting down random very simple trees.
//!
//! The crate covers the whole pipeline for the edge-cutting process on
//! Cayley, d-ary and generalized plane trees with toll `t_n = n^α`:
//! weighted counts and splitting probabilities, exact moment recurrences
//! for one- and two-sided destruction, the limiting moments in every toll
//! regime, Monte Carlo engines, and the fits that connect finite-size
//! moments to the limits.

pub mod analysis;
pub mod counts;
pub mod error;
pub mod family;
pub mod limit_laws;
pub mod moments;
pub mod oracle;
pub mod quadrature;
pub mod rational;
pub mod simulator;
pub mod special;
pub mod summation;
pub mod verify;

pub use error::{Error, Result};
pub use family::{FamilyConstants, FamilyKind, FamilySpec};
