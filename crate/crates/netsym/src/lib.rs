//! Coupled-cell networks with hidden symmetry.
//!
//! The pipeline: a homogeneous network given by its input maps is completed
//! to a monoid, the fundamental network and its monoid representation are
//! constructed, the representation is decomposed into indecomposables over
//! the reals, and generic codimension-one synchrony-breaking steady-state
//! bifurcations are classified per indecomposable summand and checked
//! numerically against the nonlinear dynamics.

pub mod bifurcation;
pub mod dsl;
pub mod error;
pub mod network;
pub mod rat;
pub mod repalg;
pub mod simulator;
pub mod symbolic;
pub mod synchrony;

pub use error::{NetsymError, Result};
