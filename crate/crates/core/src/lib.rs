//! Stochastic moving-ball approximation for convex problems with many smooth
//! functional constraints.
//!
//! The crate provides the problem oracles ([`problem`]), the ball geometry
//! behind the feasibility step ([`ball`]), the solver loop ([`solver`]), a
//! synthetic QCQP generator ([`qcqp_gen`]) and a multiple-kernel SVM pipeline
//! ([`mkl`]).

pub mod ball;
pub mod error;
pub mod mkl;
pub mod problem;
pub mod qcqp_gen;
pub mod solver;

pub use error::{Error, Result};
