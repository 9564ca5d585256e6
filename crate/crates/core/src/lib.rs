//! Baseband OFDM powerline receiver simulator with sparse Bayesian learning
//! (SBL) impulsive-noise cancellation.
//!
//! Numerical code is generic over the [`Real`] scalar (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, which is what the Monte-Carlo
//! harness uses.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fec;
pub mod harness;
pub mod noise;
pub mod ofdm;
pub mod numerics;
pub mod sbl;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type ComplexVector = numerics::ComplexVector<f64>;
pub type ComplexMatrix = numerics::ComplexMatrix<f64>;
pub type ComplexVector32 = numerics::ComplexVector<f32>;
pub type ComplexMatrix32 = numerics::ComplexMatrix<f32>;
