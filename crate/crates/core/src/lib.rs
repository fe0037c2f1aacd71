//! Simulation, exact small-horizon oracles and uniqueness/mixing diagnostics
//! for chains of infinite order on finite alphabets.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the tests and
//! the command-line runner use.

// Negated comparisons reject NaN parameters on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alphabet;
pub mod coupling;
pub mod criteria;
pub mod diagnostics;
mod error;
pub mod kernel;
pub mod models;
pub mod oracle;
pub mod parallel;
pub mod past;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod sim;
pub mod special;

pub use alphabet::{Alphabet, Symbol};
pub use error::Error;
pub use kernel::{Bound, Cursor, Estimate, Kernel};
pub use past::{History, Past};
pub use rng::RngStream;
pub use scalar::Scalar;
pub use series::{SeriesClassification, TailCertificate, Verdict};

pub type ArKernel64 = models::ArKernel<f64>;
pub type BkfKernel64 = models::BkfKernel<f64>;
pub type RenewalKernel64 = models::RenewalKernel<f64>;
pub type FiniteMemoryKernel64 = models::FiniteMemoryKernel<f64>;
pub type ModelSpec64 = models::ModelSpec<f64>;
pub type DynKernel64 = Box<dyn Kernel<f64>>;
