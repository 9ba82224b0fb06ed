//! Numerical core for temporal-graph traffic forecasting.
//!
//! Everything in this crate is pure computation over in-memory buffers and
//! builds without `std` (an allocator is required). File formats, threading
//! and the command line live in the companion `tgcn` crate.
//!
//! The pipeline is:
//!
//! 1. [`series`]: speed matrices, chronological splits, z-score scaling and
//!    supervised windows.
//! 2. [`dtw`]: dynamic time warping between daily road profiles and the
//!    all-pairs distance matrix.
//! 3. [`graph`]: top-k temporal adjacency (or a Gaussian-kernel spatial one),
//!    the scaled Laplacian and Chebyshev filtering.
//! 4. [`nn`] and [`model`]: the 3D graph convolution layers with gated linear
//!    units, the full network, reverse-mode gradients and Adam training.
//! 5. [`metrics`]: MAE / MAPE / RMSE and the historical-average baseline.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod array;
pub mod dtw;
pub mod error;
pub mod exec;
pub mod gradcheck;
pub mod graph;
pub mod math;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod series;

pub use array::DenseArray;
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
