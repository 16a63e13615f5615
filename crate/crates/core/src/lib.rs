//! Direction-of-arrival estimation for imperfect linear arrays.
//!
//! The crate simulates single snapshots from a uniform linear array whose
//! hardware suffers position offsets, inconsistent channel gains and phases,
//! mutual coupling and a saturating front end; it implements the classical
//! super-resolution baselines (beamformer, single-snapshot MUSIC, OMP and
//! atomic-norm denoising) and SDOAnet, a small convolutional network whose
//! length-N complex output `z` defines the spatial spectrum `|a^H(ζ) z|²`.
//!
//! Modules:
//! - [`array`]: geometry, imperfections, snapshot synthesis, datasets
//! - [`spectrum`]: grids, spectra, reference spectrum, peaks, RMSE
//! - [`numerics`]: complex eigensolver, SVD, PSD projection, least squares
//! - [`estimators`]: the classical baselines
//! - [`net`]: the network, its hand-written backward pass, Adam and training
//! - [`bench`]: experiment configuration and Monte-Carlo sweeps

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod array;
pub mod bench;
pub mod error;
pub mod estimators;
pub mod net;
pub mod numerics;
pub mod seed;
pub mod spectrum;

pub use error::{Error, Result};
