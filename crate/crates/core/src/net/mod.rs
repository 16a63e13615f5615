//! SDOAnet: a fully connected input layer, `M_C` blocks of same-padded 1-D
//! convolution, batch normalization and ReLU, and a fully connected output
//! layer. The `2N` outputs form a complex vector `z` whose spatial spectrum
//! `|a^H(ζ) z|²` is regressed onto Gaussian bumps at the true DOAs.
//!
//! Shapes for a batch of `B` rows:
//!
//! ```text
//! B×2N --fc_in--> B×(M_F·M_I) = B×M_F×M_I --[conv, BN, ReLU]×M_C--> B×M_F×M_I --fc_out--> B×2N
//! ```
//!
//! Gradients are written out by hand for exactly this architecture.

mod adam;
mod backward;
mod forward;
mod io;
mod params;
mod train;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::Snapshot;
use crate::error::{dims, invalid, Result};
use crate::spectrum::{eval_spectrum, find_peaks, ula_positions, AngleGrid, DoaEstimate, Spectrum};

pub use adam::{adam_step, AdamState};
pub use backward::{
    backward, batch_loss, loss_and_grad, spectrum_loss_grad, LossContext, LossGrad,
};
pub use forward::{forward, BlockCache, ForwardCache, Mode};
pub use io::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use params::{init_params, ConvBlock, Dense, NetworkParams};
pub use train::{train, train_with, DataConfig, DataMode, EpochRecord, BN_MOMENTUM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub n_antennas: usize,
    pub n_filters: usize,
    pub inner_dim: usize,
    pub n_conv_layers: usize,
    pub kernel_size: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub bn_epsilon: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            n_antennas: 16,
            n_filters: 2,
            inner_dim: 32,
            n_conv_layers: 6,
            kernel_size: 3,
            batch_size: 64,
            learning_rate: 5e-4,
            bn_epsilon: 1e-5,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let ints = [
            self.n_antennas,
            self.n_filters,
            self.inner_dim,
            self.n_conv_layers,
            self.kernel_size,
            self.batch_size,
        ];
        if ints.contains(&0) {
            return Err(invalid("network dimensions must be positive"));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(invalid("kernel size must be odd"));
        }
        if self.kernel_size > 2 * self.inner_dim + 1 {
            return Err(invalid("kernel wider than the padded signal"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning rate must be finite and nonnegative"));
        }
        if !(self.bn_epsilon > 0.0 && self.bn_epsilon.is_finite()) {
            return Err(invalid("bn_epsilon must be positive"));
        }
        Ok(())
    }
}

/// `[Re r; Im r]`.
pub fn stack(r: &[Complex64]) -> Vec<f64> {
    r.iter()
        .map(|z| z.re)
        .chain(r.iter().map(|z| z.im))
        .collect()
}

/// `g[0:N] + j·g[N:2N]`.
pub fn to_complex(g: &[f64]) -> Result<Vec<Complex64>> {
    if !g.len().is_multiple_of(2) {
        return Err(dims(format!("odd output length {}", g.len())));
    }
    let n = g.len() / 2;
    Ok((0..n).map(|i| Complex64::new(g[i], g[n + i])).collect())
}

/// Row-major `B × 2N` input matrix for a batch of snapshots.
pub fn stack_batch(batch: &[Snapshot], n_antennas: usize) -> Result<Vec<f64>> {
    let mut y = Vec::with_capacity(batch.len() * 2 * n_antennas);
    for s in batch {
        if s.n_antennas() != n_antennas {
            return Err(dims(format!(
                "snapshot has {} antennas, network expects {n_antennas}",
                s.n_antennas()
            )));
        }
        y.extend(stack(&s.received));
    }
    Ok(y)
}

/// Network output `z` for one snapshot, eval mode.
pub fn infer(params: &NetworkParams, r: &Snapshot) -> Result<Vec<Complex64>> {
    let y = stack_batch(std::slice::from_ref(r), params.cfg.n_antennas)?;
    let (g, _) = forward(params, &y, Mode::Eval)?;
    to_complex(&g)
}

/// Spatial spectrum of the network output and its `k` strongest peaks.
pub fn estimate(
    params: &NetworkParams,
    r: &Snapshot,
    grid: &AngleGrid,
    k: usize,
    min_separation_deg: f64,
) -> Result<(Spectrum, DoaEstimate)> {
    let z = infer(params, r)?;
    let spec = eval_spectrum(&z, grid, &ula_positions(params.cfg.n_antennas))?;
    let est = find_peaks(&spec, k, min_separation_deg)?;
    Ok((spec, est))
}
