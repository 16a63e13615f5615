use super::params::{ConvBlock, Dense, NetworkParams};
use crate::error::{dims, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; produces a cache for the backward pass.
    Train,
    /// Running statistics; pure.
    Eval,
}

/// Intermediates of one conv block for a batch, each laid out `[b][c][i]`.
#[derive(Debug, Clone)]
pub struct BlockCache {
    pub input: Vec<f64>,
    pub normalized: Vec<f64>,
    pub pre_activation: Vec<f64>,
    pub output: Vec<f64>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub mode: Mode,
    pub batch: usize,
    pub input: Vec<f64>,
    pub blocks: Vec<BlockCache>,
    /// Flattened output of the last block, `[b][c·M_I + i]`.
    pub features: Vec<f64>,
    pub output: Vec<f64>,
}

pub(crate) fn dense_forward(x: &[f64], rows: usize, d: &Dense) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * d.n_out);
    for r in 0..rows {
        out.extend_from_slice(&d.bias);
        let o = &mut out[r * d.n_out..];
        for (i, xi) in x[r * d.n_in..(r + 1) * d.n_in].iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (acc, w) in o.iter_mut().zip(&d.weight[i * d.n_out..(i + 1) * d.n_out]) {
                *acc += xi * w;
            }
        }
    }
    out
}

/// Same-padded cross-correlation over the length axis.
pub(crate) fn conv_forward(
    x: &[f64],
    batch: usize,
    ch: usize,
    len: usize,
    k: usize,
    blk: &ConvBlock,
) -> Vec<f64> {
    let pad = k / 2;
    let mut out = vec![0.0; batch * ch * len];
    for b in 0..batch {
        for o in 0..ch {
            let dst = &mut out[(b * ch + o) * len..(b * ch + o + 1) * len];
            dst.fill(blk.bias[o]);
            for f in 0..ch {
                let src = &x[(b * ch + f) * len..(b * ch + f + 1) * len];
                for t in 0..k {
                    let w = blk.weight[(o * ch + f) * k + t];
                    // dst[i] += w · src[i + t − pad] where in range
                    let lo = pad.saturating_sub(t);
                    let hi = (len + pad).saturating_sub(t).min(len);
                    for i in lo..hi {
                        dst[i] += w * src[i + t - pad];
                    }
                }
            }
        }
    }
    out
}

/// Mean and biased variance per channel over `(batch, length)`.
pub(crate) fn channel_stats(
    c: &[f64],
    batch: usize,
    ch: usize,
    len: usize,
) -> (Vec<f64>, Vec<f64>) {
    let m = (batch * len) as f64;
    let mut mean = vec![0.0; ch];
    let mut var = vec![0.0; ch];
    for o in 0..ch {
        let mut s = 0.0;
        for b in 0..batch {
            s += c[(b * ch + o) * len..(b * ch + o + 1) * len]
                .iter()
                .sum::<f64>();
        }
        mean[o] = s / m;
        let mut v = 0.0;
        for b in 0..batch {
            v += c[(b * ch + o) * len..(b * ch + o + 1) * len]
                .iter()
                .map(|x| (x - mean[o]) * (x - mean[o]))
                .sum::<f64>();
        }
        var[o] = v / m;
    }
    (mean, var)
}

/// Runs the network on a `batch × 2N` row-major input.
///
/// Returns the `batch × 2N` output and, in train mode, the cache for
/// [`super::backward`]. Running statistics are not touched; see
/// [`NetworkParams::update_running_stats`].
pub fn forward(
    params: &NetworkParams,
    y: &[f64],
    mode: Mode,
) -> Result<(Vec<f64>, Option<ForwardCache>)> {
    let cfg = &params.cfg;
    let width_in = 2 * cfg.n_antennas;
    if y.is_empty() || !y.len().is_multiple_of(width_in) {
        return Err(dims(format!(
            "input length {} is not a multiple of 2N = {width_in}",
            y.len()
        )));
    }
    let batch = y.len() / width_in;
    if mode == Mode::Eval && !params.running_stats_ready() {
        return Err(invalid("running statistics are not initialized"));
    }
    let (ch, len, k, eps) = (
        cfg.n_filters,
        cfg.inner_dim,
        cfg.kernel_size,
        cfg.bn_epsilon,
    );

    let mut x = dense_forward(y, batch, &params.fc_in);
    debug_assert_eq!(x.len(), batch * ch * len);
    let mut caches = Vec::with_capacity(params.blocks.len());
    for blk in &params.blocks {
        let c = conv_forward(&x, batch, ch, len, k, blk);
        let (mean, var) = match mode {
            Mode::Train => channel_stats(&c, batch, ch, len),
            Mode::Eval => (blk.running_mean.clone(), blk.running_var.clone()),
        };
        let mut normalized = c;
        let mut pre = vec![0.0; normalized.len()];
        let mut out = vec![0.0; normalized.len()];
        for b in 0..batch {
            for o in 0..ch {
                let inv = 1.0 / (var[o] + eps).sqrt();
                for i in 0..len {
                    let idx = (b * ch + o) * len + i;
                    let xh = (normalized[idx] - mean[o]) * inv;
                    normalized[idx] = xh;
                    pre[idx] = blk.gamma[o] * xh + blk.beta[o];
                    out[idx] = pre[idx].max(0.0);
                }
            }
        }
        debug_assert!(out.iter().all(|v| *v >= 0.0));
        let next = out.clone();
        if mode == Mode::Train {
            caches.push(BlockCache {
                input: std::mem::take(&mut x),
                normalized,
                pre_activation: pre,
                output: out,
                batch_mean: mean,
                batch_var: var,
            });
        }
        x = next;
    }

    let g = dense_forward(&x, batch, &params.fc_out);
    debug_assert_eq!(g.len(), batch * width_in);
    let cache = (mode == Mode::Train).then(|| ForwardCache {
        mode,
        batch,
        input: y.to_vec(),
        blocks: caches,
        features: x,
        output: g.clone(),
    });
    Ok((g, cache))
}

impl NetworkParams {
    /// Exponential moving update of the running statistics from a train-mode
    /// cache; the variance is stored unbiased.
    pub fn update_running_stats(&mut self, cache: &ForwardCache, momentum: f64) {
        let m = (cache.batch * self.cfg.inner_dim) as f64;
        let correction = if m > 1.0 { m / (m - 1.0) } else { 1.0 };
        for (blk, c) in self.blocks.iter_mut().zip(&cache.blocks) {
            for o in 0..blk.running_mean.len() {
                blk.running_mean[o] =
                    (1.0 - momentum) * blk.running_mean[o] + momentum * c.batch_mean[o];
                blk.running_var[o] =
                    (1.0 - momentum) * blk.running_var[o] + momentum * c.batch_var[o] * correction;
            }
        }
    }
}
