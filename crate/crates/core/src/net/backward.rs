use num_complex::Complex64;

use super::forward::{forward, ForwardCache, Mode};
use super::params::{Dense, NetworkParams};
use super::{stack_batch, to_complex};
use crate::array::Snapshot;
use crate::error::{dims, invalid, Error, Result};
use crate::spectrum::{gaussian_width, reference_values, ula_positions, AngleGrid, SteeringTable};

/// Grid, steering table and reference-spectrum settings for the training loss.
#[derive(Debug, Clone)]
pub struct LossContext {
    pub grid: AngleGrid,
    pub table: SteeringTable,
    pub sigma_g: f64,
    pub amplitude: f64,
}

impl LossContext {
    pub fn new(grid: AngleGrid, n_antennas: usize, sigma_bar: f64, amplitude: f64) -> Result<Self> {
        if !(sigma_bar > 0.0) {
            return Err(invalid("sigma_bar must be positive"));
        }
        let table = SteeringTable::new(&grid, &ula_positions(n_antennas), 1.0);
        Ok(Self {
            table,
            grid,
            sigma_g: gaussian_width(sigma_bar, n_antennas),
            amplitude,
        })
    }

    pub fn reference(&self, doas: &[f64]) -> Vec<f64> {
        reference_values(doas, self.amplitude, self.sigma_g, &self.grid)
    }
}

pub struct LossGrad {
    pub loss: f64,
    pub grads: NetworkParams,
    pub cache: ForwardCache,
}

/// Mean spectrum loss of a batch and its gradient with respect to the
/// network output rows.
pub fn spectrum_loss_grad(
    g: &[f64],
    refs: &[Vec<f64>],
    ctx: &LossContext,
) -> Result<(f64, Vec<f64>)> {
    let n = ctx.table.n_antennas();
    let batch = refs.len();
    if g.len() != batch * 2 * n {
        return Err(dims("output rows do not match the reference batch"));
    }
    let omega = ctx.grid.len() as f64;
    let mut loss = 0.0;
    let mut d_g = vec![0.0; g.len()];
    for (s, reference) in refs.iter().enumerate() {
        let z = to_complex(&g[s * 2 * n..(s + 1) * 2 * n])?;
        let p = ctx.table.project(&z);
        let mut dz = vec![Complex64::new(0.0, 0.0); n];
        for (w, (pw, rw)) in p.iter().zip(reference).enumerate() {
            let diff = pw.norm_sqr() - rw;
            loss += diff * diff;
            // ∂/∂u + j∂/∂v of diff² is 4·diff·a·p
            let c = *pw * (4.0 * diff / (omega * batch as f64));
            for (d, a) in dz.iter_mut().zip(ctx.table.row(w)) {
                *d += a * c;
            }
        }
        let row = &mut d_g[s * 2 * n..(s + 1) * 2 * n];
        for i in 0..n {
            row[i] = dz[i].re;
            row[n + i] = dz[i].im;
        }
    }
    Ok((loss / (omega * batch as f64), d_g))
}

fn dense_backward(
    x: &[f64],
    rows: usize,
    d: &Dense,
    d_out: &[f64],
    grad: &mut Dense,
    want_input: bool,
) -> Vec<f64> {
    for r in 0..rows {
        let dr = &d_out[r * d.n_out..(r + 1) * d.n_out];
        for (gb, v) in grad.bias.iter_mut().zip(dr) {
            *gb += v;
        }
        for (i, xi) in x[r * d.n_in..(r + 1) * d.n_in].iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (gw, v) in grad.weight[i * d.n_out..(i + 1) * d.n_out]
                .iter_mut()
                .zip(dr)
            {
                *gw += xi * v;
            }
        }
    }
    if !want_input {
        return Vec::new();
    }
    let mut d_in = vec![0.0; rows * d.n_in];
    for r in 0..rows {
        let dr = &d_out[r * d.n_out..(r + 1) * d.n_out];
        for i in 0..d.n_in {
            d_in[r * d.n_in + i] = d.weight[i * d.n_out..(i + 1) * d.n_out]
                .iter()
                .zip(dr)
                .map(|(w, v)| w * v)
                .sum();
        }
    }
    d_in
}

/// Backpropagates `d_out = ∂L/∂g` through a train-mode cache.
pub fn backward(
    params: &NetworkParams,
    cache: &ForwardCache,
    d_out: &[f64],
) -> Result<NetworkParams> {
    if cache.mode != Mode::Train {
        return Err(invalid("backward needs a train-mode cache"));
    }
    let cfg = &params.cfg;
    let batch = cache.batch;
    let (ch, len, k, eps) = (
        cfg.n_filters,
        cfg.inner_dim,
        cfg.kernel_size,
        cfg.bn_epsilon,
    );
    let pad = k / 2;
    let m = (batch * len) as f64;
    let mut grads = params.zeros_like();

    let mut d_a = dense_backward(
        &cache.features,
        batch,
        &params.fc_out,
        d_out,
        &mut grads.fc_out,
        true,
    );

    for (l, (blk, bc)) in params.blocks.iter().zip(&cache.blocks).enumerate().rev() {
        let gb = &mut grads.blocks[l];
        let mut d_c = vec![0.0; d_a.len()];
        for o in 0..ch {
            let inv_std = 1.0 / (bc.batch_var[o] + eps).sqrt();
            let (mut sum_dxh, mut sum_dxh_xh) = (0.0, 0.0);
            let mut d_xhat = vec![0.0; batch * len];
            for b in 0..batch {
                for i in 0..len {
                    let idx = (b * ch + o) * len + i;
                    let dy = if bc.pre_activation[idx] > 0.0 {
                        d_a[idx]
                    } else {
                        0.0
                    };
                    gb.gamma[o] += dy * bc.normalized[idx];
                    gb.beta[o] += dy;
                    let dxh = dy * blk.gamma[o];
                    d_xhat[b * len + i] = dxh;
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * bc.normalized[idx];
                }
            }
            for b in 0..batch {
                for i in 0..len {
                    let idx = (b * ch + o) * len + i;
                    d_c[idx] = inv_std / m
                        * (m * d_xhat[b * len + i] - sum_dxh - bc.normalized[idx] * sum_dxh_xh);
                }
            }
        }

        let mut d_x = vec![0.0; d_c.len()];
        for b in 0..batch {
            for o in 0..ch {
                let dco = &d_c[(b * ch + o) * len..(b * ch + o + 1) * len];
                gb.bias[o] += dco.iter().sum::<f64>();
                for f in 0..ch {
                    let src = &bc.input[(b * ch + f) * len..(b * ch + f + 1) * len];
                    let dst = &mut d_x[(b * ch + f) * len..(b * ch + f + 1) * len];
                    for t in 0..k {
                        let w = blk.weight[(o * ch + f) * k + t];
                        let lo = pad.saturating_sub(t);
                        let hi = (len + pad).saturating_sub(t).min(len);
                        let mut gw = 0.0;
                        for i in lo..hi {
                            let j = i + t - pad;
                            gw += dco[i] * src[j];
                            dst[j] += dco[i] * w;
                        }
                        gb.weight[(o * ch + f) * k + t] += gw;
                    }
                }
            }
        }
        d_a = d_x;
    }

    dense_backward(
        &cache.input,
        batch,
        &params.fc_in,
        &d_a,
        &mut grads.fc_in,
        false,
    );
    Ok(grads)
}

/// Train-mode forward, mean spectrum loss over the batch, and the full
/// parameter gradient. `params` is not modified; apply
/// [`NetworkParams::update_running_stats`] with the returned cache.
pub fn loss_and_grad(
    params: &NetworkParams,
    batch: &[Snapshot],
    ctx: &LossContext,
) -> Result<LossGrad> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let y = stack_batch(batch, params.cfg.n_antennas)?;
    let refs: Vec<Vec<f64>> = batch.iter().map(|s| ctx.reference(&s.truth.doas)).collect();
    let (g, cache) = forward(params, &y, Mode::Train)?;
    let cache = cache.expect("train mode returns a cache");
    let (loss, d_g) = spectrum_loss_grad(&g, &refs, ctx)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss = {loss}")));
    }
    let grads = backward(params, &cache, &d_g)?;
    Ok(LossGrad { loss, grads, cache })
}

/// Loss only, train-mode statistics. Used for finite-difference checks.
pub fn batch_loss(params: &NetworkParams, batch: &[Snapshot], ctx: &LossContext) -> Result<f64> {
    let y = stack_batch(batch, params.cfg.n_antennas)?;
    let refs: Vec<Vec<f64>> = batch.iter().map(|s| ctx.reference(&s.truth.doas)).collect();
    let (g, _) = forward(params, &y, Mode::Train)?;
    Ok(spectrum_loss_grad(&g, &refs, ctx)?.0)
}
