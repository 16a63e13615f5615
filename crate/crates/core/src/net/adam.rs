use super::params::NetworkParams;
use crate::error::{dims, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: NetworkParams,
    pub v: NetworkParams,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam update of the trainable groups. Running statistics
/// are left alone.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &NetworkParams,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if params.cfg != grads.cfg || params.cfg != state.m.cfg {
        return Err(dims("parameter, gradient and optimizer shapes differ"));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let groups = params.trainable_mut();
    let g = grads.trainable();
    let m = state.m.trainable_mut();
    let v = state.v.trainable_mut();
    for (((p, g), m), v) in groups.into_iter().zip(g).zip(m).zip(v) {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
