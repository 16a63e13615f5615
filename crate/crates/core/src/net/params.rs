use rand::Rng as _;

use super::NetConfig;
use crate::error::Result;
use crate::seed;

/// Fully connected layer, `out = x W + b` with `W` stored `[in][out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weight: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }
}

/// Convolution + batch-norm block. Kernel stored `[out][in][tap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl ConvBlock {
    fn zeros(channels: usize, kernel: usize) -> Self {
        Self {
            weight: vec![0.0; channels * channels * kernel],
            bias: vec![0.0; channels],
            gamma: vec![0.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![0.0; channels],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub cfg: NetConfig,
    pub fc_in: Dense,
    pub blocks: Vec<ConvBlock>,
    pub fc_out: Dense,
}

impl NetworkParams {
    /// Every array zero, including running statistics. Used for gradients and
    /// optimizer moments.
    pub fn zeros(cfg: &NetConfig) -> Self {
        let width = cfg.n_filters * cfg.inner_dim;
        Self {
            cfg: cfg.clone(),
            fc_in: Dense::zeros(2 * cfg.n_antennas, width),
            blocks: (0..cfg.n_conv_layers)
                .map(|_| ConvBlock::zeros(cfg.n_filters, cfg.kernel_size))
                .collect(),
            fc_out: Dense::zeros(width, 2 * cfg.n_antennas),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.cfg)
    }

    /// Names of the trainable groups, in the order of [`Self::trainable`].
    pub fn group_names(&self) -> Vec<String> {
        let mut names = vec!["fc_in.weight".to_string(), "fc_in.bias".to_string()];
        for l in 0..self.blocks.len() {
            for part in ["weight", "bias", "gamma", "beta"] {
                names.push(format!("conv{l}.{part}"));
            }
        }
        names.push("fc_out.weight".into());
        names.push("fc_out.bias".into());
        names
    }

    pub fn trainable(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.fc_in.weight, &self.fc_in.bias];
        for b in &self.blocks {
            out.extend([&b.weight[..], &b.bias, &b.gamma, &b.beta]);
        }
        out.extend([&self.fc_out.weight[..], &self.fc_out.bias]);
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.fc_in.weight, &mut self.fc_in.bias];
        for b in &mut self.blocks {
            out.extend([&mut b.weight[..], &mut b.bias, &mut b.gamma, &mut b.beta]);
        }
        out.extend([&mut self.fc_out.weight[..], &mut self.fc_out.bias]);
        out
    }

    /// All arrays in file order: trainable groups interleaved with the
    /// running statistics of each block.
    pub fn arrays(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.fc_in.weight, &self.fc_in.bias];
        for b in &self.blocks {
            out.extend([
                &b.weight[..],
                &b.bias,
                &b.gamma,
                &b.beta,
                &b.running_mean,
                &b.running_var,
            ]);
        }
        out.extend([&self.fc_out.weight[..], &self.fc_out.bias]);
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.fc_in.weight, &mut self.fc_in.bias];
        for b in &mut self.blocks {
            out.extend([
                &mut b.weight[..],
                &mut b.bias,
                &mut b.gamma,
                &mut b.beta,
                &mut b.running_mean,
                &mut b.running_var,
            ]);
        }
        out.extend([&mut self.fc_out.weight[..], &mut self.fc_out.bias]);
        out
    }

    pub fn n_trainable(&self) -> usize {
        self.trainable().iter().map(|g| g.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.arrays()
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite()))
    }

    /// Running statistics usable for eval mode.
    pub fn running_stats_ready(&self) -> bool {
        self.blocks.iter().all(|b| {
            b.running_mean.iter().all(|m| m.is_finite())
                && b.running_var.iter().all(|v| v.is_finite() && *v > 0.0)
        })
    }
}

fn glorot(rng: &mut seed::Rng, w: &mut [f64], fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for x in w.iter_mut() {
        *x = rng.gen_range(-limit..=limit);
    }
}

/// Glorot-uniform weights, zero biases, identity batch norm.
pub fn init_params(cfg: &NetConfig, rng_seed: u64) -> Result<NetworkParams> {
    cfg.validate()?;
    let mut p = NetworkParams::zeros(cfg);
    let mut rng = seed::rng(rng_seed);
    let (f, k) = (cfg.n_filters, cfg.kernel_size);

    glorot(&mut rng, &mut p.fc_in.weight, p.fc_in.n_in, p.fc_in.n_out);
    for b in &mut p.blocks {
        glorot(&mut rng, &mut b.weight, f * k, f * k);
        b.gamma.fill(1.0);
        b.running_var.fill(1.0);
    }
    glorot(
        &mut rng,
        &mut p.fc_out.weight,
        p.fc_out.n_in,
        p.fc_out.n_out,
    );
    Ok(p)
}
