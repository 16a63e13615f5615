//! Model file:
//!
//! ```text
//! "SDON" | version u32 | N, M_F, M_I, M_C, M_K, M_B as u32 | lr f64 | eps f64
//! parameter arrays in declaration order, f64 little endian
//! ```

use std::path::Path;

use super::params::NetworkParams;
use super::NetConfig;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"SDON";
pub const MODEL_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 6 * 4 + 8 + 8;

pub fn encode_model(params: &NetworkParams) -> Vec<u8> {
    let c = &params.cfg;
    let mut buf =
        Vec::with_capacity(HEADER_LEN + 8 * params.arrays().iter().map(|a| a.len()).sum::<usize>());
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [
        c.n_antennas,
        c.n_filters,
        c.inner_dim,
        c.n_conv_layers,
        c.kernel_size,
        c.batch_size,
    ] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
    buf.extend_from_slice(&c.learning_rate.to_le_bytes());
    buf.extend_from_slice(&c.bn_epsilon.to_le_bytes());
    for a in params.arrays() {
        for v in a {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode_model(bytes: &[u8]) -> Result<NetworkParams> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("model file shorter than its header".into()));
    }
    if &bytes[..4] != MODEL_MAGIC {
        return Err(Error::Format("bad magic, not a model file".into()));
    }
    let version = u32_at(bytes, 4);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version}"
        )));
    }
    let ints: Vec<usize> = (0..6).map(|i| u32_at(bytes, 8 + 4 * i) as usize).collect();
    let cfg = NetConfig {
        n_antennas: ints[0],
        n_filters: ints[1],
        inner_dim: ints[2],
        n_conv_layers: ints[3],
        kernel_size: ints[4],
        batch_size: ints[5],
        learning_rate: f64_at(bytes, 32),
        bn_epsilon: f64_at(bytes, 40),
    };
    cfg.validate()
        .map_err(|e| Error::Format(format!("header: {e}")))?;

    let mut params = NetworkParams::zeros(&cfg);
    let expected: usize = params.arrays().iter().map(|a| a.len()).sum();
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * expected {
        return Err(Error::Format(format!(
            "expected {expected} parameters for this configuration, found {} bytes",
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    for a in params.arrays_mut() {
        for v in a.iter_mut() {
            *v = values.next().expect("length checked");
        }
    }
    if !params.all_finite() {
        return Err(Error::Format("non-finite parameter".into()));
    }
    if !params.running_stats_ready() {
        return Err(Error::Format("running variance must be positive".into()));
    }
    Ok(params)
}

pub fn save_model(params: &NetworkParams, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(params))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<NetworkParams> {
    decode_model(&std::fs::read(path)?)
}
