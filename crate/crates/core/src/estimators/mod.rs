//! Classical baselines: matched-filter beamformer, single-snapshot MUSIC,
//! grid OMP and atomic-norm denoising.

mod anm;
mod beamformer;
mod music;
mod omp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use anm::{anm, anm_denoise, anm_spectrum, AnmConfig, AnmSolution};
pub use beamformer::{beamformer, beamformer_spectrum};
pub use music::{
    hankel_lift, music_single_snapshot, noise_subspace, MusicConfig, PSEUDOSPECTRUM_CAP,
};
pub use omp::{omp, omp_detailed, OmpResult};

/// Estimator names accepted on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fft,
    Music,
    Omp,
    Anm,
    Sdoanet,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Fft,
        Method::Music,
        Method::Omp,
        Method::Anm,
        Method::Sdoanet,
    ];
    pub const CLASSICAL: [Method; 4] = [Method::Fft, Method::Music, Method::Omp, Method::Anm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fft => "fft",
            Method::Music => "music",
            Method::Omp => "omp",
            Method::Anm => "anm",
            Method::Sdoanet => "sdoanet",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                invalid(format!(
                    "unknown estimator '{s}' (valid: {})",
                    names.join(", ")
                ))
            })
    }
}
