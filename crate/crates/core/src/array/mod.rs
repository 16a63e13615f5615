//! Linear array geometry, the five hardware imperfections, and snapshot
//! synthesis.
//!
//! The received signal at antenna `n` is
//!
//! ```text
//! x_n = Σ_k s_k · A_n e^{jφ_n} · e^{j2π (d_n + δ_n)/λ · sin θ_k}
//! r_n = g(x_n + Σ_{n'≠n} B_{n,n'} x_{n'}) + w_n
//! ```
//!
//! with position offsets `δ_n`, channel gains `A_n`, channel phases `φ_n`,
//! mutual coupling `B` and a saturating nonlinearity `g`.

mod curriculum;
mod dataset;
mod imperfection;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{dims, invalid, Result};
use crate::seed;

pub use curriculum::{curriculum_stage_for, CurriculumStage, StageSchedule};
pub use dataset::{
    decode_dataset, encode_dataset, generate_dataset, read_dataset, write_dataset, DatasetHeader,
    DatasetMetadata, DoaPolicy, DATASET_MAGIC, DATASET_VERSION,
};
pub use imperfection::{
    sample_imperfections, ActiveEffects, ImperfectionCaps, ImperfectionRealization,
};

/// Uniform linear array with positions in units of the wavelength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrayConfig {
    pub n_antennas: usize,
    pub wavelength: f64,
    pub nominal_spacing: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_antennas: 16,
            wavelength: 1.0,
            nominal_spacing: 0.5,
        }
    }
}

impl ArrayConfig {
    pub fn ula(n_antennas: usize) -> Self {
        Self {
            n_antennas,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas < 2 {
            return Err(invalid("array needs at least two antennas"));
        }
        if !(self.wavelength > 0.0) || !(self.nominal_spacing > 0.0) {
            return Err(invalid("wavelength and spacing must be positive"));
        }
        Ok(())
    }

    /// `d_n = n · spacing · λ`, so `d_0 = 0`.
    pub fn nominal_positions(&self) -> Vec<f64> {
        (0..self.n_antennas)
            .map(|n| n as f64 * self.nominal_spacing * self.wavelength)
            .collect()
    }
}

/// Far-field sources: DOAs in degrees and complex amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSet {
    pub doas: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
}

impl SourceSet {
    pub fn new(doas: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let s = Self { doas, amplitudes };
        s.validate()?;
        Ok(s)
    }

    /// Unit-amplitude, zero-phase sources.
    pub fn unit(doas: &[f64]) -> Result<Self> {
        Self::new(doas.to_vec(), vec![Complex64::new(1.0, 0.0); doas.len()])
    }

    pub fn len(&self) -> usize {
        self.doas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doas.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.doas.is_empty() {
            return Err(invalid("source set is empty"));
        }
        if self.doas.len() != self.amplitudes.len() {
            return Err(dims("one amplitude per DOA"));
        }
        if let Some(t) = self.doas.iter().find(|t| !(t.abs() <= 90.0)) {
            return Err(invalid(format!("DOA {t} outside [-90, 90]")));
        }
        Ok(())
    }

    /// Mean per-source power `(1/K) Σ |s_k|²`.
    pub fn mean_power(&self) -> f64 {
        self.amplitudes.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.len() as f64
    }
}

/// One received snapshot and the ground truth that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub received: Vec<Complex64>,
    pub truth: SourceSet,
    pub realization_id: u64,
    pub snr_db: f64,
}

impl Snapshot {
    /// Wraps an externally supplied vector (no ground truth beyond `truth`).
    pub fn from_received(received: Vec<Complex64>, truth: SourceSet) -> Self {
        Self {
            received,
            truth,
            realization_id: 0,
            snr_db: f64::INFINITY,
        }
    }

    pub fn n_antennas(&self) -> usize {
        self.received.len()
    }
}

/// `tanh(σ·Re x) + j·tanh(σ·Im x)`; identity when `σ = 0`.
pub fn apply_nonlinearity(x: &[Complex64], sigma: f64) -> Vec<Complex64> {
    if sigma == 0.0 {
        return x.to_vec();
    }
    x.iter()
        .map(|z| Complex64::new((sigma * z.re).tanh(), (sigma * z.im).tanh()))
        .collect()
}

/// Per-antenna complex noise standard deviation for an SNR measured against
/// the mean per-source power.
pub fn snr_to_noise_std(snr_db: f64, sources: &SourceSet) -> Result<f64> {
    if sources.is_empty() {
        return Err(invalid("source set is empty"));
    }
    if !snr_db.is_finite() {
        return Err(invalid("SNR must be finite"));
    }
    Ok((sources.mean_power() / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Noise-free received vector `g(B x)` under a realization.
pub fn noiseless_response(
    array: &ArrayConfig,
    realization: &ImperfectionRealization,
    sources: &SourceSet,
) -> Result<Vec<Complex64>> {
    array.validate()?;
    sources.validate()?;
    let n = array.n_antennas;
    if realization.n_antennas() != n {
        return Err(dims(format!(
            "realization has {} antennas, array has {n}",
            realization.n_antennas()
        )));
    }
    let positions = array.nominal_positions();
    let x: Vec<Complex64> = (0..n)
        .map(|i| {
            let d =
                (positions[i] + realization.pos_offsets[i] * array.wavelength) / array.wavelength;
            let channel = Complex64::from_polar(realization.gains[i], realization.phases[i]);
            let sum: Complex64 = sources
                .doas
                .iter()
                .zip(&sources.amplitudes)
                .map(|(theta, s)| {
                    s * Complex64::from_polar(
                        1.0,
                        2.0 * std::f64::consts::PI * d * theta.to_radians().sin(),
                    )
                })
                .sum();
            channel * sum
        })
        .collect();
    let coupled = realization.coupling.matvec(&x);
    Ok(apply_nonlinearity(&coupled, realization.nonlinear))
}

/// Synthesizes one snapshot. Noise is drawn from `rng_seed` alone.
pub fn synthesize_snapshot(
    array: &ArrayConfig,
    realization: &ImperfectionRealization,
    sources: &SourceSet,
    snr_db: f64,
    rng_seed: u64,
) -> Result<Snapshot> {
    let mut received = noiseless_response(array, realization, sources)?;
    let sigma = snr_to_noise_std(snr_db, sources)?;
    let mut rng = seed::rng(rng_seed);
    let per_component = sigma / std::f64::consts::SQRT_2;
    for r in received.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *r += Complex64::new(re, im) * per_component;
    }
    Ok(Snapshot {
        received,
        truth: sources.clone(),
        realization_id: rng_seed,
        snr_db,
    })
}

/// Noise-free snapshot (infinite SNR).
pub fn synthesize_noiseless(
    array: &ArrayConfig,
    realization: &ImperfectionRealization,
    sources: &SourceSet,
) -> Result<Snapshot> {
    Ok(Snapshot {
        received: noiseless_response(array, realization, sources)?,
        truth: sources.clone(),
        realization_id: 0,
        snr_db: f64::INFINITY,
    })
}
