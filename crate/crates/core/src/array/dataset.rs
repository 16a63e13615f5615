//! Seeded dataset generation and the binary dataset container.
//!
//! Layout (little endian):
//!
//! ```text
//! "SDOA" | version u32 | N u32 | K u32 | count u64
//! count x [ snr_db, stage, θ_0..θ_{K-1}, (Re s_k, Im s_k)_k, (Re r_n, Im r_n)_n ]  (f64)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    sample_imperfections, synthesize_snapshot, ArrayConfig, CurriculumStage, ImperfectionCaps,
    Snapshot, SourceSet, StageSchedule,
};
use crate::error::{invalid, Error, Result};
use crate::seed::{self, stream};

pub const DATASET_MAGIC: &[u8; 4] = b"SDOA";
pub const DATASET_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;

/// How ground-truth DOAs are drawn for each sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DoaPolicy {
    pub n_sources: usize,
    pub min_deg: f64,
    pub max_deg: f64,
    pub min_separation_deg: f64,
}

impl Default for DoaPolicy {
    fn default() -> Self {
        Self {
            n_sources: 3,
            min_deg: -60.0,
            max_deg: 60.0,
            min_separation_deg: 10.0,
        }
    }
}

impl DoaPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.n_sources == 0 {
            return Err(invalid("need at least one source"));
        }
        if !(self.min_deg >= -90.0 && self.max_deg <= 90.0 && self.min_deg < self.max_deg) {
            return Err(invalid(
                "DOA range must be a nonempty subinterval of [-90, 90]",
            ));
        }
        if self.min_separation_deg < 0.0 {
            return Err(invalid("separation must be nonnegative"));
        }
        let needed = (self.n_sources - 1) as f64 * self.min_separation_deg;
        if needed >= self.max_deg - self.min_deg {
            return Err(invalid(format!(
                "{} sources {}° apart do not fit in ({}, {})",
                self.n_sources, self.min_separation_deg, self.min_deg, self.max_deg
            )));
        }
        Ok(())
    }

    /// Sorted DOAs, uniform over all configurations that respect the
    /// separation: draw in the shrunken interval, sort, then spread.
    pub fn sample(&self, rng: &mut seed::Rng) -> Vec<f64> {
        let k = self.n_sources;
        let slack = (self.max_deg - self.min_deg) - (k - 1) as f64 * self.min_separation_deg;
        let mut u: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * slack).collect();
        u.sort_by(f64::total_cmp);
        u.iter()
            .enumerate()
            .map(|(i, x)| self.min_deg + x + i as f64 * self.min_separation_deg)
            .collect()
    }
}

/// Everything needed to regenerate a dataset; written next to the binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub format_version: u32,
    pub n_antennas: usize,
    pub n_sources: usize,
    pub count: usize,
    pub master_seed: u64,
    pub seed_scheme: String,
    pub array: ArrayConfig,
    pub caps: ImperfectionCaps,
    pub schedule: StageSchedule,
    pub snr_range_db: (f64, f64),
    pub doa_policy: DoaPolicy,
    pub record_layout: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub version: u32,
    pub n_antennas: usize,
    pub n_sources: usize,
    pub count: usize,
}

fn generate_sample(
    array: &ArrayConfig,
    caps: &ImperfectionCaps,
    stage: CurriculumStage,
    snr_range_db: (f64, f64),
    policy: &DoaPolicy,
    sample_seed: u64,
    index: usize,
) -> Result<Snapshot> {
    let realization = sample_imperfections(
        array.n_antennas,
        caps,
        stage,
        seed::derive(sample_seed, stream::REALIZATION, 0),
    )?;
    let mut src_rng = seed::rng(seed::derive(sample_seed, stream::SOURCES, 0));
    let doas = policy.sample(&mut src_rng);
    let amplitudes = (0..doas.len())
        .map(|_| Complex64::from_polar(1.0, src_rng.gen::<f64>() * std::f64::consts::TAU))
        .collect();
    let sources = SourceSet::new(doas, amplitudes)?;
    let (lo, hi) = snr_range_db;
    let mut snr_rng = seed::rng(seed::derive(sample_seed, stream::SNR, 0));
    let snr = lo + (hi - lo) * snr_rng.gen::<f64>();
    let mut snap = synthesize_snapshot(
        array,
        &realization,
        &sources,
        snr,
        seed::derive(sample_seed, stream::NOISE, 0),
    )?;
    snap.realization_id = index as u64;
    Ok(snap)
}

/// Generates `n_samples` snapshots. Sample `i` depends only on
/// `(rng_seed, i)`, so the output is identical for any thread count.
pub fn generate_dataset(
    array: &ArrayConfig,
    caps: &ImperfectionCaps,
    schedule: &StageSchedule,
    n_samples: usize,
    snr_range_db: (f64, f64),
    policy: &DoaPolicy,
    rng_seed: u64,
) -> Result<Vec<Snapshot>> {
    array.validate()?;
    caps.validate()?;
    policy.validate()?;
    if n_samples == 0 {
        return Err(invalid("n_samples must be at least 1"));
    }
    let (lo, hi) = snr_range_db;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(invalid("SNR range must be finite with start <= stop"));
    }
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            generate_sample(
                array,
                caps,
                schedule.stage_for(i),
                snr_range_db,
                policy,
                seed::derive(rng_seed, stream::SAMPLE, i as u64),
                i,
            )
        })
        .collect()
}

fn push_f64(buf: &mut Vec<u8>, x: f64) {
    buf.extend_from_slice(&x.to_le_bytes());
}

/// Serializes snapshots into the binary container. Every snapshot must have
/// the same N and K.
pub fn encode_dataset(snapshots: &[Snapshot], stages: &[CurriculumStage]) -> Result<Vec<u8>> {
    let first = snapshots.first().ok_or_else(|| invalid("empty dataset"))?;
    let n = first.n_antennas();
    let k = first.truth.len();
    if stages.len() != snapshots.len() {
        return Err(invalid("one stage per snapshot"));
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + snapshots.len() * (2 + 3 * k + 2 * n) * 8);
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(k as u32).to_le_bytes());
    buf.extend_from_slice(&(snapshots.len() as u64).to_le_bytes());
    for (snap, stage) in snapshots.iter().zip(stages) {
        if snap.n_antennas() != n || snap.truth.len() != k {
            return Err(invalid("snapshots disagree on N or K"));
        }
        push_f64(&mut buf, snap.snr_db);
        push_f64(&mut buf, stage.index() as f64);
        for &t in &snap.truth.doas {
            push_f64(&mut buf, t);
        }
        for s in &snap.truth.amplitudes {
            push_f64(&mut buf, s.re);
            push_f64(&mut buf, s.im);
        }
        for r in &snap.received {
            push_f64(&mut buf, r.re);
            push_f64(&mut buf, r.im);
        }
    }
    Ok(buf)
}

/// Parses a binary container into its header, snapshots and per-sample stages.
pub fn decode_dataset(
    bytes: &[u8],
) -> Result<(DatasetHeader, Vec<Snapshot>, Vec<CurriculumStage>)> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != DATASET_MAGIC {
        return Err(Error::Format("missing SDOA magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != DATASET_VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset version {version}"
        )));
    }
    let n = u32_at(8) as usize;
    let k = u32_at(12) as usize;
    let count = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let record = (2 + 3 * k + 2 * n) * 8;
    if bytes.len() != HEADER_LEN + count * record {
        return Err(Error::Format(format!(
            "expected {} bytes for {count} records, found {}",
            HEADER_LEN + count * record,
            bytes.len()
        )));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut next = || values.next().expect("length checked");
    let mut snaps = Vec::with_capacity(count);
    let mut stages = Vec::with_capacity(count);
    for i in 0..count {
        let snr_db = next();
        let stage = CurriculumStage::from_index(next() as usize)?;
        let doas: Vec<f64> = (0..k).map(|_| next()).collect();
        let amplitudes: Vec<Complex64> = (0..k).map(|_| Complex64::new(next(), next())).collect();
        let received: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
        snaps.push(Snapshot {
            received,
            truth: SourceSet { doas, amplitudes },
            realization_id: i as u64,
            snr_db,
        });
        stages.push(stage);
    }
    Ok((
        DatasetHeader {
            version,
            n_antennas: n,
            n_sources: k,
            count,
        },
        snaps,
        stages,
    ))
}

/// Writes `<stem>.bin` and `<stem>.json` (metadata sidecar).
pub fn write_dataset(
    bin_path: &Path,
    snapshots: &[Snapshot],
    stages: &[CurriculumStage],
    metadata: &DatasetMetadata,
) -> Result<()> {
    let bytes = encode_dataset(snapshots, stages)?;
    std::fs::File::create(bin_path)?.write_all(&bytes)?;
    let json = serde_json::to_string_pretty(metadata)?;
    std::fs::write(bin_path.with_extension("json"), json + "\n")?;
    Ok(())
}

pub fn read_dataset(
    bin_path: &Path,
) -> Result<(DatasetHeader, Vec<Snapshot>, Vec<CurriculumStage>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(bin_path)?.read_to_end(&mut bytes)?;
    decode_dataset(&bytes)
}

pub(crate) const RECORD_LAYOUT: &str =
    "snr_db, stage_index, doa_deg[K], amplitude[K](re,im), received[N](re,im); f64 little endian";
pub(crate) const SEED_SCHEME: &str =
    "splitmix64 counter split: sample i uses derive(master, 0x5a4d, i); realization/sources/snr/noise use derive(sample, 1/3/4/2, 0); ChaCha8 streams";

impl DatasetMetadata {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        array: &ArrayConfig,
        caps: &ImperfectionCaps,
        schedule: &StageSchedule,
        count: usize,
        snr_range_db: (f64, f64),
        policy: &DoaPolicy,
        master_seed: u64,
    ) -> Self {
        Self {
            format_version: DATASET_VERSION,
            n_antennas: array.n_antennas,
            n_sources: policy.n_sources,
            count,
            master_seed,
            seed_scheme: SEED_SCHEME.into(),
            array: array.clone(),
            caps: caps.clone(),
            schedule: schedule.clone(),
            snr_range_db,
            doa_policy: policy.clone(),
            record_layout: RECORD_LAYOUT.into(),
        }
    }
}
