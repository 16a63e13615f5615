//! Experiment configuration and the Monte-Carlo sweeps behind the CLI.
//!
//! Trial `i` of every sweep point draws its DOAs, imperfection realization and
//! noise from `derive(seed, TRIAL, i)`. Those draws do not depend on the SNR,
//! on ξ or on the estimator, so every row of a sweep is a paired comparison and
//! `ξ = 0` reproduces the perfect-array numbers exactly.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{
    generate_dataset, ArrayConfig, CurriculumStage, DoaPolicy, ImperfectionCaps,
    ImperfectionRealization, Snapshot, SourceSet, StageSchedule,
};
use crate::error::{Error, Result};
use crate::estimators::{
    anm, beamformer, music_single_snapshot, omp_detailed, AnmConfig, Method, MusicConfig,
};
use crate::net::{self, DataConfig, NetConfig, NetworkParams};
use crate::seed::{self, stream};
use crate::spectrum::{sig12, sorted_squared_error, AngleGrid, DoaEstimate, Spectrum};

/// Seed stream for Monte-Carlo trials.
pub const TRIAL_STREAM: u64 = 0x7472;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_samples: usize,
    pub snr_range_db: (f64, f64),
    pub schedule: StageSchedule,
    pub doa_policy: DoaPolicy,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n_samples: 5000,
            snr_range_db: (0.0, 30.0),
            schedule: StageSchedule::Cyclic { block: 1 },
            doa_policy: DoaPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub data: DataConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 14,
            data: DataConfig::default(),
        }
    }
}

/// Inclusive `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.start <= self.stop) {
            return Err(Error::Config(
                "sweep needs step > 0 and start <= stop".into(),
            ));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_trials: usize,
    pub doa_policy: DoaPolicy,
    pub grid_step_deg: f64,
    pub min_separation_deg: f64,
    pub snr_sweep: SweepRange,
    /// Imperfect factor used by the SNR sweep.
    pub xi: f64,
    pub xi_sweep: Vec<f64>,
    /// SNR used by the ξ sweep.
    pub snr_db: f64,
    pub anm: AnmConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_trials: 100,
            doa_policy: DoaPolicy::default(),
            grid_step_deg: 0.1,
            min_separation_deg: 5.0,
            snr_sweep: SweepRange {
                start: 0.0,
                stop: 30.0,
                step: 5.0,
            },
            xi: 1.0,
            xi_sweep: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            snr_db: 20.0,
            anm: AnmConfig::default(),
        }
    }
}

/// Scenario for the spectrum overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub doas: Vec<f64>,
    pub snr_db: f64,
    pub xi: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            doas: vec![-30.0, 10.0, 20.0],
            snr_db: 20.0,
            xi: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub estimators: Vec<String>,
    pub array: ArrayConfig,
    pub caps: ImperfectionCaps,
    pub net: NetConfig,
    pub simulate: SimulateConfig,
    pub train: TrainSection,
    pub eval: EvalConfig,
    pub spectrum: ScenarioConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            estimators: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            array: ArrayConfig::default(),
            caps: ImperfectionCaps::default(),
            net: NetConfig::default(),
            simulate: SimulateConfig::default(),
            train: TrainSection::default(),
            eval: EvalConfig::default(),
            spectrum: ScenarioConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        if self.estimators.is_empty() {
            return Err(Error::Config("estimator list is empty".into()));
        }
        self.estimators.iter().map(|s| s.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.caps.validate()?;
        self.net.validate()?;
        self.methods()?;
        if self.array.n_antennas != self.net.n_antennas {
            return Err(Error::Config(format!(
                "array has {} antennas but the network expects {}",
                self.array.n_antennas, self.net.n_antennas
            )));
        }
        if self.eval.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.eval.xi_sweep.is_empty() {
            return Err(Error::Config("xi sweep is empty".into()));
        }
        if self.eval.xi_sweep.iter().any(|x| !(*x >= 0.0)) || !(self.eval.xi >= 0.0) {
            return Err(Error::Config("xi must be nonnegative".into()));
        }
        self.eval.snr_sweep.values()?;
        self.eval.doa_policy.validate()?;
        self.eval.anm.validate()?;
        self.train.data.validate()?;
        self.simulate.doa_policy.validate()?;
        if self.eval.grid_step_deg <= 0.0 {
            return Err(Error::Config("grid step must be positive".into()));
        }
        Ok(())
    }

    pub fn eval_grid(&self) -> Result<AngleGrid> {
        AngleGrid::full(self.eval.grid_step_deg)
    }
}

/// One line of a sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub estimator: Method,
    pub value: f64,
    pub rmse_deg: f64,
    pub n_trials: usize,
    pub median_runtime_ms: f64,
}

pub fn write_results<W: Write>(
    rows: &[ResultRow],
    sweep_name: &str,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "estimator,{sweep_name},rmse_deg,n_trials,median_runtime_ms"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.estimator,
            sig12(r.value),
            sig12(r.rmse_deg),
            r.n_trials,
            sig12(r.median_runtime_ms)
        )?;
    }
    Ok(())
}

pub fn save_results(rows: &[ResultRow], sweep_name: &str, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_results(rows, sweep_name, f)?;
    Ok(())
}

/// Shared inputs for running estimators on one snapshot.
pub struct EstimatorSet<'a> {
    pub grid: AngleGrid,
    pub k: usize,
    pub min_separation_deg: f64,
    pub anm: AnmConfig,
    pub model: Option<&'a NetworkParams>,
}

impl EstimatorSet<'_> {
    /// Spectrum (OMP: coefficient sticks) and DOA estimate.
    pub fn run(&self, method: Method, snap: &Snapshot) -> Result<(Spectrum, DoaEstimate)> {
        let (grid, k, sep) = (&self.grid, self.k, self.min_separation_deg);
        match method {
            Method::Fft => beamformer(snap, grid, k, sep),
            Method::Music => music_single_snapshot(
                snap,
                &MusicConfig::for_array(snap.n_antennas(), k),
                grid,
                sep,
            ),
            Method::Omp => {
                let res = omp_detailed(snap, grid, k)?;
                Ok((res.sticks(grid), res.estimate))
            }
            Method::Anm => anm(snap, &self.anm, grid, k, sep),
            Method::Sdoanet => {
                let model = self
                    .model
                    .ok_or_else(|| Error::Config("the sdoanet estimator needs --model".into()))?;
                net::estimate(model, snap, grid, k, sep)
            }
        }
    }
}

/// Snapshots for trials `0..n` at one SNR and ξ. All imperfections are drawn
/// (stage `AllEffects`) and scaled by ξ.
pub fn trial_snapshots(
    array: &ArrayConfig,
    caps: &ImperfectionCaps,
    xi: f64,
    snr_db: f64,
    policy: &DoaPolicy,
    n: usize,
    master_seed: u64,
) -> Result<Vec<Snapshot>> {
    generate_dataset(
        array,
        &caps.with_xi(xi),
        &StageSchedule::Fixed {
            stage: CurriculumStage::AllEffects,
        },
        n,
        (snr_db, snr_db),
        policy,
        seed::derive(master_seed, TRIAL_STREAM, 0),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// RMSE and median runtime of each estimator on the same snapshots.
pub fn evaluate_point(
    set: &EstimatorSet<'_>,
    methods: &[Method],
    snaps: &[Snapshot],
    value: f64,
) -> Result<Vec<ResultRow>> {
    let per_trial: Vec<Vec<(f64, f64)>> = snaps
        .par_iter()
        .map(|s| {
            methods
                .iter()
                .map(|&m| {
                    let t = Instant::now();
                    let (_, est) = set.run(m, s)?;
                    let ms = t.elapsed().as_secs_f64() * 1e3;
                    Ok((sorted_squared_error(&est.doas, &s.truth.doas), ms))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let k = set.k as f64;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let se: f64 = per_trial.iter().map(|t| t[j].0).sum();
            ResultRow {
                estimator: m,
                value,
                rmse_deg: (se / (snaps.len() as f64 * k)).sqrt(),
                n_trials: snaps.len(),
                median_runtime_ms: median(per_trial.iter().map(|t| t[j].1).collect()),
            }
        })
        .collect())
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.estimator
            .name()
            .cmp(b.estimator.name())
            .then(a.value.total_cmp(&b.value))
    });
}

fn estimator_set<'a>(
    cfg: &ExperimentConfig,
    model: Option<&'a NetworkParams>,
) -> Result<EstimatorSet<'a>> {
    Ok(EstimatorSet {
        grid: cfg.eval_grid()?,
        k: cfg.eval.doa_policy.n_sources,
        min_separation_deg: cfg.eval.min_separation_deg,
        anm: cfg.eval.anm.clone(),
        model,
    })
}

/// RMSE against SNR at the configured ξ.
pub fn sweep_snr(cfg: &ExperimentConfig, model: Option<&NetworkParams>) -> Result<Vec<ResultRow>> {
    let methods = cfg.methods()?;
    let set = estimator_set(cfg, model)?;
    let mut rows = Vec::new();
    for snr in cfg.eval.snr_sweep.values()? {
        let snaps = trial_snapshots(
            &cfg.array,
            &cfg.caps,
            cfg.eval.xi,
            snr,
            &cfg.eval.doa_policy,
            cfg.eval.n_trials,
            cfg.seed,
        )?;
        rows.extend(evaluate_point(&set, &methods, &snaps, snr)?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// RMSE against ξ at the configured SNR.
pub fn sweep_xi(cfg: &ExperimentConfig, model: Option<&NetworkParams>) -> Result<Vec<ResultRow>> {
    let methods = cfg.methods()?;
    let set = estimator_set(cfg, model)?;
    let mut rows = Vec::new();
    for &xi in &cfg.eval.xi_sweep {
        let snaps = trial_snapshots(
            &cfg.array,
            &cfg.caps,
            xi,
            cfg.eval.snr_db,
            &cfg.eval.doa_policy,
            cfg.eval.n_trials,
            cfg.seed,
        )?;
        rows.extend(evaluate_point(&set, &methods, &snaps, xi)?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// One snapshot for the overlay scenario.
pub fn scenario_snapshot(cfg: &ExperimentConfig) -> Result<Snapshot> {
    let sc = &cfg.spectrum;
    let n = cfg.array.n_antennas;
    let realization = if sc.xi > 0.0 {
        crate::array::sample_imperfections(
            n,
            &cfg.caps.with_xi(sc.xi),
            CurriculumStage::AllEffects,
            seed::derive(cfg.seed, stream::REALIZATION, 0),
        )?
    } else {
        ImperfectionRealization::perfect(n)
    };
    crate::array::synthesize_snapshot(
        &cfg.array,
        &realization,
        &SourceSet::unit(&sc.doas)?,
        sc.snr_db,
        seed::derive(cfg.seed, stream::NOISE, 0),
    )
}

/// Unit-peak spectra of every configured estimator on the scenario snapshot.
pub fn spectrum_overlay(
    cfg: &ExperimentConfig,
    model: Option<&NetworkParams>,
) -> Result<Vec<(Method, Spectrum, DoaEstimate)>> {
    let snap = scenario_snapshot(cfg)?;
    let set = EstimatorSet {
        k: cfg.spectrum.doas.len(),
        ..estimator_set(cfg, model)?
    };
    cfg.methods()?
        .into_iter()
        .map(|m| {
            let (spec, est) = set.run(m, &snap)?;
            Ok((m, spec.normalized(), est))
        })
        .collect()
}

/// File stem used for an estimator's spectrum export.
pub fn spectrum_file_name(m: Method) -> String {
    match m {
        Method::Omp => "spectrum_omp_sticks.csv".into(),
        _ => format!("spectrum_{m}.csv"),
    }
}
