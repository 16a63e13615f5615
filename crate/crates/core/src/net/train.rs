use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::backward::{loss_and_grad, LossContext};
use super::params::{init_params, NetworkParams};
use super::NetConfig;
use crate::array::{
    curriculum_stage_for, generate_dataset, ArrayConfig, CurriculumStage, DoaPolicy,
    ImperfectionCaps, Snapshot, StageSchedule,
};
use crate::error::{invalid, Error, Result};
use crate::seed::{self, stream};
use crate::spectrum::AngleGrid;

pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataMode {
    /// New samples every epoch.
    #[default]
    Fresh,
    /// One dataset per curriculum stage, generated once and reshuffled each
    /// time the stage comes round.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub samples_per_epoch: usize,
    pub snr_range_db: (f64, f64),
    pub doa_policy: DoaPolicy,
    pub sigma_bar: f64,
    pub amplitude: f64,
    pub grid_step_deg: f64,
    pub mode: DataMode,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            samples_per_epoch: 5000,
            snr_range_db: (0.0, 30.0),
            doa_policy: DoaPolicy::default(),
            sigma_bar: 100.0,
            amplitude: 1.0,
            grid_step_deg: 0.5,
            mode: DataMode::Fresh,
        }
    }
}

impl DataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_epoch == 0 {
            return Err(invalid("samples_per_epoch must be at least 1"));
        }
        if !(self.sigma_bar > 0.0 && self.amplitude > 0.0 && self.grid_step_deg > 0.0) {
            return Err(invalid(
                "sigma_bar, amplitude and grid step must be positive",
            ));
        }
        self.doa_policy.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub stage: CurriculumStage,
    pub loss: f64,
    pub wall_time: f64,
}

fn epoch_data(
    array: &ArrayConfig,
    data: &DataConfig,
    caps: &ImperfectionCaps,
    stage: CurriculumStage,
    seed: u64,
) -> Result<Vec<Snapshot>> {
    generate_dataset(
        array,
        caps,
        &StageSchedule::Fixed { stage },
        data.samples_per_epoch,
        data.snr_range_db,
        &data.doa_policy,
        seed,
    )
}

/// Curriculum training from a seeded initialization. See [`train_with`].
pub fn train(
    net_cfg: &NetConfig,
    data: &DataConfig,
    caps: &ImperfectionCaps,
    epochs: usize,
    rng_seed: u64,
) -> Result<(NetworkParams, Vec<EpochRecord>)> {
    train_with(net_cfg, data, caps, epochs, rng_seed, |_| {})
}

/// Epoch `e` trains on stage `e mod 7`. `on_epoch` is called after every
/// epoch. On a non-finite loss the error carries the history so far.
pub fn train_with(
    net_cfg: &NetConfig,
    data: &DataConfig,
    caps: &ImperfectionCaps,
    epochs: usize,
    rng_seed: u64,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(NetworkParams, Vec<EpochRecord>)> {
    if epochs == 0 {
        return Err(invalid("epochs must be at least 1"));
    }
    net_cfg.validate()?;
    data.validate()?;
    caps.validate()?;
    let array = ArrayConfig::ula(net_cfg.n_antennas);
    let ctx = LossContext::new(
        AngleGrid::full(data.grid_step_deg)?,
        net_cfg.n_antennas,
        data.sigma_bar,
        data.amplitude,
    )?;
    let mut params = init_params(net_cfg, seed::derive(rng_seed, stream::INIT, 0))?;
    let mut adam = AdamState::new(&params);
    let mut fixed: Vec<Option<Vec<Snapshot>>> = vec![None; CurriculumStage::ALL.len()];
    let mut history = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        let start = Instant::now();
        let stage = curriculum_stage_for(epoch);
        let epoch_seed = seed::derive(rng_seed, stream::EPOCH, epoch as u64);
        let owned;
        let samples: &[Snapshot] = match data.mode {
            DataMode::Fresh => {
                owned = epoch_data(&array, data, caps, stage, epoch_seed)?;
                &owned
            }
            DataMode::Fixed => {
                let slot = &mut fixed[stage.index()];
                if slot.is_none() {
                    let s = seed::derive(rng_seed, stream::EPOCH, (1 << 32) + stage.index() as u64);
                    *slot = Some(epoch_data(&array, data, caps, stage, s)?);
                }
                let mut shuffled = slot.clone().expect("filled above");
                shuffled.shuffle(&mut seed::rng(epoch_seed));
                owned = shuffled;
                &owned
            }
        };

        let mut total = 0.0;
        for batch in samples.chunks(net_cfg.batch_size) {
            let step = match loss_and_grad(&params, batch, &ctx) {
                Ok(s) => s,
                Err(Error::NonFinite(_)) => return Err(Error::Diverged { epoch, history }),
                Err(e) => return Err(e),
            };
            total += step.loss * batch.len() as f64;
            adam_step(&mut params, &step.grads, &mut adam, net_cfg.learning_rate)?;
            params.update_running_stats(&step.cache, BN_MOMENTUM);
        }
        if !params.all_finite() {
            return Err(Error::Diverged { epoch, history });
        }
        let record = EpochRecord {
            epoch,
            stage,
            loss: total / samples.len() as f64,
            wall_time: start.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.push(record);
    }
    Ok((params, history))
}
