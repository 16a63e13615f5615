#![allow(dead_code)]

use sdoa::array::{
    generate_dataset, ArrayConfig, CurriculumStage, DoaPolicy, ImperfectionCaps, Snapshot,
    StageSchedule,
};
use sdoa::net::{
    batch_loss, forward, init_params, loss_and_grad, stack_batch, LossContext, Mode, NetConfig,
    NetworkParams,
};
use sdoa::spectrum::AngleGrid;

pub fn batch(n: usize, count: usize, stage: CurriculumStage, seed: u64) -> Vec<Snapshot> {
    generate_dataset(
        &ArrayConfig::ula(n),
        &ImperfectionCaps::default(),
        &StageSchedule::Fixed { stage },
        count,
        (0.0, 30.0),
        &DoaPolicy::default(),
        seed,
    )
    .unwrap()
}

pub struct GradCheck {
    pub group: String,
    pub checked: usize,
    pub skipped: usize,
    pub worst_rel: f64,
    pub failures: usize,
    pub worst_abs: f64,
    pub max_grad: f64,
}

fn relu_pattern(params: &NetworkParams, y: &[f64]) -> Vec<bool> {
    let (_, cache) = forward(params, y, Mode::Train).unwrap();
    cache
        .unwrap()
        .blocks
        .iter()
        .flat_map(|b| {
            b.pre_activation
                .iter()
                .map(|v| *v > 0.0)
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Central differences with step `h` on `per_group` sampled coordinates per
/// trainable group. A coordinate whose ±h perturbation flips any ReLU is
/// replaced by another. Relative error uses `max(|a|, |f|, floor)` as the
/// denominator, with `floor = floor_rel · max |∇L|` over the whole network;
/// it only matters for coordinates whose gradient vanishes analytically (conv
/// biases feeding batch norm).
pub fn gradient_check(
    seed: u64,
    per_group: usize,
    h: f64,
    tol: f64,
    floor_rel: f64,
) -> Vec<GradCheck> {
    use rand::Rng;
    let cfg = NetConfig::default();
    let params = init_params(&cfg, seed).unwrap();
    let data = batch(cfg.n_antennas, 8, CurriculumStage::AllEffects, seed ^ 0xabc);
    let ctx = LossContext::new(AngleGrid::training(), cfg.n_antennas, 100.0, 1.0).unwrap();
    let analytic = loss_and_grad(&params, &data, &ctx).unwrap().grads;
    let floor = floor_rel
        * analytic
            .trainable()
            .iter()
            .flat_map(|g| g.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let y = stack_batch(&data, cfg.n_antennas).unwrap();
    let base_pattern = relu_pattern(&params, &y);
    let mut rng = sdoa::seed::rng(seed.wrapping_add(1));

    let names = params.group_names();
    let sizes: Vec<usize> = params.trainable().iter().map(|g| g.len()).collect();
    let mut out = Vec::new();
    for (gi, name) in names.iter().enumerate() {
        let mut report = GradCheck {
            group: name.clone(),
            checked: 0,
            skipped: 0,
            worst_rel: 0.0,
            failures: 0,
            worst_abs: 0.0,
            max_grad: 0.0,
        };
        let mut attempts = 0;
        while report.checked < per_group.min(sizes[gi]) && attempts < 20 * per_group {
            attempts += 1;
            let idx = rng.gen_range(0..sizes[gi]);
            let mut plus = params.clone();
            plus.trainable_mut()[gi][idx] += h;
            let mut minus = params.clone();
            minus.trainable_mut()[gi][idx] -= h;
            if relu_pattern(&plus, &y) != base_pattern || relu_pattern(&minus, &y) != base_pattern {
                report.skipped += 1;
                continue;
            }
            let fd = (batch_loss(&plus, &data, &ctx).unwrap()
                - batch_loss(&minus, &data, &ctx).unwrap())
                / (2.0 * h);
            let a = analytic.trainable()[gi][idx];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
            report.worst_rel = report.worst_rel.max(rel);
            report.worst_abs = report.worst_abs.max((a - fd).abs());
            report.max_grad = report.max_grad.max(a.abs());
            if rel >= tol {
                report.failures += 1;
            }
            report.checked += 1;
        }
        out.push(report);
    }
    out
}
