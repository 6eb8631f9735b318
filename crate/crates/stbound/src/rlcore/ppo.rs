//! Clipped-ratio policy updates with hand-derived gradients, plus the value
//! regression that feeds the advantage estimates.

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::{adam_update, AdamState, Mlp, NnError};

use super::returns::{gae, td_lambda_targets};
use super::{Episode, PolicyNet, TrainConfig};

/// One update sample: everything needed to recompute the policy ratio.
#[derive(Debug, Clone)]
pub struct SampleRow {
    pub features: Vec<f64>,
    pub default_action: Vec<f64>,
    pub action: Vec<f64>,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub target: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SampleBatch {
    pub rows: Vec<SampleRow>,
}

/// Flatten episodes into update rows. Advantages are estimated per episode
/// with the stored bootstrap, then normalized over the whole batch.
pub fn assemble_batch(episodes: &[Episode], gamma: f64, lambda: f64) -> SampleBatch {
    let mut rows = Vec::new();
    for ep in episodes {
        let rewards: Vec<f64> = ep.transitions.iter().map(|t| t.reward).collect();
        let values: Vec<f64> = ep.transitions.iter().map(|t| t.value).collect();
        let adv = gae(&rewards, &values, ep.bootstrap, gamma, lambda);
        let tgt = td_lambda_targets(&rewards, &values, ep.bootstrap, gamma, lambda);
        for (i, tr) in ep.transitions.iter().enumerate() {
            rows.push(SampleRow {
                features: tr.features.clone(),
                default_action: tr.default_action.clone(),
                action: tr.action.clone(),
                old_log_prob: tr.log_prob,
                advantage: adv[i],
                target: tgt[i],
            });
        }
    }
    normalize_advantages(&mut rows);
    SampleBatch { rows }
}

/// Shift to zero mean and unit standard deviation; a single-sample or
/// zero-variance batch is left centered only.
pub fn normalize_advantages(rows: &mut [SampleRow]) {
    if rows.is_empty() {
        return;
    }
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.advantage).sum::<f64>() / n;
    let var = rows
        .iter()
        .map(|r| (r.advantage - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    for r in rows.iter_mut() {
        r.advantage -= mean;
        if std > 1e-8 {
            r.advantage /= std;
        }
    }
}

/// Per-sample surrogate evaluation: loss, ratio, whether the clipped branch
/// was active, and gradients with respect to the feedback net outputs and
/// the log standard deviations.
pub struct SurrogateEval {
    pub loss: f64,
    pub ratio: f64,
    pub clipped: bool,
    /// d loss / d mean_i, to backpropagate through the feedback net
    pub mean_grad: Vec<f64>,
    pub log_std_grad: Vec<f64>,
}

/// Loss is -min(ratio * A, clip(ratio, 1 +/- eps) * A). When the unclipped
/// term attains the min the gradient coefficient is -ratio * A; otherwise
/// the sample contributes nothing to the policy gradient.
pub fn surrogate(
    policy: &PolicyNet,
    mean: &[f64],
    row: &SampleRow,
    clip: f64,
) -> SurrogateEval {
    let dim = mean.len();
    let new_lp = policy.head.log_prob(mean, &row.action);
    let ratio = (new_lp - row.old_log_prob).exp();
    let a = row.advantage;
    let clipped_ratio = ratio.max(1.0 - clip).min(1.0 + clip);
    let unclipped = ratio * a;
    let clipped_term = clipped_ratio * a;
    let loss = -unclipped.min(clipped_term);
    let active = unclipped <= clipped_term;
    let coeff = if active { -ratio * a } else { 0.0 };
    let mut mean_grad = vec![0.0; dim];
    let mut log_std_grad = vec![0.0; dim];
    if coeff != 0.0 {
        for i in 0..dim {
            let std = policy.head.log_std[i].exp();
            let z = (row.action[i] - mean[i]) / std;
            // d log_prob / d mean_i and / d log_std_i
            mean_grad[i] = coeff * z / std;
            log_std_grad[i] = coeff * (z * z - 1.0);
        }
    }
    SurrogateEval {
        loss,
        ratio,
        clipped: (ratio - 1.0).abs() > clip,
        mean_grad,
        log_std_grad,
    }
}

/// Adam states for the actor (feedback net plus log stds) and the critic.
pub struct PpoOptimizer {
    pub actor: AdamState<f64>,
    pub critic: AdamState<f64>,
}

impl PpoOptimizer {
    pub fn new(policy: &PolicyNet, value_net: &Mlp) -> Self {
        PpoOptimizer {
            actor: AdamState::new(policy.fbc.param_count() + policy.head.log_std.len()),
            critic: AdamState::new(value_net.param_count()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PpoStats {
    pub actor_loss: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
    pub mean_ratio: f64,
    pub skipped: usize,
}

fn clamp_log_std(log_std: &mut [f64]) {
    for ls in log_std.iter_mut() {
        *ls = ls.clamp((0.01f64).ln(), (2.0f64).ln());
    }
}

/// Run `update_epochs` passes of shuffled minibatch updates over the batch.
/// Samples with non-finite intermediate values are skipped and counted.
/// Returned stats average over the final pass.
pub fn ppo_update<R: Rng>(
    policy: &mut PolicyNet,
    value_net: &mut Mlp,
    opt: &mut PpoOptimizer,
    batch: &SampleBatch,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<PpoStats, NnError> {
    let n = batch.rows.len();
    let mut stats = PpoStats::default();
    if n == 0 {
        return Ok(stats);
    }
    let mb = cfg.minibatch_size.max(1);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.update_epochs.max(1) {
        order.shuffle(rng);
        let last = epoch + 1 == cfg.update_epochs.max(1);
        if last {
            stats = PpoStats::default();
        }
        for chunk in order.chunks(mb) {
            let mut actor_grads = Mlp::zeros(&layer_sizes(&policy.fbc))?;
            let mut log_std_grads = vec![0.0; policy.head.log_std.len()];
            let mut critic_grads = Mlp::zeros(&layer_sizes(value_net))?;
            let mut used = 0usize;
            let mut mb_actor_loss = 0.0;
            let mut mb_value_loss = 0.0;
            let mut mb_clipped = 0usize;
            let mut mb_ratio = 0.0;
            for &i in chunk {
                let row = &batch.rows[i];
                let delta = policy.fbc.forward(&row.features)?;
                let mean: Vec<f64> = row
                    .default_action
                    .iter()
                    .zip(delta.iter())
                    .map(|(d, c)| d + c)
                    .collect();
                let ev = surrogate(policy, &mean, row, cfg.clip_ratio);
                let v = value_net.forward(&row.features)?[0];
                let verr = v - row.target;
                if !ev.loss.is_finite()
                    || !ev.ratio.is_finite()
                    || ev.mean_grad.iter().any(|g| !g.is_finite())
                    || !verr.is_finite()
                {
                    stats.skipped += 1;
                    continue;
                }
                policy
                    .fbc
                    .forward_and_accumulate(&row.features, &ev.mean_grad, &mut actor_grads)?;
                for (g, s) in log_std_grads.iter_mut().zip(ev.log_std_grad.iter()) {
                    *g += s;
                }
                value_net.forward_and_accumulate(
                    &row.features,
                    &[2.0 * verr],
                    &mut critic_grads,
                )?;
                used += 1;
                mb_actor_loss += ev.loss;
                mb_value_loss += verr * verr;
                mb_ratio += ev.ratio;
                if ev.clipped {
                    mb_clipped += 1;
                }
            }
            if used == 0 {
                continue;
            }
            let inv = 1.0 / used as f64;
            let mut actor_flat = actor_grads.flatten();
            actor_flat.extend(log_std_grads.iter());
            for g in actor_flat.iter_mut() {
                *g *= inv;
            }
            let mut actor_params = policy.fbc.flatten();
            actor_params.extend(policy.head.log_std.iter());
            adam_update(&mut actor_params, &actor_flat, &mut opt.actor, cfg.actor_lr);
            let split = policy.fbc.param_count();
            policy.fbc.set_from_flat(&actor_params[..split]);
            policy.head.log_std.copy_from_slice(&actor_params[split..]);
            clamp_log_std(&mut policy.head.log_std);

            let mut critic_flat = critic_grads.flatten();
            for g in critic_flat.iter_mut() {
                *g *= inv;
            }
            let mut critic_params = value_net.flatten();
            adam_update(
                &mut critic_params,
                &critic_flat,
                &mut opt.critic,
                cfg.critic_lr,
            );
            value_net.set_from_flat(&critic_params);

            if last {
                stats.actor_loss += mb_actor_loss;
                stats.value_loss += mb_value_loss;
                stats.mean_ratio += mb_ratio;
                stats.clip_fraction += mb_clipped as f64;
            }
        }
    }
    let denom = n as f64;
    stats.actor_loss /= denom;
    stats.value_loss /= denom;
    stats.mean_ratio /= denom;
    stats.clip_fraction /= denom;
    Ok(stats)
}

fn layer_sizes<F: Float>(net: &Mlp<F>) -> Vec<usize> {
    let mut sizes = vec![net.input_dim()];
    sizes.extend(net.layers.iter().map(|l| l.rows));
    sizes
}
