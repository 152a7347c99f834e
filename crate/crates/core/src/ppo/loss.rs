//! PPO objectives and their analytic gradients through the mixed policy.

use crate::mixer::{combine_to_probabilities, onehot_temperature_logits};
use crate::net::{check_tensors, Gradients, PolicyParameters, Workspace};

use super::rollout::RolloutBatch;
use super::PpoError;

/// `min(ρA, clip(ρ, 1-ε, 1+ε)A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Negated mean clipped surrogate, ready for minimization.
pub fn clip_objective(
    logp_new: &[f64],
    logp_old: &[f64],
    advantages: &[f64],
    eps: f64,
) -> Result<f64, PpoError> {
    let n = logp_new.len();
    if logp_old.len() != n || advantages.len() != n {
        return Err(PpoError::LengthMismatch("clip objective inputs".into()));
    }
    let mut sum = 0.0;
    for t in 0..n {
        let ratio = (logp_new[t] - logp_old[t]).exp();
        if !ratio.is_finite() {
            return Err(PpoError::NonFiniteRatio(t));
        }
        sum += clipped_surrogate(ratio, advantages[t], eps);
    }
    Ok(-sum / n.max(1) as f64)
}

/// Mean squared error against the fixed GAE return `v_old + A`.
pub fn value_objective(v_pred: &[f64], v_old: &[f64], advantages: &[f64]) -> Result<f64, PpoError> {
    let n = v_pred.len();
    if v_old.len() != n || advantages.len() != n {
        return Err(PpoError::LengthMismatch("value objective inputs".into()));
    }
    let sum: f64 = (0..n)
        .map(|t| (v_pred[t] - (v_old[t] + advantages[t])).powi(2))
        .sum();
    Ok(sum / n.max(1) as f64)
}

/// Rescales to zero mean and unit standard deviation (population std, with a
/// 1e-8 guard in the denominator).
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len();
    if n < 2 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCoefficients {
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

/// Minibatch loss terms; the total is
/// `policy + value_coef * value - entropy_coef * entropy`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Combined PPO loss over `indices` of `batch`, with exact gradients w.r.t.
/// the adapter parameters. `advantages` is the (possibly normalized)
/// advantage column aligned with `batch`.
///
/// The base agent contributes only a constant offset to the logits, so no
/// gradient ever reaches it.
pub fn ppo_loss_and_gradients(
    params: &PolicyParameters,
    batch: &RolloutBatch,
    advantages: &[f64],
    indices: &[usize],
    coef: LossCoefficients,
    ws: &mut Workspace,
) -> Result<(LossStats, Gradients), PpoError> {
    let mut grads = params.zero_gradients();
    let stats = accumulate(
        params,
        batch,
        advantages,
        indices,
        coef,
        ws,
        Some(&mut grads),
    )?;
    check_tensors(&grads.tensors, "gradient")?;
    Ok((stats, grads))
}

/// The same loss without gradients.
pub fn ppo_loss(
    params: &PolicyParameters,
    batch: &RolloutBatch,
    advantages: &[f64],
    indices: &[usize],
    coef: LossCoefficients,
) -> Result<LossStats, PpoError> {
    let mut ws = params.new_workspace();
    accumulate(params, batch, advantages, indices, coef, &mut ws, None)
}

fn accumulate(
    params: &PolicyParameters,
    batch: &RolloutBatch,
    advantages: &[f64],
    indices: &[usize],
    coef: LossCoefficients,
    ws: &mut Workspace,
    mut grads: Option<&mut Gradients>,
) -> Result<LossStats, PpoError> {
    let b = indices.len().max(1) as f64;
    let n = params.config().action_count;
    let mut stats = LossStats {
        min_ratio: f64::INFINITY,
        ..LossStats::default()
    };
    let mut base = vec![0.0; n];
    let mut d_logits = vec![0.0; n];
    let mut clipped = 0usize;
    for &t in indices {
        let obs = batch.observation(t);
        params.forward_ws(obs, ws)?;
        match batch.base_actions[t] {
            Some(a) => base = onehot_temperature_logits(a, n, batch.temperature)?,
            None => base.iter_mut().for_each(|v| *v = 0.0),
        }
        let dist = combine_to_probabilities(&base, ws.logits(params), Some(batch.masks[t]))?;
        let a = batch.actions[t];
        let ratio = (dist.log_probs[a] - batch.log_probs[t]).exp();
        if !ratio.is_finite() {
            return Err(PpoError::NonFiniteRatio(t));
        }
        let adv = advantages[t];
        let surrogate = clipped_surrogate(ratio, adv, coef.clip_eps);
        let entropy = dist.entropy();
        let v = ws.value(params);
        let residual = v - batch.returns[t];

        stats.policy -= surrogate / b;
        stats.value += residual * residual / b;
        stats.entropy += entropy / b;
        stats.mean_ratio += ratio / b;
        stats.max_ratio = stats.max_ratio.max(ratio);
        stats.min_ratio = stats.min_ratio.min(ratio);
        if (ratio - 1.0).abs() > coef.clip_eps {
            clipped += 1;
        }

        if let Some(g) = grads.as_deref_mut() {
            // d surrogate / d log p(a): ρA on the unclipped branch, else 0.
            let unclipped =
                ratio * adv <= ratio.clamp(1.0 - coef.clip_eps, 1.0 + coef.clip_eps) * adv;
            let g_logp = if unclipped { ratio * adv } else { 0.0 };
            for j in 0..n {
                let p = dist.probabilities[j];
                if p == 0.0 && j != a {
                    d_logits[j] = 0.0;
                    continue;
                }
                let indicator = if j == a { 1.0 } else { 0.0 };
                let d_policy = -g_logp * (indicator - p);
                let d_entropy = if p > 0.0 {
                    -p * (dist.log_probs[j] + entropy)
                } else {
                    0.0
                };
                d_logits[j] = (d_policy - coef.entropy_coef * d_entropy) / b;
            }
            let d_value = 2.0 * coef.value_coef * residual / b;
            params.backward_ws(obs, ws, &d_logits, d_value, g);
        }
    }
    stats.clip_frac = clipped as f64 / b;
    stats.total = stats.policy + coef.value_coef * stats.value - coef.entropy_coef * stats.entropy;
    if !stats.total.is_finite() {
        return Err(PpoError::NonFiniteLoss(format!("{stats:?}")));
    }
    Ok(stats)
}
