//! Proximal policy optimization shared by the central and local learners.

mod buffer;
mod policy;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::nn::{adam_step, MlpGrads, NnError};

pub use buffer::{Action, BufferOwner, RolloutBuffer, Transition};
pub use policy::{ActorCritic, PolicyKind, INIT_LOG_STD, LOG_STD_MAX, LOG_STD_MIN};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("non-finite loss during update (epoch {epoch}, minibatch {minibatch}): {stats:?}")]
    NonFiniteLoss {
        epoch: usize,
        minibatch: usize,
        stats: UpdateStats,
    },
    #[error("transition does not match policy: {0}")]
    ActionMismatch(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpoHyperparams {
    pub gamma: f64,
    pub clip_epsilon: f64,
    pub lr: f64,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Transitions collected before an update is triggered.
    pub batch_size: usize,
    /// Global L2 norm bound applied to each network's gradient; `<= 0` disables.
    pub max_grad_norm: f64,
}

impl PpoHyperparams {
    pub fn central() -> Self {
        PpoHyperparams {
            lr: 3e-4,
            batch_size: 2000,
            ..Self::local()
        }
    }

    pub fn local() -> Self {
        PpoHyperparams {
            gamma: 0.95,
            clip_epsilon: 0.2,
            lr: 1e-2,
            update_epochs: 4,
            minibatch_size: 256,
            value_coef: 0.5,
            entropy_coef: 0.01,
            batch_size: 4000,
            max_grad_norm: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::InvalidHyperparams(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(self.clip_epsilon > 0.0) {
            return bad("clip_epsilon must be positive");
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr must be finite and non-negative");
        }
        if self.minibatch_size == 0 || self.batch_size == 0 {
            return bad("batch sizes must be positive");
        }
        Ok(())
    }
}

impl Default for PpoHyperparams {
    fn default() -> Self {
        Self::local()
    }
}

/// Discounted returns-to-go, restarting after every `done`. No bootstrap is
/// added past the last transition.
pub fn compute_returns(rewards: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), dones.len(), "rewards and dones differ in length");
    let mut out = vec![0.0; rewards.len()];
    let mut running = 0.0;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            running = 0.0;
        }
        running = rewards[t] + gamma * running;
        out[t] = running;
    }
    out
}

/// `returns - values`, normalized to zero mean and unit standard deviation
/// (population std, `+1e-8` in the denominator). A single element is returned raw.
pub fn compute_advantages(returns: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(returns.len(), values.len(), "returns and values differ in length");
    let raw: Vec<f64> = returns.iter().zip(values).map(|(g, v)| g - v).collect();
    if raw.len() < 2 {
        return raw;
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let std = (raw.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    raw.iter().map(|a| (a - mean) / (std + 1e-8)).collect()
}

/// `min(r * A, clip(r, 1 - eps, 1 + eps) * A)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    unclipped.min(clipped)
}

/// Averages over one update call.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    /// Mean importance ratio over the very first minibatch.
    pub first_minibatch_ratio: f64,
    pub clip_fraction: f64,
    pub samples: usize,
    pub minibatches: usize,
}

/// Runs `update_epochs` passes of shuffled minibatch PPO over `batch`.
///
/// `batch` must be a concatenation of finished trajectories per stream, as
/// produced by [`RolloutBuffer::take_ready`].
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut ActorCritic,
    batch: &[Transition],
    hp: &PpoHyperparams,
    rng: &mut R,
) -> Result<UpdateStats, PpoError> {
    hp.validate()?;
    if batch.is_empty() {
        return Ok(UpdateStats::default());
    }
    let rewards: Vec<f64> = batch.iter().map(|t| t.reward).collect();
    let dones: Vec<bool> = batch.iter().map(|t| t.done).collect();
    let values: Vec<f64> = batch.iter().map(|t| t.value_estimate).collect();
    let returns = compute_returns(&rewards, &dones, hp.gamma);
    let advantages = compute_advantages(&returns, &values);

    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut acc = UpdateStats {
        samples: batch.len(),
        ..UpdateStats::default()
    };
    let mut counted = 0usize;
    let mut clipped = 0usize;
    for epoch in 0..hp.update_epochs {
        order.shuffle(rng);
        for (mb_index, mb) in order.chunks(hp.minibatch_size).enumerate() {
            let mb_stats = minibatch_step(policy, batch, mb, &returns, &advantages, hp)?;
            if !(mb_stats.policy_loss.is_finite() && mb_stats.value_loss.is_finite()) {
                return Err(PpoError::NonFiniteLoss {
                    epoch,
                    minibatch: mb_index,
                    stats: mb_stats.stats,
                });
            }
            if epoch == 0 && mb_index == 0 {
                acc.first_minibatch_ratio = mb_stats.ratio_sum / mb.len() as f64;
            }
            acc.policy_loss += mb_stats.policy_loss;
            acc.value_loss += mb_stats.value_loss;
            acc.entropy += mb_stats.entropy;
            acc.mean_ratio += mb_stats.ratio_sum;
            clipped += mb_stats.clipped;
            counted += mb.len();
            acc.minibatches += 1;
        }
    }
    if counted > 0 {
        let n = counted as f64;
        acc.policy_loss /= n;
        acc.value_loss /= n;
        acc.entropy /= n;
        acc.mean_ratio /= n;
        acc.clip_fraction = clipped as f64 / n;
    }
    Ok(acc)
}

struct MinibatchResult {
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    ratio_sum: f64,
    clipped: usize,
    stats: UpdateStats,
}

struct MinibatchGrads {
    actor: MlpGrads,
    log_std: Vec<f64>,
    critic: MlpGrads,
}

fn minibatch_step(
    policy: &mut ActorCritic,
    batch: &[Transition],
    indices: &[usize],
    returns: &[f64],
    advantages: &[f64],
    hp: &PpoHyperparams,
) -> Result<MinibatchResult, PpoError> {
    let (res, grads) = minibatch_gradients(policy, batch, indices, returns, advantages, hp)?;
    if !(res.policy_loss.is_finite() && res.value_loss.is_finite()) {
        return Ok(res);
    }
    let MinibatchGrads {
        actor: mut actor_grads,
        log_std: mut log_std_grads,
        critic: mut critic_grads,
    } = grads;

    // actor (and log std) as one clipped vector, critic separately
    let actor_norm_sq =
        actor_grads.squared_norm() + log_std_grads.iter().map(|g| g * g).sum::<f64>();
    let scale = clip_scale(actor_norm_sq, hp.max_grad_norm);
    if scale != 1.0 {
        actor_grads.scale(scale);
        log_std_grads.iter_mut().for_each(|g| *g *= scale);
    }
    let cscale = clip_scale(critic_grads.squared_norm(), hp.max_grad_norm);
    if cscale != 1.0 {
        critic_grads.scale(cscale);
    }

    let ActorCritic {
        actor,
        critic,
        log_std,
        actor_opt,
        critic_opt,
        ..
    } = policy;
    let mut params = actor.tensors_mut();
    let mut grads = actor_grads.tensors();
    if !log_std.is_empty() {
        params.push(log_std.as_mut_slice());
        grads.push(&log_std_grads);
    }
    adam_step(&mut params, &grads, actor_opt, hp.lr)?;
    adam_step(&mut critic.tensors_mut(), &critic_grads.tensors(), critic_opt, hp.lr)?;
    for ls in log_std.iter_mut() {
        *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
    }
    Ok(res)
}

/// Loss `mean(-surrogate - c_e * H + c_v * (V - G)^2)` over `indices` and its
/// gradients with respect to every actor, log-std and critic parameter.
fn minibatch_gradients(
    policy: &ActorCritic,
    batch: &[Transition],
    indices: &[usize],
    returns: &[f64],
    advantages: &[f64],
    hp: &PpoHyperparams,
) -> Result<(MinibatchResult, MinibatchGrads), PpoError> {
    let inv_n = 1.0 / indices.len() as f64;
    let eps = hp.clip_epsilon;
    let mut actor_grads = MlpGrads::zeros_like(&policy.actor);
    let mut critic_grads = MlpGrads::zeros_like(&policy.critic);
    let mut log_std_grads = vec![0.0; policy.log_std.len()];
    let mut res = MinibatchResult {
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        ratio_sum: 0.0,
        clipped: 0,
        stats: UpdateStats::default(),
    };

    for &i in indices {
        let tr = &batch[i];
        let adv = advantages[i];
        let trace = policy.actor.forward_trace(&tr.observation)?;

        // d(surrogate)/d(log pi) is r * A on the unclipped branch, zero otherwise
        let surrogate_grad = |logp: f64, res: &mut MinibatchResult| {
            let ratio = (logp - tr.log_prob_old).exp();
            let unclipped = ratio * adv;
            let clipped_val = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
            res.ratio_sum += ratio;
            res.policy_loss -= unclipped.min(clipped_val);
            if clipped_val < unclipped {
                res.clipped += 1;
                0.0
            } else {
                unclipped
            }
        };

        match (&tr.action, policy.kind()) {
            (Action::Discrete(a), PolicyKind::Categorical) => {
                let p = trace.output();
                let a = *a;
                if a >= p.len() {
                    return Err(PpoError::ActionMismatch(format!("action {a} out of range")));
                }
                let logp = p[a].max(f64::MIN_POSITIVE).ln();
                let entropy: f64 = -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>();
                res.entropy += entropy;
                let g = surrogate_grad(logp, &mut res);
                // loss = -(surrogate + c_e * H) / n, gradients taken on the logits
                let dlogits: Vec<f64> = p
                    .iter()
                    .enumerate()
                    .map(|(j, &pj)| {
                        let dlogp = if j == a { 1.0 - pj } else { -pj };
                        let dent = if pj > 0.0 { -pj * (pj.ln() + entropy) } else { 0.0 };
                        -(g * dlogp + hp.entropy_coef * dent) * inv_n
                    })
                    .collect();
                policy.actor.backward_logits(&trace, &dlogits, &mut actor_grads)?;
            }
            (Action::Continuous(x), PolicyKind::Gaussian { block_len }) => {
                if x.len() != block_len {
                    return Err(PpoError::ActionMismatch(format!(
                        "continuous action of length {} for block length {block_len}",
                        x.len()
                    )));
                }
                let off = tr.block * block_len;
                if off + block_len > policy.log_std.len() {
                    return Err(PpoError::ActionMismatch(format!("block {} out of range", tr.block)));
                }
                let mean = &trace.output()[off..off + block_len];
                let log_std = &policy.log_std[off..off + block_len];
                let mut logp = 0.0;
                let mut entropy = 0.0;
                for k in 0..block_len {
                    let z = (x[k] - mean[k]) / log_std[k].exp();
                    logp += -0.5 * z * z - log_std[k] - 0.5 * LN_2PI;
                    entropy += 0.5 + 0.5 * LN_2PI + log_std[k];
                }
                res.entropy += entropy;
                let g = surrogate_grad(logp, &mut res);
                let mut upstream = vec![0.0; trace.output().len()];
                for k in 0..block_len {
                    let sigma = log_std[k].exp();
                    let z = (x[k] - mean[k]) / sigma;
                    upstream[off + k] = -g * (z / sigma) * inv_n;
                    log_std_grads[off + k] += -(g * (z * z - 1.0) + hp.entropy_coef) * inv_n;
                }
                policy.actor.backward_trace(&trace, &upstream, &mut actor_grads)?;
            }
            (a, k) => {
                return Err(PpoError::ActionMismatch(format!("{a:?} for {k:?} policy")));
            }
        }

        let ctrace = policy.critic.forward_trace(&tr.observation)?;
        let v = ctrace.output()[0];
        let diff = v - returns[i];
        res.value_loss += diff * diff;
        policy
            .critic
            .backward_trace(&ctrace, &[2.0 * hp.value_coef * diff * inv_n], &mut critic_grads)?;
    }

    res.stats = UpdateStats {
        policy_loss: res.policy_loss * inv_n,
        value_loss: res.value_loss * inv_n,
        entropy: res.entropy * inv_n,
        mean_ratio: res.ratio_sum * inv_n,
        samples: indices.len(),
        ..UpdateStats::default()
    };
    Ok((
        res,
        MinibatchGrads {
            actor: actor_grads,
            log_std: log_std_grads,
            critic: critic_grads,
        },
    ))
}

fn clip_scale(norm_sq: f64, max_norm: f64) -> f64 {
    let norm = norm_sq.sqrt();
    if max_norm > 0.0 && norm > max_norm {
        max_norm / norm
    } else {
        1.0
    }
}
