use rand::Rng;

use super::{action_encoding_dim, symmetric_unit, HammerError};
use crate::env::{TaskKind, NUM_DISCRETE_ACTIONS};
use crate::ppo::{Action, ActorCritic};

/// Central input: all observations in agent order, then every agent's
/// previous-action encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalInput(pub Vec<f64>);

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub values: Vec<f64>,
    pub recipient: usize,
}

/// Output of one central forward pass.
#[derive(Clone, Debug)]
pub struct MessageBatch {
    /// Clipped messages, one per agent.
    pub messages: Vec<Message>,
    /// Unclipped samples per block, as stored for the PPO ratio.
    pub raw: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub value: f64,
}

/// `previous_actions = None` means the first step, where every slot is zero.
pub fn build_global_input(
    observations: &[Vec<f64>],
    previous_actions: Option<&[Action]>,
    task: TaskKind,
) -> Result<GlobalInput, HammerError> {
    let n = observations.len();
    let obs_dim = observations.first().map_or(0, Vec::len);
    if observations.iter().any(|o| o.len() != obs_dim) {
        return Err(HammerError::Dimension("observations differ in length".into()));
    }
    let enc = action_encoding_dim(task);
    let mut g = Vec::with_capacity(n * (obs_dim + enc));
    for o in observations {
        g.extend_from_slice(o);
    }
    match previous_actions {
        None => g.resize(g.len() + n * enc, 0.0),
        Some(actions) => {
            if actions.len() != n {
                return Err(HammerError::Dimension(format!(
                    "{} previous actions for {n} agents",
                    actions.len()
                )));
            }
            for a in actions {
                match (task, a) {
                    (TaskKind::Nav, Action::Discrete(k)) if *k < NUM_DISCRETE_ACTIONS => {
                        let mut one_hot = [0.0; NUM_DISCRETE_ACTIONS];
                        one_hot[*k] = 1.0;
                        g.extend_from_slice(&one_hot);
                    }
                    // the env clamps forces, so the central agent sees the applied ones
                    (TaskKind::NavContinuous, Action::Continuous(x)) if x.len() == 2 => {
                        g.extend(x.iter().map(|v| v.clamp(-1.0, 1.0)));
                    }
                    _ => {
                        return Err(HammerError::Dimension(format!(
                            "previous action {a:?} does not fit task {}",
                            task.as_str()
                        )))
                    }
                }
            }
        }
    }
    Ok(GlobalInput(g))
}

/// One forward pass of the central actor, split into `n` blocks of `m`.
/// Without `stochastic` the messages are the tanh means themselves.
pub fn emit_messages<R: Rng + ?Sized>(
    central: &ActorCritic,
    g: &GlobalInput,
    n: usize,
    m: usize,
    rng: &mut R,
    stochastic: bool,
) -> Result<MessageBatch, HammerError> {
    let dist = central.gaussian_dist(&g.0)?;
    if dist.mean().len() != n * m {
        return Err(HammerError::Dimension(format!(
            "central output {} for {n} messages of length {m}",
            dist.mean().len()
        )));
    }
    let sample = if stochastic {
        dist.sample(rng)
    } else {
        dist.mean().to_vec()
    };
    let value = central.value(&g.0)?;
    let mut batch = MessageBatch {
        messages: Vec::with_capacity(n),
        raw: Vec::with_capacity(n),
        log_probs: Vec::with_capacity(n),
        value,
    };
    for i in 0..n {
        let raw = sample[i * m..(i + 1) * m].to_vec();
        let values: Vec<f64> = raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        debug_assert!(values.iter().all(|v| (-1.0..=1.0).contains(v)));
        batch.log_probs.push(central.block_log_prob(dist.mean(), i, &raw));
        batch.raw.push(raw);
        batch.messages.push(Message { values, recipient: i });
    }
    Ok(batch)
}

/// Fresh i.i.d. `U[-1, 1]^m` message per agent.
pub fn random_messages<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| symmetric_unit(rng)).collect())
        .collect()
}

pub fn augment_observation(obs: &[f64], message: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(obs.len() + message.len());
    v.extend_from_slice(obs);
    v.extend_from_slice(message);
    v
}

/// Joint observation for agent `ego`: its own block first, then the others
/// in index order.
pub fn joint_observation(observations: &[Vec<f64>], ego: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(observations.iter().map(Vec::len).sum());
    v.extend_from_slice(&observations[ego]);
    for (j, o) in observations.iter().enumerate() {
        if j != ego {
            v.extend_from_slice(o);
        }
    }
    v
}

/// Message `i` is rewarded with what agent `i` received.
pub fn assign_central_rewards(local_rewards: &[f64]) -> Vec<f64> {
    local_rewards.to_vec()
}
