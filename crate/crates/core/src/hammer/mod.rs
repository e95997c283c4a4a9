//! Central messaging agent and the joint training loop.
//!
//! Every step, the central agent reads all local observations followed by
//! each agent's previous action, and emits one message block per agent from
//! a single forward pass. Each local agent appends its message to its own
//! observation and acts with the shared local policy. The central agent's
//! transition for message `i` is rewarded with whatever agent `i` received.
//!
//! Besides the full method, [`RunMode`] selects the three comparison
//! conditions: unaided independent learners, independent learners fed
//! uniform random messages, and shared learners fed the joint observation.

mod messages;

use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use crate::env::{EnvError, NavWorld, PhysicsParams, TaskKind, NUM_DISCRETE_ACTIONS};
use crate::exp::config::{ConfigError, ExperimentConfig};
use crate::exp::rng::{stream, RunRng};
use crate::nn::{Checkpoint, Head, NnError};
use crate::ppo::{
    ppo_update, Action, ActorCritic, BufferOwner, PpoError, RolloutBuffer, Transition,
    UpdateStats,
};

pub use messages::{
    assign_central_rewards, augment_observation, build_global_input, emit_messages,
    joint_observation, random_messages, GlobalInput, Message, MessageBatch,
};

#[derive(Debug, Error)]
pub enum HammerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite network state after episode {episode}: {what}")]
    NonFiniteState { episode: usize, what: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunMode {
    /// Central agent learns messages for the local learners.
    Hammer,
    /// Local learners act on their own observation only.
    Independent,
    /// Local learners receive fresh `U[-1, 1]^m` messages every step.
    RandomMessage,
    /// Local learners receive the joint observation of all agents.
    Centralized,
}

impl RunMode {
    pub const ALL: [RunMode; 4] = [
        RunMode::Hammer,
        RunMode::Independent,
        RunMode::RandomMessage,
        RunMode::Centralized,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Hammer => "hammer",
            RunMode::Independent => "independent",
            RunMode::RandomMessage => "random_message",
            RunMode::Centralized => "centralized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hammer" => Some(RunMode::Hammer),
            "independent" | "il" => Some(RunMode::Independent),
            "random_message" | "random-message" | "random" => Some(RunMode::RandomMessage),
            "centralized" | "centralised" => Some(RunMode::Centralized),
            _ => None,
        }
    }

    pub fn uses_messages(self) -> bool {
        matches!(self, RunMode::Hammer | RunMode::RandomMessage)
    }
}

/// Length of one agent's previous-action slot in the central input.
pub fn action_encoding_dim(task: TaskKind) -> usize {
    match task {
        TaskKind::Nav => NUM_DISCRETE_ACTIONS,
        TaskKind::NavContinuous => 2,
    }
}

/// The central actor-critic (hammer mode only) and the one local
/// actor-critic shared by every agent.
#[derive(Clone, Debug)]
pub struct PolicyBundle {
    pub central: Option<ActorCritic>,
    pub local: ActorCritic,
}

impl PolicyBundle {
    pub fn new(config: &ExperimentConfig, obs_dim: usize) -> Result<Self, HammerError> {
        let n = config.n_agents;
        let m = config.message_length;
        let hidden = config.hidden_width;
        let local_in = local_input_dim(config.mode, n, obs_dim, m);
        let mut local_rng = stream(config.seed, "local-init");
        let local = match config.env {
            TaskKind::Nav => {
                ActorCritic::categorical(local_in, hidden, NUM_DISCRETE_ACTIONS, &mut local_rng)?
            }
            TaskKind::NavContinuous => {
                ActorCritic::gaussian(local_in, hidden, 2, 2, Head::Linear, &mut local_rng)?
            }
        };
        let central = if config.mode == RunMode::Hammer {
            let central_in = n * obs_dim + n * action_encoding_dim(config.env);
            let mut rng = stream(config.seed, "central-init");
            Some(ActorCritic::gaussian(central_in, hidden, n * m, m, Head::Tanh, &mut rng)?)
        } else {
            None
        };
        Ok(PolicyBundle { central, local })
    }

    pub fn save(&self, ck: &mut Checkpoint) {
        if let Some(c) = &self.central {
            c.save(ck, "central");
        }
        self.local.save(ck, "local");
    }

    pub fn load(ck: &Checkpoint, with_central: bool) -> Result<Self, HammerError> {
        Ok(PolicyBundle {
            central: if with_central {
                Some(ActorCritic::load(ck, "central")?)
            } else {
                None
            },
            local: ActorCritic::load(ck, "local")?,
        })
    }
}

/// Input length of the shared local network in each mode.
pub fn local_input_dim(mode: RunMode, n_agents: usize, obs_dim: usize, message_length: usize) -> usize {
    match mode {
        RunMode::Hammer | RunMode::RandomMessage => obs_dim + message_length,
        RunMode::Independent => obs_dim,
        RunMode::Centralized => n_agents * obs_dim,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeSummary {
    /// Undiscounted reward summed over the episode, per agent.
    pub returns: Vec<f64>,
    pub mean_reward_per_agent: f64,
    /// Colliding pairs summed over all steps.
    pub collisions: usize,
    pub central_update: Option<UpdateStats>,
    pub local_update: Option<UpdateStats>,
    pub central_transitions: usize,
    pub local_transitions: usize,
    pub wall_ms: u64,
}

/// Per-episode mean reward per agent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearningCurve {
    pub mean_reward_per_agent: Vec<f64>,
}

struct Streams {
    env: RunRng,
    central: RunRng,
    local: RunRng,
    messages: RunRng,
}

/// Local-side decision of one step.
struct LocalStep {
    inputs: Vec<Vec<f64>>,
    actions: Vec<Action>,
    log_probs: Vec<f64>,
    values: Vec<f64>,
}

/// One training run: policies, world, buffers and random streams.
pub struct Session {
    config: ExperimentConfig,
    bundle: PolicyBundle,
    world: NavWorld,
    obs_dim: usize,
    central_buffer: Option<RolloutBuffer>,
    local_buffer: RolloutBuffer,
    streams: Streams,
    episodes_done: usize,
}

impl Session {
    pub fn new(config: ExperimentConfig) -> Result<Self, HammerError> {
        config.validate()?;
        let world = NavWorld::new(config.n_agents, PhysicsParams::default())?;
        let obs_dim = world.obs_dim();
        let bundle = PolicyBundle::new(&config, obs_dim)?;
        let central_buffer = bundle
            .central
            .as_ref()
            .map(|_| RolloutBuffer::new(config.hp_central.batch_size, BufferOwner::Central));
        let local_buffer = RolloutBuffer::new(config.hp_local.batch_size, BufferOwner::Local);
        let seed = config.seed;
        Ok(Session {
            streams: Streams {
                env: stream(seed, "env"),
                central: stream(seed, "central-policy"),
                local: stream(seed, "local-policy"),
                messages: stream(seed, "random-messages"),
            },
            config,
            bundle,
            world,
            obs_dim,
            central_buffer,
            local_buffer,
            episodes_done: 0,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn bundle(&self) -> &PolicyBundle {
        &self.bundle
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    /// Transitions currently held by the central and local buffers.
    pub fn buffer_lens(&self) -> (usize, usize) {
        (
            self.central_buffer.as_ref().map_or(0, RolloutBuffer::len),
            self.local_buffer.len(),
        )
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.put_scalar("episodes_done", self.episodes_done as f64);
        self.bundle.save(&mut ck);
        ck
    }

    /// Runs one training episode, updating either learner whenever its
    /// buffer reaches capacity.
    pub fn run_episode(&mut self) -> Result<EpisodeSummary, HammerError> {
        let start = Instant::now();
        let n = self.config.n_agents;
        let m = self.config.message_length;
        let mode = self.config.mode;
        let task = self.config.env;
        let mut obs = self.world.reset(&mut self.streams.env);
        let mut prev_actions: Option<Vec<Action>> = None;
        let mut summary = EpisodeSummary {
            returns: vec![0.0; n],
            ..EpisodeSummary::default()
        };

        loop {
            // central agent: one message block per local agent
            let central_out = match (&self.bundle.central, mode) {
                (Some(central), RunMode::Hammer) => {
                    let g = build_global_input(&obs, prev_actions.as_deref(), task)?;
                    let batch = emit_messages(central, &g, n, m, &mut self.streams.central, true)?;
                    Some((g, batch))
                }
                _ => None,
            };
            let messages: Option<Vec<Vec<f64>>> = match mode {
                RunMode::Hammer => central_out
                    .as_ref()
                    .map(|(_, b)| b.messages.iter().map(|m| m.values.clone()).collect()),
                RunMode::RandomMessage => Some(random_messages(n, m, &mut self.streams.messages)),
                _ => None,
            };

            let local = self.local_decisions(&obs, messages.as_deref(), true)?;
            let result = self.step_world(&local.actions)?;

            let central_rewards = assign_central_rewards(&result.rewards);
            if let (Some((g, batch)), Some(buf)) = (central_out, self.central_buffer.as_mut()) {
                for (i, reward) in central_rewards.into_iter().enumerate() {
                    buf.push(Transition {
                        observation: g.0.clone(),
                        action: Action::Continuous(batch.raw[i].clone()),
                        log_prob_old: batch.log_probs[i],
                        reward,
                        done: result.done,
                        value_estimate: batch.value,
                        stream: i,
                        block: i,
                    });
                }
                summary.central_transitions += n;
            }
            for (i, ((input, action), (lp, v))) in local
                .inputs
                .into_iter()
                .zip(local.actions.iter().cloned())
                .zip(local.log_probs.into_iter().zip(local.values))
                .enumerate()
            {
                self.local_buffer.push(Transition {
                    observation: input,
                    action,
                    log_prob_old: lp,
                    reward: result.rewards[i],
                    done: result.done,
                    value_estimate: v,
                    stream: i,
                    block: 0,
                });
            }
            summary.local_transitions += n;
            for (ret, r) in summary.returns.iter_mut().zip(&result.rewards) {
                *ret += r;
            }
            summary.collisions += result.collisions;

            if let Some(stats) = self.maybe_update_central()? {
                summary.central_update = Some(stats);
            }
            if let Some(stats) = self.maybe_update_local()? {
                summary.local_update = Some(stats);
            }

            obs = result.observations;
            prev_actions = Some(local.actions);
            if result.done {
                break;
            }
        }

        self.episodes_done += 1;
        summary.mean_reward_per_agent = summary.returns.iter().sum::<f64>() / n as f64;
        summary.wall_ms = start.elapsed().as_millis() as u64;
        Ok(summary)
    }

    fn local_decisions(
        &mut self,
        obs: &[Vec<f64>],
        messages: Option<&[Vec<f64>]>,
        stochastic: bool,
    ) -> Result<LocalStep, HammerError> {
        let n = obs.len();
        let mut step = LocalStep {
            inputs: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        };
        for i in 0..n {
            let input = match (self.config.mode, messages) {
                (RunMode::Centralized, _) => joint_observation(obs, i),
                (_, Some(msgs)) => augment_observation(&obs[i], &msgs[i]),
                (_, None) => obs[i].clone(),
            };
            // every agent evaluates the same parameter set
            let (action, lp, v) = self.bundle.local.act(&input, &mut self.streams.local, stochastic)?;
            step.inputs.push(input);
            step.actions.push(action);
            step.log_probs.push(lp);
            step.values.push(v);
        }
        Ok(step)
    }

    fn step_world(&mut self, actions: &[Action]) -> Result<crate::env::StepResult, HammerError> {
        match self.config.env {
            TaskKind::Nav => {
                let idx: Vec<usize> = actions
                    .iter()
                    .map(|a| match a {
                        Action::Discrete(i) => Ok(*i),
                        other => Err(HammerError::Dimension(format!("{other:?} in discrete task"))),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(self.world.step(&idx)?)
            }
            TaskKind::NavContinuous => {
                let forces: Vec<[f64; 2]> = actions
                    .iter()
                    .map(|a| match a {
                        Action::Continuous(x) if x.len() == 2 => Ok([x[0], x[1]]),
                        other => Err(HammerError::Dimension(format!("{other:?} in continuous task"))),
                    })
                    .collect::<Result<_, _>>()?;
                Ok(self.world.step_continuous(&forces)?)
            }
        }
    }

    fn maybe_update_central(&mut self) -> Result<Option<UpdateStats>, HammerError> {
        let (Some(buf), Some(central)) = (self.central_buffer.as_mut(), self.bundle.central.as_mut())
        else {
            return Ok(None);
        };
        if !buf.should_update() {
            return Ok(None);
        }
        let batch = buf.take_ready();
        let stats = ppo_update(central, &batch, &self.config.hp_central, &mut self.streams.central)?;
        if !central.is_finite() {
            return Err(HammerError::NonFiniteState {
                episode: self.episodes_done,
                what: "central actor-critic".into(),
            });
        }
        Ok(Some(stats))
    }

    fn maybe_update_local(&mut self) -> Result<Option<UpdateStats>, HammerError> {
        if !self.local_buffer.should_update() {
            return Ok(None);
        }
        let batch = self.local_buffer.take_ready();
        let stats = ppo_update(
            &mut self.bundle.local,
            &batch,
            &self.config.hp_local,
            &mut self.streams.local,
        )?;
        if !self.bundle.local.is_finite() {
            return Err(HammerError::NonFiniteState {
                episode: self.episodes_done,
                what: "local actor-critic".into(),
            });
        }
        Ok(Some(stats))
    }

    /// Plays `episodes` episodes without learning on a separate world seeded
    /// with `seed`. Messages and actions are sampled only when the config's
    /// `eval_stochastic` is set. Returns the mean reward per agent of each episode.
    pub fn evaluate(&self, episodes: usize, seed: u64) -> Result<Vec<f64>, HammerError> {
        let mut world = NavWorld::new(self.config.n_agents, PhysicsParams::default())?;
        let mut env_rng = stream(seed, "eval-env");
        let mut policy_rng = stream(seed, "eval-policy");
        let stochastic = self.config.eval_stochastic;
        let n = self.config.n_agents;
        let m = self.config.message_length;
        let mut out = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let mut obs = world.reset(&mut env_rng);
            let mut prev: Option<Vec<Action>> = None;
            let mut total = 0.0;
            loop {
                let messages = match (&self.bundle.central, self.config.mode) {
                    (Some(c), RunMode::Hammer) => {
                        let g = build_global_input(&obs, prev.as_deref(), self.config.env)?;
                        let b = emit_messages(c, &g, n, m, &mut policy_rng, stochastic)?;
                        Some(b.messages.into_iter().map(|m| m.values).collect::<Vec<_>>())
                    }
                    (_, RunMode::RandomMessage) => Some(random_messages(n, m, &mut policy_rng)),
                    _ => None,
                };
                let mut actions = Vec::with_capacity(n);
                for i in 0..n {
                    let input = match (self.config.mode, &messages) {
                        (RunMode::Centralized, _) => joint_observation(&obs, i),
                        (_, Some(msgs)) => augment_observation(&obs[i], &msgs[i]),
                        (_, None) => obs[i].clone(),
                    };
                    actions.push(self.bundle.local.act(&input, &mut policy_rng, stochastic)?.0);
                }
                let result = match self.config.env {
                    TaskKind::Nav => world.step(
                        &actions
                            .iter()
                            .map(|a| match a {
                                Action::Discrete(i) => *i,
                                Action::Continuous(_) => unreachable!("discrete task"),
                            })
                            .collect::<Vec<_>>(),
                    )?,
                    TaskKind::NavContinuous => world.step_continuous(
                        &actions
                            .iter()
                            .map(|a| match a {
                                Action::Continuous(x) => [x[0], x[1]],
                                Action::Discrete(_) => unreachable!("continuous task"),
                            })
                            .collect::<Vec<_>>(),
                    )?,
                };
                total += result.rewards.iter().sum::<f64>() / n as f64;
                obs = result.observations;
                prev = Some(actions);
                if result.done {
                    break;
                }
            }
            out.push(total);
        }
        Ok(out)
    }
}

/// Trains for `config.total_episodes` episodes and returns the learning curve.
/// File output is handled by [`crate::exp::run_experiment`].
pub fn train(config: &ExperimentConfig) -> Result<LearningCurve, HammerError> {
    let mut session = Session::new(config.clone())?;
    let mut curve = LearningCurve::default();
    for _ in 0..config.total_episodes {
        curve
            .mean_reward_per_agent
            .push(session.run_episode()?.mean_reward_per_agent);
    }
    Ok(curve)
}

/// Uniform draw in `[-1, 1]`.
pub(crate) fn symmetric_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}
