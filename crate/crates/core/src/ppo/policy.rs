use rand::Rng;

use crate::nn::{
    gaussian_log_density, AdamState, CategoricalDist, Checkpoint, DiagGaussianDist, Head, Mlp,
    NnError,
};

use super::buffer::Action;

/// Initial Gaussian log standard deviation, `ln 0.5`.
pub const INIT_LOG_STD: f64 = -std::f64::consts::LN_2;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;

const ACTOR_OUTPUT_GAIN: f64 = 0.01;
const CRITIC_OUTPUT_GAIN: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    /// Softmax head over discrete actions.
    Categorical,
    /// Diagonal Gaussian whose mean is the actor output. The output is split
    /// into contiguous action blocks of `block_len` components each.
    Gaussian { block_len: usize },
}

/// An actor network, a state-value critic and their optimizers.
#[derive(Clone, Debug)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    /// Learned, state-independent log std (empty for categorical policies).
    pub log_std: Vec<f64>,
    kind: PolicyKind,
    pub(crate) actor_opt: AdamState,
    pub(crate) critic_opt: AdamState,
}

impl ActorCritic {
    pub fn categorical<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        n_actions: usize,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let actor = Mlp::two_hidden(input, hidden, n_actions, Head::Softmax, ACTOR_OUTPUT_GAIN, rng)?;
        let critic = Mlp::two_hidden(input, hidden, 1, Head::Linear, CRITIC_OUTPUT_GAIN, rng)?;
        Ok(Self::assemble(actor, critic, Vec::new(), PolicyKind::Categorical))
    }

    /// Gaussian policy with `output` mean components split into blocks of `block_len`.
    pub fn gaussian<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        block_len: usize,
        mean_head: Head,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        if block_len == 0 || !output.is_multiple_of(block_len) || mean_head == Head::Softmax {
            return Err(NnError::InvalidArchitecture(vec![input, hidden, output, block_len]));
        }
        let actor = Mlp::two_hidden(input, hidden, output, mean_head, ACTOR_OUTPUT_GAIN, rng)?;
        let critic = Mlp::two_hidden(input, hidden, 1, Head::Linear, CRITIC_OUTPUT_GAIN, rng)?;
        Ok(Self::assemble(
            actor,
            critic,
            vec![INIT_LOG_STD; output],
            PolicyKind::Gaussian { block_len },
        ))
    }

    pub(crate) fn assemble(actor: Mlp, critic: Mlp, log_std: Vec<f64>, kind: PolicyKind) -> Self {
        let mut lens: Vec<usize> = actor.tensors().iter().map(|t| t.len()).collect();
        if !log_std.is_empty() {
            lens.push(log_std.len());
        }
        let actor_opt = AdamState::new(&lens);
        let critic_opt =
            AdamState::new(&critic.tensors().iter().map(|t| t.len()).collect::<Vec<_>>());
        ActorCritic {
            actor,
            critic,
            log_std,
            kind,
            actor_opt,
            critic_opt,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn num_blocks(&self) -> usize {
        match self.kind {
            PolicyKind::Categorical => 1,
            PolicyKind::Gaussian { block_len } => self.actor.output_dim() / block_len,
        }
    }

    pub fn value(&self, input: &[f64]) -> Result<f64, NnError> {
        Ok(self.critic.forward(input)?[0])
    }

    pub fn categorical_dist(&self, input: &[f64]) -> Result<CategoricalDist, NnError> {
        CategoricalDist::new(self.actor.forward(input)?)
    }

    /// Gaussian over the full actor output.
    pub fn gaussian_dist(&self, input: &[f64]) -> Result<DiagGaussianDist, NnError> {
        DiagGaussianDist::new(self.actor.forward(input)?, self.log_std.clone())
    }

    /// Samples (or takes the mode of) one action from a single-block policy.
    /// Returns the action, its log-probability and the critic's value.
    pub fn act<R: Rng + ?Sized>(
        &self,
        input: &[f64],
        rng: &mut R,
        stochastic: bool,
    ) -> Result<(Action, f64, f64), NnError> {
        let value = self.value(input)?;
        match self.kind {
            PolicyKind::Categorical => {
                let dist = self.categorical_dist(input)?;
                let a = if stochastic {
                    dist.sample(rng)
                } else {
                    argmax(dist.probabilities())
                };
                Ok((Action::Discrete(a), dist.log_prob(a)?, value))
            }
            PolicyKind::Gaussian { .. } => {
                let dist = self.gaussian_dist(input)?;
                let x = if stochastic {
                    dist.sample(rng)
                } else {
                    dist.mean().to_vec()
                };
                let lp = dist.log_prob(&x)?;
                Ok((Action::Continuous(x), lp, value))
            }
        }
    }

    /// Log-probability of a raw sample for action block `block`.
    pub fn block_log_prob(&self, mean: &[f64], block: usize, x: &[f64]) -> f64 {
        let PolicyKind::Gaussian { block_len } = self.kind else {
            return f64::NAN;
        };
        let r = block * block_len..(block + 1) * block_len;
        gaussian_log_density(x, &mean[r.clone()], &self.log_std[r])
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }

    pub fn save(&self, ck: &mut Checkpoint, prefix: &str) {
        ck.put_scalar(
            format!("{prefix}.kind"),
            match self.kind {
                PolicyKind::Categorical => 0.0,
                PolicyKind::Gaussian { block_len } => block_len as f64,
            },
        );
        ck.put_mlp(&format!("{prefix}.actor"), &self.actor);
        ck.put_mlp(&format!("{prefix}.critic"), &self.critic);
        ck.put_vector(format!("{prefix}.log_std"), &self.log_std);
        ck.put_adam(&format!("{prefix}.actor_adam"), &self.actor_opt);
        ck.put_adam(&format!("{prefix}.critic_adam"), &self.critic_opt);
    }

    pub fn load(ck: &Checkpoint, prefix: &str) -> Result<Self, NnError> {
        let kind = match ck.scalar(&format!("{prefix}.kind"))? as usize {
            0 => PolicyKind::Categorical,
            block_len => PolicyKind::Gaussian { block_len },
        };
        Ok(ActorCritic {
            actor: ck.get_mlp(&format!("{prefix}.actor"))?,
            critic: ck.get_mlp(&format!("{prefix}.critic"))?,
            log_std: ck.tensor(&format!("{prefix}.log_std"))?.data.clone(),
            kind,
            actor_opt: ck.get_adam(&format!("{prefix}.actor_adam"))?,
            critic_opt: ck.get_adam(&format!("{prefix}.critic_adam"))?,
        })
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
