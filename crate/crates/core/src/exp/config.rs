//! Experiment configuration and its flat `key = value` text format.
//!
//! Grammar: one `key = value` pair per line; blank lines and lines starting
//! with `#` are ignored; whitespace around keys and values is trimmed. Keys
//! are those written by [`ExperimentConfig::to_text`]; PPO settings are
//! prefixed with `central.` or `local.`. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::env::TaskKind;
use crate::hammer::RunMode;
use crate::ppo::PpoHyperparams;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: RunMode,
    pub env: TaskKind,
    pub n_agents: usize,
    /// Ignored outside the hammer and random-message modes.
    pub message_length: usize,
    pub total_episodes: usize,
    pub seed: u64,
    pub hidden_width: usize,
    pub hp_central: PpoHyperparams,
    pub hp_local: PpoHyperparams,
    pub output_dir: PathBuf,
    /// Write a checkpoint every this many episodes; 0 writes only the final one.
    pub checkpoint_every: usize,
    /// Sample (rather than take the mode of) messages and actions during evaluation.
    pub eval_stochastic: bool,
    /// Fill the `wall_ms` metrics column. Off by default so that metrics files
    /// of identical runs are byte-identical.
    pub record_wall_time: bool,
}

/// Message length used when only the agent count is given.
pub fn default_message_length(n_agents: usize) -> usize {
    if n_agents >= 5 {
        8
    } else {
        4
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: RunMode::Hammer,
            env: TaskKind::Nav,
            n_agents: 3,
            message_length: 4,
            total_episodes: 30_000,
            seed: 1,
            hidden_width: 64,
            hp_central: PpoHyperparams::central(),
            hp_local: PpoHyperparams::local(),
            output_dir: PathBuf::from("runs"),
            checkpoint_every: 0,
            eval_stochastic: false,
            record_wall_time: false,
        }
    }
}

const HP_KEYS: [&str; 9] = [
    "gamma",
    "clip_epsilon",
    "lr",
    "update_epochs",
    "minibatch_size",
    "value_coef",
    "entropy_coef",
    "batch_size",
    "max_grad_norm",
];

fn hp_get(hp: &PpoHyperparams, key: &str) -> String {
    match key {
        "gamma" => hp.gamma.to_string(),
        "clip_epsilon" => hp.clip_epsilon.to_string(),
        "lr" => hp.lr.to_string(),
        "update_epochs" => hp.update_epochs.to_string(),
        "minibatch_size" => hp.minibatch_size.to_string(),
        "value_coef" => hp.value_coef.to_string(),
        "entropy_coef" => hp.entropy_coef.to_string(),
        "batch_size" => hp.batch_size.to_string(),
        "max_grad_norm" => hp.max_grad_norm.to_string(),
        _ => unreachable!("unknown hyperparameter key {key}"),
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn hp_set(hp: &mut PpoHyperparams, full_key: &str, key: &str, v: &str) -> Result<(), ConfigError> {
    match key {
        "gamma" => hp.gamma = parse(full_key, v)?,
        "clip_epsilon" => hp.clip_epsilon = parse(full_key, v)?,
        "lr" => hp.lr = parse(full_key, v)?,
        "update_epochs" => hp.update_epochs = parse(full_key, v)?,
        "minibatch_size" => hp.minibatch_size = parse(full_key, v)?,
        "value_coef" => hp.value_coef = parse(full_key, v)?,
        "entropy_coef" => hp.entropy_coef = parse(full_key, v)?,
        "batch_size" => hp.batch_size = parse(full_key, v)?,
        "max_grad_norm" => hp.max_grad_norm = parse(full_key, v)?,
        _ => return Err(ConfigError::UnknownKey(full_key.to_string())),
    }
    Ok(())
}

impl ExperimentConfig {
    /// Sets one field from its textual key and value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "mode" => {
                self.mode = RunMode::parse(v).ok_or_else(|| ConfigError::InvalidValue {
                    key: key.into(),
                    value: v.into(),
                })?
            }
            "env" => {
                self.env = TaskKind::parse(v).ok_or_else(|| ConfigError::InvalidValue {
                    key: key.into(),
                    value: v.into(),
                })?
            }
            "n_agents" => self.n_agents = parse(key, v)?,
            "message_length" => self.message_length = parse(key, v)?,
            "total_episodes" => self.total_episodes = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "hidden_width" => self.hidden_width = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "checkpoint_every" => self.checkpoint_every = parse(key, v)?,
            "eval_stochastic" => self.eval_stochastic = parse(key, v)?,
            "record_wall_time" => self.record_wall_time = parse(key, v)?,
            k => {
                if let Some(rest) = k.strip_prefix("central.") {
                    hp_set(&mut self.hp_central, k, rest, v)?
                } else if let Some(rest) = k.strip_prefix("local.") {
                    hp_set(&mut self.hp_local, k, rest, v)?
                } else {
                    return Err(ConfigError::UnknownKey(k.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# hammer experiment config\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", self.mode.as_str().into());
        kv("env", self.env.as_str().into());
        kv("n_agents", self.n_agents.to_string());
        kv("message_length", self.message_length.to_string());
        kv("total_episodes", self.total_episodes.to_string());
        kv("seed", self.seed.to_string());
        kv("hidden_width", self.hidden_width.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("checkpoint_every", self.checkpoint_every.to_string());
        kv("eval_stochastic", self.eval_stochastic.to_string());
        kv("record_wall_time", self.record_wall_time.to_string());
        for (prefix, hp) in [("central", &self.hp_central), ("local", &self.hp_local)] {
            for key in HP_KEYS {
                kv(&format!("{prefix}.{key}"), hp_get(hp, key));
            }
        }
        s
    }

    /// Parses a config file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            cfg.set(k, v).map_err(|e| ConfigError::Syntax {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.n_agents == 0 {
            return bad("n_agents must be positive".into());
        }
        if self.mode.uses_messages() && self.message_length == 0 {
            return bad(format!("{} mode needs message_length > 0", self.mode.as_str()));
        }
        if self.hidden_width == 0 {
            return bad("hidden_width must be positive".into());
        }
        for (name, hp) in [("central", &self.hp_central), ("local", &self.hp_local)] {
            if let Err(e) = hp.validate() {
                return bad(format!("{name}: {e}"));
            }
        }
        Ok(())
    }

    /// Hash of the resolved config without its seed and output location, so
    /// that runs differing only in seed share a fingerprint.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.seed = 0;
        c.output_dir = PathBuf::new();
        let digest = Sha256::digest(c.to_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Directory name for this run inside `output_dir`.
    pub fn run_name(&self) -> String {
        let mut name = format!("{}-{}-n{}", self.mode.as_str(), self.env.as_str(), self.n_agents);
        if self.mode.uses_messages() {
            let _ = write!(name, "-m{}", self.message_length);
        }
        let _ = write!(name, "-seed{}", self.seed);
        name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_follow_the_headline_setting() {
        let c = ExperimentConfig::default();
        assert_eq!(c.hp_central.lr, 3e-4);
        assert_eq!(c.hp_local.lr, 1e-2);
        assert_eq!(c.hp_central.batch_size, 2000);
        assert_eq!(c.hp_local.batch_size, 4000);
        assert_eq!(c.hp_local.gamma, 0.95);
        assert_eq!(c.hp_local.clip_epsilon, 0.2);
        assert_eq!(c.total_episodes, 30_000);
        assert_eq!(c.message_length, 4);
        assert_eq!(default_message_length(5), 8);
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let mut c = ExperimentConfig::default();
        c.mode = RunMode::RandomMessage;
        c.hp_central.lr = 1.234_567_890_123e-5;
        c.seed = u64::MAX;
        let text = c.to_text();
        let back = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ExperimentConfig::from_text("# c\nmode = hammer\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 3, .. }), "{err:?}");
        let err = ExperimentConfig::from_text("n_agents = three").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
        assert!(ExperimentConfig::from_text("just words").is_err());
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.message_length = 0;
        assert!(c.validate().is_err());
        c.mode = RunMode::Independent;
        assert!(c.validate().is_ok());
        c.hp_local.gamma = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn fingerprint_ignores_seed_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed = 99;
        b.output_dir = "elsewhere".into();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.message_length = 8;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    proptest! {
        #[test]
        fn arbitrary_configs_round_trip(
            seed in any::<u64>(),
            lr in 1e-8f64..1.0,
            ent in 0.0f64..0.1,
            n in 1usize..8,
            m in 1usize..16,
            mode in 0usize..4,
        ) {
            let mut c = ExperimentConfig::default();
            c.seed = seed;
            c.hp_local.lr = lr;
            c.hp_central.entropy_coef = ent;
            c.n_agents = n;
            c.message_length = m;
            c.mode = RunMode::ALL[mode];
            let text = c.to_text();
            let back = ExperimentConfig::from_text(&text).unwrap();
            prop_assert_eq!(back.to_text(), text);
            prop_assert_eq!(back, c);
        }
    }
}
