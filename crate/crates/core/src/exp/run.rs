//! A single training run and its directory of artifacts.
//!
//! Layout of `<output root>/<run name>/`:
//!
//! - `config.txt`: resolved configuration
//! - `metrics.csv`: one row per episode
//! - `checkpoint.txt`: final networks and optimizer state
//!   (`checkpoint-<episode>.txt` for periodic ones, `checkpoint-abort.txt`
//!   if training stopped on a non-finite network)
//! - `manifest.txt`: seed, fingerprint, version string and wall time

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use super::config::ExperimentConfig;
use super::metrics::{write_metrics, MetricsError, MetricsRow};
use super::stats::final_score;
use crate::hammer::{EpisodeSummary, HammerError, Session};
use crate::nn::NnError;
use crate::ppo::{PpoHyperparams, UpdateStats};

/// Overrides `output_dir` of every run when set.
pub const OUTPUT_ROOT_ENV: &str = "HAMMER_OUTPUT_ROOT";

/// Window of the final-performance score.
pub const FINAL_WINDOW: usize = 500;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Hammer(#[from] HammerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Checkpoint(#[from] NnError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub rows: Vec<MetricsRow>,
    /// Mean reward per agent over the last [`FINAL_WINDOW`] episodes.
    pub final_score: f64,
    pub wall_secs: f64,
}

impl RunOutcome {
    pub fn curve(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_reward_per_agent).collect()
    }
}

/// `output_dir`, unless the override variable is set.
pub fn output_root(config: &ExperimentConfig) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root),
        _ => config.output_dir.clone(),
    }
}

/// `<crate version> (<git describe>)`, or `(unknown)` outside a checkout.
pub fn version_string() -> String {
    let describe = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into());
    format!("{} ({describe})", env!("CARGO_PKG_VERSION"))
}

fn total_loss(stats: &UpdateStats, hp: &PpoHyperparams) -> f64 {
    stats.policy_loss + hp.value_coef * stats.value_loss - hp.entropy_coef * stats.entropy
}

pub fn metrics_row(
    episode: usize,
    summary: &EpisodeSummary,
    config: &ExperimentConfig,
) -> MetricsRow {
    MetricsRow {
        episode,
        mean_reward_per_agent: summary.mean_reward_per_agent,
        collisions: summary.collisions,
        central_loss: summary
            .central_update
            .as_ref()
            .map(|s| total_loss(s, &config.hp_central)),
        local_loss: summary
            .local_update
            .as_ref()
            .map(|s| total_loss(s, &config.hp_local)),
        entropy: summary.local_update.as_ref().map(|s| s.entropy),
        wall_ms: config.record_wall_time.then_some(summary.wall_ms),
    }
}

fn write(path: PathBuf, contents: &str) -> Result<(), RunError> {
    std::fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

/// Trains one configuration and writes its run directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let dir = output_root(config).join(config.run_name());
    run_experiment_in(config, &dir)
}

/// As [`run_experiment`], into an explicit directory.
pub fn run_experiment_in(config: &ExperimentConfig, dir: &Path) -> Result<RunOutcome, RunError> {
    run_experiment_observed(config, dir, |_| {})
}

/// As [`run_experiment_in`], calling `observe` with every finished row.
pub fn run_experiment_observed(
    config: &ExperimentConfig,
    dir: &Path,
    mut observe: impl FnMut(&MetricsRow),
) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(dir.join("config.txt"), &config.to_text())?;

    let mut session = Session::new(config.clone())?;
    let mut rows = Vec::with_capacity(config.total_episodes);
    for episode in 1..=config.total_episodes {
        let summary = match session.run_episode() {
            Ok(s) => s,
            Err(e) => {
                if matches!(e, HammerError::NonFiniteState { .. }) {
                    session.checkpoint().save(&dir.join("checkpoint-abort.txt"))?;
                }
                write_metrics(&rows, &dir.join("metrics.csv"))?;
                return Err(e.into());
            }
        };
        let row = metrics_row(episode, &summary, config);
        observe(&row);
        rows.push(row);
        if config.checkpoint_every > 0 && episode % config.checkpoint_every == 0 {
            session
                .checkpoint()
                .save(&dir.join(format!("checkpoint-{episode}.txt")))?;
        }
    }
    write_metrics(&rows, &dir.join("metrics.csv"))?;
    session.checkpoint().save(&dir.join("checkpoint.txt"))?;

    let curve: Vec<f64> = rows.iter().map(|r| r.mean_reward_per_agent).collect();
    let score = final_score(&curve, FINAL_WINDOW);
    let wall_secs = start.elapsed().as_secs_f64();
    let manifest = format!(
        "seed = {}\nfingerprint = {}\nversion = {}\nepisodes = {}\nfinal_score = {score:.16e}\nwall_secs = {wall_secs:.3}\n",
        config.seed,
        config.fingerprint(),
        version_string(),
        config.total_episodes,
    );
    write(dir.join("manifest.txt"), &manifest)?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        rows,
        final_score: score,
        wall_secs,
    })
}
