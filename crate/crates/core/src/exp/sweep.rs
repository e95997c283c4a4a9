//! Multi-seed sweeps along one configuration axis.
//!
//! Every (point, seed) pair is an independent run in its own directory under
//! `<output root>/sweep-<axis>/`. Runs execute on the rayon pool; the summary
//! is written after all of them finish. A failed run marks only its own
//! cell, and the point is aggregated over the seeds that succeeded.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use super::config::{default_message_length, ConfigError, ExperimentConfig};
use super::run::{output_root, run_experiment_in, FINAL_WINDOW};
use super::stats::{aggregate, final_score, AggregateResult};
use crate::hammer::RunMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    MessageLength,
    Mode,
    /// Message length follows the agent count (see `default_message_length`).
    NAgents,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "message-length" | "message_length" => Some(SweepAxis::MessageLength),
            "mode" => Some(SweepAxis::Mode),
            "n-agents" | "n_agents" => Some(SweepAxis::NAgents),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::MessageLength => "message-length",
            SweepAxis::Mode => "mode",
            SweepAxis::NAgents => "n-agents",
        }
    }

    /// Values swept when none are given.
    pub fn default_values(self) -> Vec<String> {
        let v: &[&str] = match self {
            SweepAxis::MessageLength => &["2", "4", "6", "8"],
            SweepAxis::Mode => &["hammer", "independent", "random_message", "centralized"],
            SweepAxis::NAgents => &["3", "5"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: &str) -> Result<ExperimentConfig, ConfigError> {
        let mut c = base.clone();
        match self {
            SweepAxis::MessageLength => c.set("message_length", value)?,
            SweepAxis::Mode => {
                c.mode = RunMode::parse(value).ok_or_else(|| ConfigError::InvalidValue {
                    key: "mode".into(),
                    value: value.into(),
                })?
            }
            SweepAxis::NAgents => {
                c.set("n_agents", value)?;
                c.message_length = default_message_length(c.n_agents);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: String,
    /// Aggregate over the seeds that finished; `None` if none did.
    pub result: Option<AggregateResult>,
    /// `(seed, error)` for every failed run of this point.
    pub failures: Vec<(u64, String)>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub dir: PathBuf,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("point,mean,std_error,num_seeds,failures,fingerprint,scores\n");
        for p in &self.points {
            let _ = write!(s, "{},", p.value);
            match &p.result {
                Some(r) => {
                    let se = r.std_error.map(|v| format!("{v:.16e}")).unwrap_or_default();
                    let scores: Vec<String> = r.scores.iter().map(|v| format!("{v:.16e}")).collect();
                    let _ = writeln!(
                        s,
                        "{:.16e},{se},{},{},{},{}",
                        r.mean,
                        r.scores.len(),
                        p.failures.len(),
                        r.fingerprint,
                        scores.join(";")
                    );
                }
                None => {
                    let _ = writeln!(s, ",,0,{},,", p.failures.len());
                }
            }
        }
        s
    }

    /// Markdown table: mean ± standard error per point.
    pub fn summary_markdown(&self) -> String {
        let mut s = format!(
            "| {} | mean reward per agent | std. error | seeds | failed |\n|---|---|---|---|---|\n",
            self.axis.as_str()
        );
        for p in &self.points {
            match &p.result {
                Some(r) => {
                    let se = r.std_error.map_or("n/a".to_string(), |v| format!("{v:.2}"));
                    let _ = writeln!(
                        s,
                        "| {} | {:.2} | {se} | {} | {} |",
                        p.value,
                        r.mean,
                        r.scores.len(),
                        p.failures.len()
                    );
                }
                None => {
                    let _ = writeln!(s, "| {} | failed | | 0 | {} |", p.value, p.failures.len());
                }
            }
        }
        s
    }
}

/// Runs every (value, seed) combination and writes `summary.csv` and
/// `summary.md` next to the run directories.
pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
    seeds: &[u64],
) -> Result<SweepResult, ConfigError> {
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| axis.apply(base, v))
        .collect::<Result<_, _>>()?;
    let dir = output_root(base).join(format!("sweep-{}", axis.as_str()));

    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let outcomes: Vec<Result<f64, String>> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let mut c = configs[p].clone();
            c.seed = seed;
            run_experiment_in(&c, &dir.join(c.run_name()))
                .map(|o| final_score(&o.curve(), FINAL_WINDOW))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut points = Vec::with_capacity(configs.len());
    for (p, (value, config)) in values.iter().zip(&configs).enumerate() {
        let mut ok_seeds = Vec::new();
        let mut scores = Vec::new();
        let mut failures = Vec::new();
        for ((jp, seed), outcome) in jobs.iter().zip(&outcomes) {
            if *jp != p {
                continue;
            }
            match outcome {
                Ok(score) => {
                    ok_seeds.push(*seed);
                    scores.push(*score);
                }
                Err(e) => failures.push((*seed, e.clone())),
            }
        }
        points.push(SweepPoint {
            value: value.clone(),
            result: (!scores.is_empty()).then(|| aggregate(ok_seeds, scores, config.fingerprint())),
            failures,
        });
    }

    let result = SweepResult { axis, dir, points };
    // The runs already created the directory unless every one failed early.
    let _ = std::fs::create_dir_all(&result.dir);
    let _ = std::fs::write(result.dir.join("summary.csv"), result.summary_csv());
    let _ = std::fs::write(result.dir.join("summary.md"), result.summary_markdown());
    Ok(result)
}
