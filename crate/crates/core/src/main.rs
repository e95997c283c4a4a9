use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;

use hammer_core::exp::{
    self, aggregate, final_score, read_metrics, rolling_mean, run_experiment_observed,
    svg_line_chart, ExperimentConfig, SweepAxis,
};
use hammer_core::exp::rng::RunRng;
use hammer_core::nn::random_gradcheck;

#[derive(Parser)]
#[command(name = "hammer", version, about = "Train and evaluate central-messaging PPO learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training configuration.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Print a progress line every this many episodes (0 = never).
        #[arg(long, default_value_t = 0)]
        log_every: usize,
    },
    /// Run every value of one axis for several seeds and summarize.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// message-length | mode | n-agents
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values; defaults depend on the axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Number of seeds, run as 1..=K.
        #[arg(long, default_value_t = 3, conflicts_with = "seed_list")]
        seeds: u64,
        /// Explicit comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seed_list: Vec<u64>,
    },
    /// Summarize final scores of finished runs from their metrics files.
    Aggregate {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, default_value_t = exp::FINAL_WINDOW)]
        window: usize,
    },
    /// Check analytic gradients against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write an SVG chart of smoothed learning curves.
    Plot {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = exp::FINAL_WINDOW)]
        window: usize,
        #[arg(long, default_value = "mean reward per agent")]
        title: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file (`key = value` lines); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    /// nav | nav_continuous
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    n_agents: Option<usize>,
    #[arg(long)]
    message_length: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Any config key, e.g. `--set local.lr=0.001`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl RunArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<ExperimentConfig, String> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("{}: {e}", path.display()))?;
                ExperimentConfig::from_text(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => ExperimentConfig::default(),
        };
        let mut set = |k: &str, v: String| c.set(k, &v).map_err(|e| e.to_string());
        if let Some(v) = &self.mode {
            set("mode", v.clone())?;
        }
        if let Some(v) = &self.env {
            set("env", v.clone())?;
        }
        if let Some(v) = self.n_agents {
            set("n_agents", v.to_string())?;
            if self.message_length.is_none() {
                set("message_length", exp::default_message_length(v).to_string())?;
            }
        }
        if let Some(v) = self.message_length {
            set("message_length", v.to_string())?;
        }
        if let Some(v) = self.episodes {
            set("total_episodes", v.to_string())?;
        }
        if let Some(v) = &self.output_dir {
            set("output_dir", v.display().to_string())?;
        }
        if let Some(v) = seed {
            set("seed", v.to_string())?;
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            set(k.trim(), v.trim().to_string())?;
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

fn train(run: &RunArgs, seed: Option<u64>, log_every: usize) -> Result<(), String> {
    let config = run.resolve(seed)?;
    let dir = exp::output_root(&config).join(config.run_name());
    let mut window: Vec<f64> = Vec::new();
    let outcome = run_experiment_observed(&config, &dir, |row| {
        window.push(row.mean_reward_per_agent);
        if log_every > 0 && row.episode % log_every == 0 {
            let tail = &window[window.len().saturating_sub(log_every)..];
            eprintln!(
                "episode {:>6}  mean reward per agent (last {}) {:.3}",
                row.episode,
                tail.len(),
                tail.iter().sum::<f64>() / tail.len() as f64
            );
        }
    })
    .map_err(|e| e.to_string())?;
    println!(
        "{}: final score {:.4} over the last {} episodes ({:.1}s)",
        outcome.dir.display(),
        outcome.final_score,
        exp::FINAL_WINDOW.min(outcome.rows.len()),
        outcome.wall_secs
    );
    Ok(())
}

fn sweep(run: &RunArgs, axis: &str, values: &[String], seeds: u64, seed_list: &[u64]) -> Result<bool, String> {
    let axis = SweepAxis::parse(axis).ok_or_else(|| format!("unknown axis `{axis}`"))?;
    let base = run.resolve(None)?;
    let values = if values.is_empty() {
        axis.default_values()
    } else {
        values.to_vec()
    };
    let seeds: Vec<u64> = if seed_list.is_empty() {
        (1..=seeds).collect()
    } else {
        seed_list.to_vec()
    };
    let result = exp::run_sweep(&base, axis, &values, &seeds).map_err(|e| e.to_string())?;
    print!("{}", result.summary_markdown());
    println!("summary written to {}", result.dir.join("summary.csv").display());
    let mut clean = true;
    for p in &result.points {
        for (seed, err) in &p.failures {
            eprintln!("{} = {}, seed {seed}: {err}", axis.as_str(), p.value);
            clean = false;
        }
    }
    Ok(clean)
}

/// Fingerprint from the `config.txt` next to a metrics file, if any.
fn sibling_fingerprint(metrics: &Path) -> Option<String> {
    let text = std::fs::read_to_string(metrics.parent()?.join("config.txt")).ok()?;
    let config = ExperimentConfig::from_text(&text).ok()?;
    Some(config.fingerprint())
}

fn aggregate_cmd(paths: &[PathBuf], window: usize) -> Result<(), String> {
    let mut seeds = Vec::new();
    let mut scores = Vec::new();
    let mut prints = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let rows = read_metrics(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let curve: Vec<f64> = rows.iter().map(|r| r.mean_reward_per_agent).collect();
        let score = final_score(&curve, window);
        println!("{}: {score:.4}", path.display());
        let seed = path
            .parent()
            .and_then(|d| std::fs::read_to_string(d.join("config.txt")).ok())
            .and_then(|t| ExperimentConfig::from_text(&t).ok())
            .map_or(i as u64 + 1, |c| c.seed);
        seeds.push(seed);
        scores.push(score);
        if let Some(fp) = sibling_fingerprint(path) {
            prints.push(fp);
        }
    }
    prints.dedup();
    let fingerprint = match prints.as_slice() {
        [one] => one.clone(),
        [] => String::new(),
        _ => "mixed".into(),
    };
    let r = aggregate(seeds, scores, fingerprint);
    let se = r.std_error.map_or("n/a".into(), |v| format!("{v:.4}"));
    println!("mean {:.4}  std error {se}  runs {}  fingerprint {}", r.mean, r.scores.len(), r.fingerprint);
    Ok(())
}

fn plot(paths: &[PathBuf], out: &Path, window: usize, title: &str) -> Result<(), String> {
    let mut series = Vec::new();
    for path in paths {
        let rows = read_metrics(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let curve: Vec<f64> = rows.iter().map(|r| r.mean_reward_per_agent).collect();
        let label = path
            .parent()
            .and_then(|d| d.file_name())
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        series.push((label, rolling_mean(&curve, window.max(1))));
    }
    std::fs::write(out, svg_line_chart(title, &series)).map_err(|e| format!("{}: {e}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { run, seed, log_every } => train(run, *seed, *log_every).map(|_| true),
        Command::Sweep {
            run,
            axis,
            values,
            seeds,
            seed_list,
        } => sweep(run, axis, values, *seeds, seed_list),
        Command::Aggregate { metrics, window } => aggregate_cmd(metrics, *window).map(|_| true),
        Command::Gradcheck {
            instances,
            step,
            tolerance,
            seed,
        } => {
            let mut rng = RunRng::seed_from_u64(*seed);
            random_gradcheck(*instances, *step, &mut rng)
                .map(|r| {
                    println!(
                        "gradcheck: {} networks, max relative error {:.3e} (worst {:?}, {} head)",
                        r.instances,
                        r.max_relative_error,
                        r.worst_architecture,
                        r.worst_head.as_str()
                    );
                    r.max_relative_error < *tolerance
                })
                .map_err(|e| e.to_string())
        }
        Command::Plot {
            metrics,
            out,
            window,
            title,
        } => plot(metrics, out, *window, title).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
