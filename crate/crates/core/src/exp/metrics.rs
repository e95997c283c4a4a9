//! Per-episode metrics CSV.
//!
//! Columns, in order:
//!
//! ```text
//! episode,mean_reward_per_agent,collisions,central_loss,local_loss,entropy,wall_ms
//! ```
//!
//! Reals are written with 17 significant digits, so a write/read cycle is
//! bit-exact. Loss and entropy cells are blank in episodes without an update
//! of the corresponding learner; `wall_ms` is blank unless timing is enabled.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub const METRICS_HEADER: &str =
    "episode,mean_reward_per_agent,collisions,central_loss,local_loss,entropy,wall_ms";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub episode: usize,
    pub mean_reward_per_agent: f64,
    pub collisions: usize,
    pub central_loss: Option<f64>,
    pub local_loss: Option<f64>,
    /// Mean policy entropy of the local learner's last update.
    pub entropy: Option<f64>,
    pub wall_ms: Option<u64>,
}

fn real(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        let _ = write!(out, "{v:.16e}");
    }
}

pub fn metrics_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},", r.episode);
        real(&mut out, Some(r.mean_reward_per_agent));
        let _ = write!(out, ",{},", r.collisions);
        real(&mut out, r.central_loss);
        out.push(',');
        real(&mut out, r.local_loss);
        out.push(',');
        real(&mut out, r.entropy);
        out.push(',');
        if let Some(ms) = r.wall_ms {
            let _ = write!(out, "{ms}");
        }
        out.push('\n');
    }
    out
}

pub fn metrics_from_csv(text: &str) -> Result<Vec<MetricsRow>, MetricsError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER => {}
        Some((_, h)) => {
            return Err(MetricsError::Parse {
                line: 1,
                msg: format!("unexpected header `{h}`"),
            })
        }
        None => {
            return Err(MetricsError::Parse {
                line: 1,
                msg: "missing header".into(),
            })
        }
    }
    let mut rows: Vec<MetricsRow> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| MetricsError::Parse { line: lineno, msg };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", cells.len())));
        }
        fn req<T: std::str::FromStr>(cell: &str, name: &str) -> Result<T, String> {
            cell.parse().map_err(|_| format!("bad {name} `{cell}`"))
        }
        fn opt<T: std::str::FromStr>(cell: &str, name: &str) -> Result<Option<T>, String> {
            if cell.is_empty() {
                Ok(None)
            } else {
                req(cell, name).map(Some)
            }
        }
        let row = MetricsRow {
            episode: req(cells[0], "episode").map_err(err)?,
            mean_reward_per_agent: req(cells[1], "mean_reward_per_agent").map_err(err)?,
            collisions: req(cells[2], "collisions").map_err(err)?,
            central_loss: opt(cells[3], "central_loss").map_err(err)?,
            local_loss: opt(cells[4], "local_loss").map_err(err)?,
            entropy: opt(cells[5], "entropy").map_err(err)?,
            wall_ms: opt(cells[6], "wall_ms").map_err(err)?,
        };
        if let Some(prev) = rows.last() {
            if row.episode <= prev.episode {
                return Err(err(format!(
                    "episode {} does not follow {}",
                    row.episode, prev.episode
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_metrics(rows: &[MetricsRow], path: &Path) -> Result<(), MetricsError> {
    std::fs::write(path, metrics_to_csv(rows))?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, MetricsError> {
    metrics_from_csv(&std::fs::read_to_string(path)?)
}
