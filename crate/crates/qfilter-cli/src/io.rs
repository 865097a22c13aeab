//! File formats: strict JSON config in, per-trajectory CSV plus a JSON
//! ensemble summary out. Floats are written in shortest round-trip form, so
//! re-reading a CSV reproduces the sampled values bit-for-bit.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use qfilter::control::Regime;
use serde_json::json;

use crate::config::{ConfigError, SimulationConfig};
use crate::harness::{EnsembleStats, TrajectoryRecord};

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "QFILTER_OUT_DIR";

/// Fixed CSV header of trajectory files.
pub const CSV_HEADER: &str = "t,fidelity,v,trFz,u1,u2,regime";

/// The output directory to use when no `--out` flag is given:
/// `$QFILTER_OUT_DIR` if set, else `./out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Reads and validates a config file.
pub fn read_config(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let cfg: SimulationConfig = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// `"feedback"` / `"drive"`.
pub fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Feedback => "feedback",
        Regime::Drive => "drive",
    }
}

/// Renders one trajectory as CSV text with the fixed header.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(64 * (record.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &record.samples {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.t,
            s.fidelity,
            s.v,
            s.tr_fz,
            s.u[0],
            s.u[1],
            regime_name(s.regime)
        ));
    }
    out
}

/// Writes `traj_{index:05}.csv`; returns the path.
pub fn write_trajectory_csv(dir: &Path, record: &TrajectoryRecord) -> anyhow::Result<PathBuf> {
    let path = dir.join(format!("traj_{:05}.csv", record.seed_index));
    fs::write(&path, trajectory_csv(record))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// The `ensemble.json` document: resolved config, statistics, and a compact
/// per-trajectory summary (switch events included; sample paths live in the
/// CSVs).
pub fn ensemble_json(
    cfg: &SimulationConfig,
    stats: &EnsembleStats,
    records: &[TrajectoryRecord],
) -> serde_json::Value {
    let trajectories: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            json!({
                "seed_index": r.seed_index,
                "converged": r.converged,
                "failed": r.failed,
                "final_fidelity": r.final_fidelity,
                "final_v": r.final_v,
                "n_switches": r.switch_events.len(),
                "switch_events": r.switch_events.iter().map(|e| json!({
                    "t": e.t,
                    "from": regime_name(e.from),
                    "to": regime_name(e.to),
                    "fidelity": e.fidelity,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "config": cfg,
        "stats": stats,
        "trajectories": trajectories,
    })
}

/// Writes all trajectory CSVs plus `ensemble.json` into `dir` (created if
/// missing).
pub fn write_outputs(
    dir: &Path,
    cfg: &SimulationConfig,
    stats: &EnsembleStats,
    records: &[TrajectoryRecord],
) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for r in records {
        write_trajectory_csv(dir, r)?;
    }
    let path = dir.join("ensemble.json");
    let doc = ensemble_json(cfg, stats, records);
    fs::write(&path, serde_json::to_string_pretty(&doc)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
