//! Per-run output bundles: `trajectory.csv`, `steps.csv`, `metrics.json`
//! and `scenario.resolved`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::resolved;
use crate::error::{Error, Result};
use crate::sim::{RunMetrics, RunOutput, Scenario, StepEvent, TrajectoryLog};
use crate::state::Side;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const STEPS_FILE: &str = "steps.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const RESOLVED_FILE: &str = "scenario.resolved";

#[derive(Serialize)]
struct StepRow {
    time: f64,
    stance: Side,
    foothold_x: f64,
    foothold_y: f64,
    foothold_z: f64,
    target_x: f64,
    target_y: f64,
    com_x: f64,
    com_y: f64,
    com_z: f64,
    com_vx: f64,
    com_vy: f64,
    com_vz: f64,
    capture_offset_x: f64,
    capture_offset_y: f64,
    clamped: bool,
}

impl From<&StepEvent> for StepRow {
    fn from(e: &StepEvent) -> Self {
        StepRow {
            time: e.time,
            stance: e.stance,
            foothold_x: e.foothold.x,
            foothold_y: e.foothold.y,
            foothold_z: e.foothold.z,
            target_x: e.target.x,
            target_y: e.target.y,
            com_x: e.com.x,
            com_y: e.com.y,
            com_z: e.com.z,
            com_vx: e.com_velocity.x,
            com_vy: e.com_velocity.y,
            com_vz: e.com_velocity.z,
            capture_offset_x: e.capture_offset[0],
            capture_offset_y: e.capture_offset[1],
            clamped: e.clamped,
        }
    }
}

pub fn write_trajectory(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&log.columns)?;
    for row in &log.rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_steps(path: &Path, steps: &[StepEvent]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_path(path)?;
    if steps.is_empty() {
        // serde only emits headers alongside the first record
        w.write_record(STEP_COLUMNS)?;
    }
    for e in steps {
        w.serialize(StepRow::from(e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const STEP_COLUMNS: [&str; 16] = [
    "time",
    "stance",
    "foothold_x",
    "foothold_y",
    "foothold_z",
    "target_x",
    "target_y",
    "com_x",
    "com_y",
    "com_z",
    "com_vx",
    "com_vy",
    "com_vz",
    "capture_offset_x",
    "capture_offset_y",
    "clamped",
];

pub fn write_metrics(path: &Path, metrics: &RunMetrics) -> Result<()> {
    let text = serde_json::to_string_pretty(metrics)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<RunMetrics> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the full bundle into `dir`, creating it if needed.
pub fn write_bundle(dir: &Path, scenario: &Scenario, out: &RunOutput) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_trajectory(&dir.join(TRAJECTORY_FILE), &out.log)?;
    write_steps(&dir.join(STEPS_FILE), &out.log.steps)?;
    write_metrics(&dir.join(METRICS_FILE), &out.metrics)?;
    let resolved_path = dir.join(RESOLVED_FILE);
    fs::write(&resolved_path, resolved(scenario)).map_err(|e| Error::io(&resolved_path, e))?;
    Ok(dir.to_path_buf())
}
