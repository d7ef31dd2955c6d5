//! One-parameter batch runs.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::with_param;
use crate::error::{Error, Result};
use crate::export::write_bundle;
use crate::sim::{run_scenario, Outcome, PlantKind, Scenario};
use crate::vlip::{capturable_push_limit, capture_point, effective_gravity, horizontal_reach, natural_frequency};

pub const SUMMARY_FILE: &str = "sweep_summary.csv";

/// One line of `sweep_summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub outcome: Option<Outcome>,
    pub fell: Option<bool>,
    pub fall_time: Option<f64>,
    pub steps: Option<usize>,
    pub limit_cycle_residual: Option<f64>,
    pub mean_com_height_error: Option<f64>,
    pub peak_joint_torque: Option<f64>,
    pub total_thruster_impulse: Option<f64>,
    /// Largest simulated CoM-to-foothold distance at a step (m).
    pub max_step_offset: Option<f64>,
    /// Sagittal capture offset for the initial velocity plus the first push (m).
    pub analytic_capture_offset: Option<f64>,
    /// Largest sagittal push impulse the stepping policy can absorb (N·s);
    /// reduced-order scenarios with a push only.
    pub analytic_push_limit: Option<f64>,
    pub error: Option<String>,
}

/// Analytic companions of a scenario: capture offset and push limit.
pub fn analytic_columns(s: &Scenario) -> (Option<f64>, Option<f64>) {
    let m = s.morphology.total_mass();
    let thrust = s.thrust_magnitude();
    let g = s.morphology.g;
    let mut v = s.initial.com_velocity.x;
    if let Some(p) = s.pushes.first() {
        v += p.impulse.x / m;
    }
    let offset = capture_point(v, s.z0, m, thrust, g).ok();
    let limit = match (s.plant, s.pushes.first(), effective_gravity(m, thrust, g)) {
        (PlantKind::Vlip, Some(p), Ok(g_eff)) => {
            let omega = natural_frequency(s.z0, g_eff);
            let period = s.gait.step_duration;
            let since = p.time.rem_euclid(period);
            let time_to_step = if since == 0.0 { period } else { period - since };
            let reach = horizontal_reach(s.gait.max_leg_length, s.z0);
            Some(m * capturable_push_limit(omega, reach, time_to_step, period))
        }
        _ => None,
    };
    (offset, limit)
}

fn row(index: usize, value: f64, base: &Scenario, param: &str, bundle_root: Option<&Path>) -> SweepRow {
    let mut r = SweepRow {
        index,
        value,
        outcome: None,
        fell: None,
        fall_time: None,
        steps: None,
        limit_cycle_residual: None,
        mean_com_height_error: None,
        peak_joint_torque: None,
        total_thruster_impulse: None,
        max_step_offset: None,
        analytic_capture_offset: None,
        analytic_push_limit: None,
        error: None,
    };
    let s = match with_param(base, param, value) {
        Ok(s) => Scenario { name: format!("{}-{index:03}", base.name), ..s },
        Err(e) => {
            r.error = Some(e.to_string());
            return r;
        }
    };
    (r.analytic_capture_offset, r.analytic_push_limit) = analytic_columns(&s);
    let problems = s.check();
    if !problems.is_empty() {
        r.error = Some(problems.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "));
        return r;
    }
    let out = run_scenario(&s);
    let m = &out.metrics;
    r.outcome = Some(m.outcome);
    r.fell = Some(m.fell);
    r.fall_time = m.fall_time;
    r.steps = Some(m.steps);
    r.limit_cycle_residual = m.limit_cycle_residual;
    r.mean_com_height_error = Some(m.mean_com_height_error);
    r.peak_joint_torque = Some(m.peak_joint_torque);
    r.total_thruster_impulse = Some(m.total_thruster_impulse);
    r.max_step_offset = Some(m.max_step_offset);
    r.error = m.failure.clone().filter(|_| m.outcome == Outcome::BlewUp);
    if let Some(root) = bundle_root {
        if let Err(e) = write_bundle(&root.join(format!("run-{index:03}")), &s, &out) {
            r.error = Some(e.to_string());
        }
    }
    r
}

/// Runs `base` once per value of `param` on `jobs` threads. Rows come back
/// in the order of `values`; a failing run is recorded in its row and the
/// sweep continues. With `bundle_root` set, each run also writes its bundle
/// to `run-NNN` below it.
pub fn sweep(base: &Scenario, param: &str, values: &[f64], jobs: usize, bundle_root: Option<&Path>) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidInput { name: "values", reason: "the sweep needs at least one value".into() });
    }
    // a bad path is a usage error, not a per-row failure
    with_param(base, param, values[0])?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput { name: "jobs", reason: e.to_string() })?;
    Ok(pool.install(|| {
        values.par_iter().enumerate().map(|(i, v)| row(i, *v, base, param, bundle_root)).collect()
    }))
}

pub fn write_summary(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Parses a comma-separated list of numbers.
pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    let values = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidInput { name: "values", reason: format!("`{s}` is not a number") }))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::InvalidInput { name: "values", reason: "the sweep needs at least one value".into() });
    }
    Ok(values)
}
