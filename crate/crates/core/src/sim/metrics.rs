//! Scalar run summaries.

use serde::{Deserialize, Serialize};

use crate::sim::log::{StanceRecord, StepEvent, TrajectoryLog};
use crate::sim::{PlantKind, Scenario};
use crate::state::Side;

/// Cycle-to-cycle Poincaré residual below which walking counts as periodic.
pub const POINCARE_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Completed,
    Fell,
    BlewUp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub plant: PlantKind,
    pub outcome: Outcome,
    pub fell: bool,
    pub fall_time: Option<f64>,
    /// Why the run stopped early.
    pub failure: Option<String>,
    pub simulated_time: f64,
    pub steps: usize,
    /// Last cycle-to-cycle residual at left touchdown.
    pub limit_cycle_residual: Option<f64>,
    pub residual_history: Vec<f64>,
    /// Gait cycle from which every residual stays below [`POINCARE_THRESHOLD`].
    pub converged_cycle: Option<usize>,
    pub mean_com_height_error: f64,
    pub max_com_height_deviation: f64,
    /// Largest hip torque magnitude (N·m).
    pub peak_joint_torque: f64,
    /// Largest knee torque magnitude (N·m).
    pub peak_knee_torque: f64,
    pub total_thruster_impulse: f64,
    pub clamped_steps: usize,
    /// Largest horizontal CoM-to-foothold distance at a step (m).
    pub max_step_offset: f64,
    /// Smallest normal GRF among feet in contact (N).
    pub min_normal_force: f64,
    /// Worst |ΔE − W| over one-second windows (J); full-order plant only.
    pub energy_audit_error: Option<f64>,
    /// Footholds alternate sides of the mean CoM path.
    pub cop_alternates: bool,
}

/// Quantities gathered tick by tick.
#[derive(Clone, Debug)]
pub(crate) struct Accumulator {
    height_err_sum: f64,
    height_err_max: f64,
    samples: usize,
    pub peak_joint: f64,
    pub peak_knee: f64,
    pub impulse: f64,
    min_normal: f64,
    energy_work: Vec<(f64, f64)>,
}

impl Accumulator {
    pub fn new() -> Self {
        Accumulator {
            height_err_sum: 0.0,
            height_err_max: 0.0,
            samples: 0,
            peak_joint: 0.0,
            peak_knee: 0.0,
            impulse: 0.0,
            min_normal: f64::INFINITY,
            energy_work: Vec::new(),
        }
    }

    pub fn height(&mut self, err: f64) {
        self.height_err_sum += err.abs();
        self.height_err_max = self.height_err_max.max(err.abs());
        self.samples += 1;
    }

    pub fn normal(&mut self, f: f64) {
        self.min_normal = self.min_normal.min(f);
    }

    pub fn energy(&mut self, energy: f64, work: f64) {
        self.energy_work.push((energy, work));
    }

    pub fn finish(self, scenario: &Scenario, log: &TrajectoryLog, end: End) -> RunMetrics {
        let residuals = poincare_residuals(&log.steps);
        let window = (1.0 / scenario.control_period()).round() as usize;
        RunMetrics {
            scenario: scenario.name.clone(),
            plant: scenario.plant,
            outcome: end.outcome,
            fell: end.outcome == Outcome::Fell,
            fall_time: (end.outcome == Outcome::Fell).then_some(end.time),
            failure: end.reason,
            simulated_time: end.time,
            steps: log.steps.len(),
            limit_cycle_residual: residuals.last().copied(),
            converged_cycle: converged_cycle(&residuals, POINCARE_THRESHOLD),
            residual_history: residuals,
            mean_com_height_error: if self.samples > 0 { self.height_err_sum / self.samples as f64 } else { 0.0 },
            max_com_height_deviation: self.height_err_max,
            peak_joint_torque: self.peak_joint,
            peak_knee_torque: self.peak_knee,
            total_thruster_impulse: self.impulse,
            clamped_steps: log.steps.iter().filter(|s| s.clamped).count(),
            max_step_offset: log.steps.iter().map(|s| (s.target - s.com).xy().norm()).fold(0.0, f64::max),
            min_normal_force: if self.min_normal.is_finite() { self.min_normal } else { 0.0 },
            energy_audit_error: (!self.energy_work.is_empty()).then(|| energy_audit(&self.energy_work, window)),
            cop_alternates: footholds_alternate(&log.stances),
        }
    }
}

/// How a run ended.
pub(crate) struct End {
    pub outcome: Outcome,
    pub time: f64,
    pub reason: Option<String>,
}

/// Norms of differences between consecutive left-touchdown sections.
pub fn poincare_residuals(steps: &[StepEvent]) -> Vec<f64> {
    let sections: Vec<&Vec<f64>> = steps.iter().filter(|s| s.stance == Side::Left).map(|s| &s.section).collect();
    sections
        .windows(2)
        .map(|w| w[0].iter().zip(w[1].iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect()
}

/// First 1-based cycle after which all residuals stay below `threshold`.
pub fn converged_cycle(residuals: &[f64], threshold: f64) -> Option<usize> {
    let tail = residuals.iter().rev().take_while(|r| **r < threshold).count();
    (tail > 0).then(|| residuals.len() - tail + 1)
}

/// Worst energy-balance error over windows of `window` samples.
pub fn energy_audit(energy_work: &[(f64, f64)], window: usize) -> f64 {
    let w = window.clamp(1, energy_work.len().saturating_sub(1).max(1));
    if energy_work.len() < 2 {
        return 0.0;
    }
    energy_work
        .iter()
        .zip(energy_work.iter().skip(w))
        .map(|(a, b)| ((b.0 - a.0) - (b.1 - a.1)).abs())
        .fold(0.0, f64::max)
}

/// Every foothold lies on the opposite side of the mean CoM path from the
/// previous one, and on its own leg's side.
pub fn footholds_alternate(stances: &[StanceRecord]) -> bool {
    if stances.len() < 2 {
        return false;
    }
    stances.iter().all(|s| (s.foothold.y - s.mean_com.y) * s.side.sign() > 0.0)
        && stances.windows(2).all(|w| {
            let a = w[0].foothold.y - w[0].mean_com.y;
            let b = w[1].foothold.y - w[1].mean_com.y;
            a * b < 0.0
        })
}
