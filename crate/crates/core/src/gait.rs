//! Step timing: which leg supports the body and when support changes hands.

use serde::{Deserialize, Serialize};

use crate::error::Violation;
use crate::state::Side;

/// Gait and capture-point planner parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitParams {
    /// Nominal single-support duration (s).
    pub step_duration: f64,
    /// Lateral distance between consecutive footholds (m).
    pub step_width: f64,
    /// Desired forward walking speed (m/s); 0 steps in place.
    pub forward_speed: f64,
    /// Vertical thrust as a fraction of the total weight.
    pub thrust_fraction: f64,
    /// Orbital-energy level (m²/s²) that triggers an early step; absent disables it.
    pub energy_threshold: Option<f64>,
    /// Support changes are ignored until the stance is at least this old (s).
    pub min_stance_time: f64,
    /// Longest admissible distance from CoM to foothold (m).
    pub max_leg_length: f64,
    /// Swing-foot apex height above the higher endpoint (m).
    pub swing_apex: f64,
    /// Both feet off the ground for longer than this marks a fall candidate (s).
    pub airborne_grace: f64,
    pub initial_stance: Side,
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            step_duration: 0.4,
            step_width: 0.2,
            forward_speed: 0.0,
            thrust_fraction: 0.5,
            energy_threshold: None,
            min_stance_time: 0.15,
            max_leg_length: 0.6,
            swing_apex: 0.05,
            airborne_grace: 0.2,
            initial_stance: Side::Left,
        }
    }
}

impl GaitParams {
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.step_duration > 0.0) {
            out.push(Violation::new("gait.step_duration", "must be positive"));
        }
        if !(self.thrust_fraction >= 0.0 && self.thrust_fraction < 1.0) {
            out.push(Violation::new(
                "gait.thrust_fraction",
                format!(
                    "must lie in [0, 1): effective gravity g' = g - |u_tc|/m must stay positive (got {})",
                    self.thrust_fraction
                ),
            ));
        }
        if !(self.min_stance_time >= 0.0 && self.min_stance_time <= self.step_duration) {
            out.push(Violation::new("gait.min_stance_time", "must lie in [0, step_duration]"));
        }
        if !(self.max_leg_length > 0.0) {
            out.push(Violation::new("gait.max_leg_length", "must be positive"));
        }
        if !(self.step_width >= 0.0) {
            out.push(Violation::new("gait.step_width", "must be non-negative"));
        }
        if !(self.swing_apex >= 0.0) {
            out.push(Violation::new("gait.swing_apex", "must be non-negative"));
        }
        if !(self.airborne_grace >= 0.0) {
            out.push(Violation::new("gait.airborne_grace", "must be non-negative"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaitStatus {
    pub stance: Side,
    pub swing: Side,
    /// Fraction of the nominal step elapsed, in [0, 1].
    pub phase: f64,
    /// Time since the current stance began (s).
    pub elapsed: f64,
    /// Support changed hands on this update.
    pub step_event: bool,
    pub fall_candidate: bool,
}

const TIME_EPS: f64 = 1e-9;

/// Alternating-stance state machine driven by the control clock.
#[derive(Clone, Debug)]
pub struct GaitScheduler {
    step_duration: f64,
    min_stance_time: f64,
    airborne_grace: f64,
    stance: Side,
    stance_start: f64,
    airborne_since: Option<f64>,
    last_time: f64,
    steps: usize,
}

impl GaitScheduler {
    pub fn new(params: &GaitParams, t0: f64) -> Self {
        GaitScheduler {
            step_duration: params.step_duration,
            min_stance_time: params.min_stance_time,
            airborne_grace: params.airborne_grace,
            stance: params.initial_stance,
            stance_start: t0,
            airborne_since: None,
            last_time: t0,
            steps: 0,
        }
    }

    pub fn stance(&self) -> Side {
        self.stance
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Restarts the current stance at `t` without a step event.
    pub fn restart(&mut self, t: f64) {
        self.stance_start = t;
        self.last_time = t;
    }

    fn status(&self, t: f64, step_event: bool, fall_candidate: bool) -> GaitStatus {
        let elapsed = t - self.stance_start;
        GaitStatus {
            stance: self.stance,
            swing: self.stance.other(),
            phase: (elapsed / self.step_duration).clamp(0.0, 1.0),
            elapsed,
            step_event,
            fall_candidate,
        }
    }

    /// Advances to time `t` given per-foot contact flags `[left, right]`.
    ///
    /// Support switches when the swing foot is in contact and either the
    /// nominal step time has run out or `early` is requested, but never before
    /// the minimum stance time.
    pub fn update(&mut self, t: f64, contact: [bool; 2], early: bool) -> GaitStatus {
        debug_assert!(t >= self.last_time, "clock must be monotone");
        self.last_time = t;

        let fall_candidate = if contact.iter().any(|&c| c) {
            self.airborne_since = None;
            false
        } else {
            let since = *self.airborne_since.get_or_insert(t);
            t - since > self.airborne_grace
        };

        // absorb clock round-off so a step due at t lands on that tick
        let elapsed = t - self.stance_start + TIME_EPS;
        let swing_down = contact[self.stance.other().index()];
        let due = elapsed >= self.step_duration || (early && elapsed >= self.min_stance_time);
        if swing_down && due && elapsed >= self.min_stance_time {
            self.stance = self.stance.other();
            self.stance_start = t;
            self.steps += 1;
            return self.status(t, true, fall_candidate);
        }
        self.status(t, false, fall_candidate)
    }
}
