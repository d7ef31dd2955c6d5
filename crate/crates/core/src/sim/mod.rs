//! Closed-loop simulation: scenarios, the two plants, logging and metrics.

mod full_order;
pub mod log;
pub mod metrics;
pub mod swing;
pub mod tracking;
mod vlip_plant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact::GroundModelParams;
use crate::error::Violation;
use crate::gait::GaitParams;
use crate::kinematics::RobotMorphology;
use crate::math::Vec3;

pub use log::{StanceRecord, StepEvent, TrajectoryLog};
pub use metrics::{Outcome, RunMetrics, POINCARE_THRESHOLD};
pub use tracking::ControllerParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantKind {
    Vlip,
    FullOrder,
}

/// Velocity impulse delivered to the CoM.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Push {
    /// Application time (s).
    pub time: f64,
    /// Impulse (N·s, inertial).
    pub impulse: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConditions {
    /// Foot clearance at release for the full-order plant (m).
    pub drop_height: f64,
    /// Initial CoM velocity added to the nominal start (m/s).
    pub com_velocity: Vec3,
    /// Half-width of a uniform random horizontal CoM velocity perturbation
    /// drawn from the scenario seed (m/s).
    pub perturbation: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        InitialConditions { drop_height: 0.01, com_velocity: Vec3::zeros(), perturbation: 0.0 }
    }
}

/// A fully resolved simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantKind,
    /// Simulated time (s).
    pub duration: f64,
    /// Controller and logging rate (Hz).
    pub control_rate: f64,
    /// Integrator step (s).
    pub dt: f64,
    pub seed: u64,
    /// Nominal CoM height (m).
    pub z0: f64,
    pub initial: InitialConditions,
    pub pushes: Vec<Push>,
    pub morphology: RobotMorphology,
    pub ground: GroundModelParams,
    pub gait: GaitParams,
    pub controller: ControllerParams,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: String::new(),
            plant: PlantKind::Vlip,
            duration: 10.0,
            control_rate: 1000.0,
            dt: 1e-4,
            seed: 0,
            z0: 0.41,
            initial: InitialConditions::default(),
            pushes: Vec::new(),
            morphology: RobotMorphology::default(),
            ground: GroundModelParams::default(),
            gait: GaitParams::default(),
            controller: ControllerParams::default(),
        }
    }
}

impl Scenario {
    /// Integrator steps per control tick.
    pub fn substeps(&self) -> usize {
        (1.0 / (self.control_rate * self.dt)).round().max(1.0) as usize
    }

    pub fn control_period(&self) -> f64 {
        self.dt * self.substeps() as f64
    }

    pub fn thrust_magnitude(&self) -> f64 {
        self.gait.thrust_fraction * self.morphology.weight()
    }

    /// Physical and schema sanity checks, all violations at once.
    pub fn check(&self) -> Vec<Violation> {
        let key = |field: &str| format!("scenario.{}.{field}", self.name);
        let mut out = Vec::new();
        if self.name.trim().is_empty() {
            out.push(Violation::new("scenario.name", "must not be empty"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            out.push(Violation::new(key("duration"), "must be positive"));
        }
        if !(self.dt > 0.0) {
            out.push(Violation::new(key("dt"), "must be positive"));
        }
        if !(self.control_rate > 0.0) {
            out.push(Violation::new(key("control_rate"), "must be positive"));
        }
        if self.dt > 0.0 && self.control_rate > 0.0 {
            let ratio = 1.0 / (self.control_rate * self.dt);
            if ratio < 1.0 - 1e-9 {
                out.push(Violation::new(
                    key("control_rate"),
                    format!("dt * control_rate must not exceed 1 (got {})", self.dt * self.control_rate),
                ));
            } else if (ratio - ratio.round()).abs() > 1e-6 {
                out.push(Violation::new(
                    key("control_rate"),
                    format!("control period must be a whole number of integrator steps (got {ratio})"),
                ));
            }
        }
        if !(self.z0 > 0.0) {
            out.push(Violation::new(key("z0"), "must be positive"));
        } else if self.z0 >= self.gait.max_leg_length {
            out.push(Violation::new(key("z0"), "must be below gait.max_leg_length"));
        }
        if !(self.initial.drop_height >= 0.0) {
            out.push(Violation::new(key("initial.drop_height"), "must be non-negative"));
        }
        if !(self.initial.perturbation >= 0.0) {
            out.push(Violation::new(key("initial.perturbation"), "must be non-negative"));
        }
        for (i, p) in self.pushes.iter().enumerate() {
            if !(p.time >= 0.0) || !p.impulse.iter().all(|v| v.is_finite()) {
                out.push(Violation::new(key(&format!("pushes[{i}]")), "needs a non-negative time and a finite impulse"));
            }
        }
        if self.thrust_magnitude() >= self.morphology.weight() {
            out.push(Violation::new(
                "gait.thrust_fraction",
                "thrust must stay below the total weight so that g' = g - |u_tc|/m > 0",
            ));
        }
        out.extend(self.morphology.check());
        out.extend(self.ground.check());
        out.extend(self.gait.check());
        out.extend(self.controller.check());
        out
    }

    /// Initial horizontal CoM velocity: nominal plus the seeded perturbation.
    pub(crate) fn initial_velocity(&self) -> Vec3 {
        let mut v = self.initial.com_velocity;
        let a = self.initial.perturbation;
        if a > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            v.x += rng.random_range(-a..=a);
            v.y += rng.random_range(-a..=a);
        }
        v
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub log: TrajectoryLog,
    pub metrics: RunMetrics,
}

/// Runs a scenario to completion, a fall, or a numerical failure. The log
/// is kept up to the point where the run stopped.
pub fn run_scenario(scenario: &Scenario) -> RunOutput {
    match scenario.plant {
        PlantKind::Vlip => vlip_plant::run(scenario),
        PlantKind::FullOrder => full_order::run(scenario),
    }
}
