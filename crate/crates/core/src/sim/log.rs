//! Time series and discrete events recorded during a run.

use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::sim::PlantKind;
use crate::state::{FullState, Side};

/// One support change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub time: f64,
    /// Leg that takes over support.
    pub stance: Side,
    /// Where the new stance foot is.
    pub foothold: Vec3,
    /// Planned foothold for this step.
    pub target: Vec3,
    pub com: Vec3,
    pub com_velocity: Vec3,
    /// Capture-point offsets at the event (m).
    pub capture_offset: [f64; 2],
    /// The planner had to pull the target back into reach.
    pub clamped: bool,
    /// Poincaré-section vector at this event.
    pub section: Vec<f64>,
}

/// Summary of one single-support interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StanceRecord {
    pub side: Side,
    pub start: f64,
    pub end: f64,
    pub foothold: Vec3,
    /// Time-averaged CoM over the interval.
    pub mean_com: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryLog {
    pub plant: PlantKind,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub sample_period: f64,
    pub steps: Vec<StepEvent>,
    pub stances: Vec<StanceRecord>,
}

macro_rules! names {
    ($($n:literal),* $(,)?) => { [$($n),*] };
}

/// Column layout of full-order logs.
pub fn full_order_columns() -> Vec<&'static str> {
    let mut c = vec!["t"];
    c.extend(FullState::COLUMN_NAMES);
    c.extend(names!["tau_gamma_l", "tau_gamma_r", "tau_phi_h_l", "tau_phi_h_r", "acc_phi_k_l", "acc_phi_k_r"]);
    c.extend(names!["thrust_l_x", "thrust_l_y", "thrust_l_z", "thrust_r_x", "thrust_r_y", "thrust_r_z"]);
    c.extend(names!["grf_l_x", "grf_l_y", "grf_l_z", "grf_r_x", "grf_r_y", "grf_r_z"]);
    c.extend(names!["cop_x", "cop_y", "cop_z"]);
    c.extend(names!["com_x", "com_y", "com_z", "com_vx", "com_vy", "com_vz"]);
    c.extend(names!["tau_knee_l", "tau_knee_r", "stance", "phase", "target_x", "target_y", "energy", "work"]);
    c
}

/// Column layout of reduced-order logs.
pub fn vlip_columns() -> Vec<&'static str> {
    let mut c = vec!["t"];
    c.extend(names!["com_x", "com_y", "com_z", "com_vx", "com_vy", "com_vz"]);
    c.extend(names!["u_r", "thrust_x", "thrust_y", "thrust_z", "lambda", "leg_force"]);
    c.extend(names!["cop_x", "cop_y", "cop_z"]);
    c.extend(names!["orbital_energy_x", "orbital_energy_y", "stance", "phase", "target_x", "target_y"]);
    c
}

impl TrajectoryLog {
    pub fn new(plant: PlantKind, sample_period: f64) -> Self {
        let columns = match plant {
            PlantKind::Vlip => vlip_columns(),
            PlantKind::FullOrder => full_order_columns(),
        };
        TrajectoryLog { plant, columns, rows: Vec::new(), sample_period, steps: Vec::new(), stances: Vec::new() }
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// All samples of one column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[0]).collect()
    }
}

/// Running mean of the CoM over the current stance.
#[derive(Clone, Debug)]
pub(crate) struct StanceTracker {
    side: Side,
    start: f64,
    foothold: Vec3,
    sum: Vec3,
    samples: usize,
}

impl StanceTracker {
    pub fn new(side: Side, start: f64, foothold: Vec3) -> Self {
        StanceTracker { side, start, foothold, sum: Vec3::zeros(), samples: 0 }
    }

    pub fn sample(&mut self, com: &Vec3) {
        self.sum += com;
        self.samples += 1;
    }

    pub fn finish(&self, end: f64) -> Option<StanceRecord> {
        (self.samples > 0).then(|| StanceRecord {
            side: self.side,
            start: self.start,
            end,
            foothold: self.foothold,
            mean_com: self.sum / self.samples as f64,
        })
    }
}
