//! Compliant flat ground at z = 0 with undamped rebound and Stribeck friction.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::dynamics::GroundForces;
use crate::error::Violation;
use crate::kinematics::RobotKinematics;
use crate::math::Vec3;
use crate::state::{FullState, Side};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundModelParams {
    /// Normal stiffness (N/m).
    pub k_gp: f64,
    /// Normal damping during compression (N·s/m).
    pub k_gd: f64,
    pub mu_c: f64,
    pub mu_s: f64,
    /// Viscous coefficient (N·s/m).
    pub mu_v: f64,
    /// Stribeck velocity (m/s).
    pub v_s: f64,
}

impl Default for GroundModelParams {
    fn default() -> Self {
        GroundModelParams { k_gp: 8000.0, k_gd: 300.0, mu_c: 0.7, mu_s: 0.9, mu_v: 0.1, v_s: 0.01 }
    }
}

impl GroundModelParams {
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.k_gp > 0.0) {
            out.push(Violation::new("ground.k_gp", "stiffness must be positive"));
        }
        if !(self.k_gd >= 0.0) {
            out.push(Violation::new("ground.k_gd", "damping must be non-negative"));
        }
        if !(self.mu_c >= 0.0) {
            out.push(Violation::new("ground.mu_c", "Coulomb coefficient must be non-negative"));
        }
        if !(self.mu_s >= self.mu_c) {
            out.push(Violation::new(
                "ground.mu_s",
                format!("Stribeck friction needs mu_s >= mu_c (got mu_s = {}, mu_c = {})", self.mu_s, self.mu_c),
            ));
        }
        if !(self.mu_v >= 0.0) {
            out.push(Violation::new("ground.mu_v", "viscous coefficient must be non-negative"));
        }
        if !(self.v_s > 0.0) {
            out.push(Violation::new("ground.v_s", "Stribeck velocity must be positive"));
        }
        out
    }
}

/// Heaviside gate used by the ground model: 1 strictly below the surface.
pub fn heaviside_below(p_z: f64) -> f64 {
    if p_z < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Spring-damper normal force. Damping is switched off while the foot
/// rebounds (ṗ_z > 0) and the result never pulls.
pub fn normal_force(params: &GroundModelParams, p_z: f64, v_z: f64) -> f64 {
    if p_z >= 0.0 {
        return 0.0;
    }
    let k_d = if v_z > 0.0 { 0.0 } else { params.k_gd };
    (-params.k_gp * p_z - k_d * v_z).max(0.0)
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Friction along one tangential axis.
pub fn friction_axis(params: &GroundModelParams, v: f64, f_z: f64) -> f64 {
    let stribeck = params.mu_c + (params.mu_s - params.mu_c) * (-(v * v) / (params.v_s * params.v_s)).exp();
    -stribeck * f_z * sgn(v) - params.mu_v * v
}

/// Tangential friction for the (x, y) foot velocity.
pub fn friction_force(params: &GroundModelParams, v_tangential: &Vector2<f64>, f_z: f64) -> Vector2<f64> {
    Vector2::new(friction_axis(params, v_tangential.x, f_z), friction_axis(params, v_tangential.y, f_z))
}

/// Contact force on one foot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactForce {
    pub force: Vec3,
    pub in_contact: bool,
    /// Penetration depth (m, positive below ground).
    pub penetration: f64,
}

pub fn foot_contact(params: &GroundModelParams, pos: &Vec3, vel: &Vec3) -> ContactForce {
    let gate = heaviside_below(pos.z);
    if gate == 0.0 {
        return ContactForce::default();
    }
    let f_z = normal_force(params, pos.z, vel.z);
    let t = friction_force(params, &Vector2::new(vel.x, vel.y), f_z);
    ContactForce { force: Vec3::new(t.x, t.y, f_z) * gate, in_contact: true, penetration: -pos.z }
}

/// Ground forces on both feet given foot positions and velocities.
pub fn ground_forces(params: &GroundModelParams, feet: &[(Vec3, Vec3); 2]) -> [ContactForce; 2] {
    [foot_contact(params, &feet[0].0, &feet[0].1), foot_contact(params, &feet[1].0, &feet[1].1)]
}

/// Ground forces for the full robot at a state.
pub fn robot_ground_forces(params: &GroundModelParams, state: &FullState, kin: &RobotKinematics) -> GroundForces {
    Side::BOTH.map(|side| {
        let pos = kin.leg(side).foot.pos;
        let vel = kin.foot_velocity(state, side);
        foot_contact(params, &pos, &vel).force
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(k_gp: f64, k_gd: f64) -> GroundModelParams {
        GroundModelParams { k_gp, k_gd, ..Default::default() }
    }

    #[test]
    fn normal_force_examples() {
        assert_eq!(normal_force(&params(1e4, 100.0), 0.01, -1.0), 0.0);
        assert_relative_eq!(normal_force(&params(1e4, 100.0), -0.001, 0.0), 10.0, epsilon = 1e-12);
        assert_relative_eq!(normal_force(&params(1e4, 100.0), -0.001, 0.5), 10.0, epsilon = 1e-12);
        // compressing: damping adds
        assert_relative_eq!(normal_force(&params(1e4, 100.0), -0.001, -0.1), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn friction_examples() {
        let p = GroundModelParams { mu_c: 0.8, mu_s: 1.0, mu_v: 0.0, v_s: 0.01, ..Default::default() };
        assert_eq!(friction_axis(&p, 0.0, 10.0), 0.0);
        assert_relative_eq!(friction_axis(&p, 0.01, 10.0), -8.7358, epsilon = 1e-4);
        assert_relative_eq!(friction_axis(&p, 0.01, 10.0), -(0.8 + 0.2 * (-1.0f64).exp()) * 10.0, epsilon = 1e-14);
        let q = GroundModelParams { mu_v: 0.1, ..p };
        assert_relative_eq!(friction_axis(&q, 5.0, 10.0), -(0.8 * 10.0 + 0.5), epsilon = 1e-12);
    }

    #[test]
    fn airborne_feet_feel_nothing() {
        let p = GroundModelParams::default();
        let f = ground_forces(&p, &[(Vec3::new(0.0, 0.1, 0.02), Vec3::zeros()), (Vec3::new(0.0, -0.1, 0.01), Vec3::x())]);
        assert_eq!(f[0].force, Vec3::zeros());
        assert_eq!(f[1].force, Vec3::zeros());
        let f = ground_forces(&p, &[(Vec3::new(0.0, 0.1, -0.002), Vec3::new(0.1, 0.0, -0.1)), (Vec3::new(0.0, -0.1, 0.01), Vec3::x())]);
        assert!(f[0].in_contact && f[0].force.z > 0.0);
        assert_eq!(f[1].force, Vec3::zeros());
        assert!(!f[1].in_contact);
    }

    proptest! {
        #[test]
        fn normal_force_never_pulls(z in -0.1..0.1f64, vz in -5.0..5.0f64) {
            prop_assert!(normal_force(&GroundModelParams::default(), z, vz) >= 0.0);
        }

        #[test]
        fn friction_opposes_sliding(vx in -2.0..2.0f64, vy in -2.0..2.0f64, fz in 0.0..100.0f64) {
            let v = Vector2::new(vx, vy);
            let f = friction_force(&GroundModelParams::default(), &v, fz);
            prop_assert!(f.dot(&v) <= 0.0);
        }

        #[test]
        fn damper_only_removes_energy(z in -0.05..0.0f64, vz in -5.0..0.0f64) {
            // While compressing, the ground absorbs at least what the spring stores.
            let p = GroundModelParams::default();
            let f = normal_force(&p, z, vz);
            let power = f * vz;
            prop_assert!(power <= 0.0);
            if f > 0.0 {
                prop_assert!(power <= (-p.k_gp * z) * vz + 1e-12);
            }
        }
    }
}
