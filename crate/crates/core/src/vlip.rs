//! Variable-length inverted pendulum with thrust, its planar projections,
//! orbital energy and the capture-point foothold planner.
//!
//! Leg constraint: `rᵀ(p̈_B − c̈) = u_r` with `r = p_B − c`, no slip (`c̈ = 0`).
//! The constraint force is `r λ`, so `|r| λ` is the force along the leg.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::GaitParams;
use crate::math::Vec3;
use crate::state::Side;

/// Tolerance below which |E| counts as rest (m²/s²).
pub const REST_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VlipState {
    /// CoM position (m).
    pub p: Vec3,
    /// CoM velocity (m/s).
    pub v: Vec3,
    /// Centre of pressure / stance foot (m).
    pub c: Vec3,
    /// Nominal pendulum height (m).
    pub z0: f64,
    /// Total mass (kg).
    pub m: f64,
}

impl VlipState {
    pub fn leg(&self) -> Vec3 {
        self.p - self.c
    }

    fn checked_leg(&self) -> Result<Vec3> {
        let r = self.leg();
        if !(r.norm() > 0.0) {
            return Err(Error::DegeneratePendulum);
        }
        Ok(r)
    }
}

/// Thrust acting on the CoM (N, inertial frame).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThrustCommand {
    pub force: Vec3,
}

impl ThrustCommand {
    pub fn vertical(magnitude: f64) -> Self {
        ThrustCommand { force: Vec3::new(0.0, 0.0, magnitude) }
    }

    pub fn magnitude(&self) -> f64 {
        self.force.norm()
    }

    /// Tilt from vertical in the x–z plane (rad).
    pub fn sagittal_tilt(&self) -> f64 {
        self.force.x.atan2(self.force.z)
    }

    /// Tilt from vertical in the y–z plane (rad).
    pub fn frontal_tilt(&self) -> f64 {
        self.force.y.atan2(self.force.z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VlipAcceleration {
    pub acc: Vec3,
    /// Constraint multiplier λ (force = r λ).
    pub lambda: f64,
    /// Force along the leg, |r| λ (N).
    pub leg_force: f64,
}

/// CoM acceleration of the pendulum for leg input `u_r`.
///
/// Fails with [`Error::ConstraintPulling`] when the leg would have to pull.
pub fn vlip_dynamics(state: &VlipState, u_r: f64, thrust: &ThrustCommand, g: f64) -> Result<VlipAcceleration> {
    let r = state.checked_leg()?;
    let free = Vec3::new(0.0, 0.0, -g) + thrust.force / state.m;
    let lambda = state.m * (u_r - r.dot(&free)) / r.norm_squared();
    if lambda < 0.0 {
        return Err(Error::ConstraintPulling { lambda });
    }
    Ok(VlipAcceleration { acc: free + r * (lambda / state.m), lambda, leg_force: r.norm() * lambda })
}

/// Leg input that produces vertical CoM acceleration `a_z`.
pub fn leg_input_for_vertical_accel(state: &VlipState, thrust: &ThrustCommand, g: f64, a_z: f64) -> Result<f64> {
    let r = state.checked_leg()?;
    if r.z.abs() < 1e-12 {
        return Err(Error::DegeneratePendulum);
    }
    let free = Vec3::new(0.0, 0.0, -g) + thrust.force / state.m;
    let lambda = state.m * (a_z - free.z) / r.z;
    Ok(r.dot(&free) + r.norm_squared() * lambda / state.m)
}

/// Height servo `z̈ = −k_p (z − z0) − k_d ż` expressed as a leg input.
pub fn height_hold_input(state: &VlipState, thrust: &ThrustCommand, g: f64, kp: f64, kd: f64) -> Result<f64> {
    let a_z = -kp * (state.p.z - state.z0) - kd * state.v.z;
    leg_input_for_vertical_accel(state, thrust, g, a_z)
}

/// Weighted-average centre of pressure of two feet. `None` without load.
pub fn center_of_pressure(feet: &[Vec3; 2], normal: &[f64; 2]) -> Option<Vec3> {
    let total = normal[0] + normal[1];
    if !(total > 0.0) {
        return None;
    }
    Some(feet[0] * (normal[0] / total) + feet[1] * (normal[1] / total))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Sagittal,
    Frontal,
}

/// Height-constrained pendulum projected on one plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarState {
    /// CoM offset from the CoP along the plane's horizontal axis (m).
    pub x: f64,
    pub xd: f64,
    pub z0: f64,
    /// Leg angle from vertical (rad).
    pub theta_l: f64,
    /// Thrust angle from vertical (rad).
    pub theta_t: f64,
    /// Leg force magnitude (N).
    pub lambda: f64,
    /// Horizontal acceleration (m/s²).
    pub xdd: f64,
    /// Effective gravity g − |u| cos θ_T / m (m/s²).
    pub g_eff: f64,
}

/// Projection of the height-constrained pendulum on the x–z or y–z plane.
pub fn planar_projection(state: &VlipState, thrust: &ThrustCommand, g: f64, plane: Plane) -> Result<PlanarState> {
    let r = state.checked_leg()?;
    let (x, xd, u_h) = match plane {
        Plane::Sagittal => (r.x, state.v.x, thrust.force.x),
        Plane::Frontal => (r.y, state.v.y, thrust.force.y),
    };
    let u = u_h.hypot(thrust.force.z);
    let theta_t = u_h.atan2(thrust.force.z);
    let vertical = u * theta_t.cos();
    let weight = state.m * g;
    if vertical >= weight {
        return Err(Error::NonPositiveEffectiveGravity { thrust: vertical, weight });
    }
    let leg = x.hypot(state.z0);
    let lambda = (weight - vertical) * leg / state.z0;
    let xdd = (x / state.z0 * (weight - vertical) + u * theta_t.sin()) / state.m;
    Ok(PlanarState {
        x,
        xd,
        z0: state.z0,
        theta_l: x.atan2(state.z0),
        theta_t,
        lambda,
        xdd,
        g_eff: g - vertical / state.m,
    })
}

pub fn sagittal_projection(state: &VlipState, thrust: &ThrustCommand, g: f64) -> Result<PlanarState> {
    planar_projection(state, thrust, g, Plane::Sagittal)
}

pub fn frontal_projection(state: &VlipState, thrust: &ThrustCommand, g: f64) -> Result<PlanarState> {
    planar_projection(state, thrust, g, Plane::Frontal)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyClass {
    /// Enough energy to carry the CoM over the foot.
    PassOver,
    /// The CoM stops and turns back before the foot.
    Reverse,
    /// Comes to rest above the foot.
    Rest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitalEnergy {
    /// Energy per unit mass (m²/s²).
    pub e: f64,
    pub class: EnergyClass,
}

/// `E = ½ẋ² − ½ g_eff x² / z0`.
pub fn orbital_energy(x: f64, xd: f64, z0: f64, g_eff: f64) -> OrbitalEnergy {
    let e = 0.5 * xd * xd - 0.5 * g_eff * x * x / z0;
    let class = if e.abs() <= REST_TOLERANCE {
        EnergyClass::Rest
    } else if e > 0.0 {
        EnergyClass::PassOver
    } else {
        EnergyClass::Reverse
    };
    OrbitalEnergy { e, class }
}

/// g − |u|/m, rejecting non-positive values.
pub fn effective_gravity(m: f64, thrust_mag: f64, g: f64) -> Result<f64> {
    let weight = m * g;
    if !(thrust_mag < weight) {
        return Err(Error::NonPositiveEffectiveGravity { thrust: thrust_mag, weight });
    }
    Ok(g - thrust_mag / m)
}

/// Natural frequency √(g_eff / z0) (1/s).
pub fn natural_frequency(z0: f64, g_eff: f64) -> f64 {
    (g_eff / z0).sqrt()
}

/// Eigenvalues ±ω of the linearised planar pendulum.
pub fn saddle_eigenvalues(z0: f64, g_eff: f64) -> [f64; 2] {
    let w = natural_frequency(z0, g_eff);
    [-w, w]
}

/// Foothold offset ahead of the CoM that zeroes the orbital energy:
/// `ẋ √(z0 / (g − |u|/m))`.
pub fn capture_point(xd: f64, z0: f64, m: f64, thrust_mag: f64, g: f64) -> Result<f64> {
    let g_eff = effective_gravity(m, thrust_mag, g)?;
    Ok(xd * (z0 / g_eff).sqrt())
}

/// Foothold chosen for the next step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapturePlan {
    /// Capture-point offsets ẋ/ω, ẏ/ω from the CoM (m).
    pub capture_offset: [f64; 2],
    /// Foothold relative to the CoM before reach clamping (m).
    pub raw_offset: [f64; 2],
    /// Commanded foothold on the ground (m).
    pub target: Vec3,
    pub g_eff: f64,
    pub step_duration: f64,
    /// Frontal bias added to the frontal capture point (m, signed).
    pub width_bias: f64,
    pub swing: Side,
    /// The target was pulled back into the reachable disc.
    pub clamped: bool,
}

/// Horizontal reach radius for a foothold at ground level.
pub fn horizontal_reach(max_leg_length: f64, z0: f64) -> f64 {
    (max_leg_length * max_leg_length - z0 * z0).max(0.0).sqrt()
}

/// Capture-point foothold for the swing leg.
///
/// Sagittal: CoM + ẋ/ω, minus the offset that keeps a steady walk at the
/// requested speed. Frontal: CoM + ẏ/ω plus a step-width bias towards the
/// swing side. Both use the thrust-reduced gravity.
pub fn plan_step(state: &VlipState, thrust: &ThrustCommand, g: f64, gait: &GaitParams, swing: Side) -> Result<CapturePlan> {
    let vertical = thrust.force.z;
    let g_eff = effective_gravity(state.m, vertical, g)?;
    let omega = natural_frequency(state.z0, g_eff);
    let growth = (omega * gait.step_duration).exp();
    let cp = [state.v.x / omega, state.v.y / omega];
    let speed_offset = if gait.forward_speed == 0.0 { 0.0 } else { gait.forward_speed * gait.step_duration / (growth - 1.0) };
    let width_bias = swing.sign() * gait.step_width / (1.0 + growth);
    let raw = [cp[0] - speed_offset, cp[1] + width_bias];
    let reach = horizontal_reach(gait.max_leg_length, state.z0);
    let norm = raw[0].hypot(raw[1]);
    let (offset, clamped) = if norm > reach {
        let s = reach / norm;
        ([raw[0] * s, raw[1] * s], true)
    } else {
        (raw, false)
    };
    Ok(CapturePlan {
        capture_offset: cp,
        raw_offset: raw,
        target: Vec3::new(state.p.x + offset[0], state.p.y + offset[1], 0.0),
        g_eff,
        step_duration: gait.step_duration,
        width_bias,
        swing,
        clamped,
    })
}

/// State of the linear pendulum `ẍ = ω² x` after `t` seconds.
pub fn lip_flow(x: f64, xd: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = ((omega * t).sinh(), (omega * t).cosh());
    (x * c + xd / omega * s, x * omega * s + xd * c)
}

/// Sagittal push-recovery rollout of the capture-point stepping policy on
/// the height-constrained pendulum, in closed form.
///
/// The CoM starts at rest above the stance foot; a push of `dv` arrives
/// `time_to_step` seconds before the next step. Every step places the foot
/// at the capture point, at most `reach` from the CoM, and steps recur
/// every `period`. Falling means the CoM leaves the reach of the stance foot.
/// Returns true when the CoM comes back inside `tolerance` of rest.
pub fn recovers_from_push(dv: f64, omega: f64, reach: f64, time_to_step: f64, period: f64, max_steps: usize) -> bool {
    // coordinates relative to the stance foot
    let (mut x, mut v) = lip_flow(0.0, dv, omega, time_to_step);
    for _ in 0..max_steps {
        if x.abs() > reach {
            return false;
        }
        // the new foot lands at the capture point ahead of the CoM, within reach
        x = -(v / omega).clamp(-reach, reach);
        // divergent component relative to the new foot decides the outcome
        let residual = x + v / omega;
        if residual.abs() <= 1e-12 * dv.abs().max(1.0) {
            return true;
        }
        (x, v) = lip_flow(x, v, omega, period);
    }
    (x + v / omega).abs() <= 1e-9
}

/// Largest push velocity change the stepping policy recovers from, by
/// bisection on [`recovers_from_push`].
pub fn capturable_push_limit(omega: f64, reach: f64, time_to_step: f64, period: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = reach * omega * 10.0;
    debug_assert!(!recovers_from_push(hi, omega, reach, time_to_step, period, 50));
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if recovers_from_push(mid, omega, reach, time_to_step, period, 50) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const G: f64 = 9.81;

    fn upright(m: f64, z0: f64) -> VlipState {
        VlipState { p: Vec3::new(0.0, 0.0, z0), v: Vec3::zeros(), c: Vec3::zeros(), z0, m }
    }

    #[test]
    fn static_support_carries_full_weight() {
        let s = upright(10.0, 0.5);
        let thrust = ThrustCommand::default();
        let u_r = leg_input_for_vertical_accel(&s, &thrust, G, 0.0).unwrap();
        let a = vlip_dynamics(&s, u_r, &thrust, G).unwrap();
        assert!(a.acc.norm() < 1e-12);
        assert_relative_eq!(a.leg_force, 10.0 * G, epsilon = 1e-10);
    }

    #[test]
    fn full_thrust_hover() {
        let mut s = upright(10.0, 0.5);
        s.p.x = 0.1;
        s.v = Vec3::new(0.3, -0.2, 0.1);
        let a = vlip_dynamics(&s, 0.0, &ThrustCommand::vertical(10.0 * G), G).unwrap();
        assert!(a.acc.norm() < 1e-12);
    }

    #[test]
    fn pulling_leg_is_reported() {
        let s = upright(10.0, 0.5);
        let r = vlip_dynamics(&s, -20.0, &ThrustCommand::default(), G);
        assert!(matches!(r, Err(Error::ConstraintPulling { .. })));
        let mut d = s;
        d.p = d.c;
        assert!(matches!(vlip_dynamics(&d, 0.0, &ThrustCommand::default(), G), Err(Error::DegeneratePendulum)));
    }

    #[test]
    fn linear_mode_matches_buoyancy_equation() {
        let mut s = upright(10.0, 0.5);
        s.p.x = 0.1;
        let thrust = ThrustCommand::vertical(49.05);
        let u_r = leg_input_for_vertical_accel(&s, &thrust, G, 0.0).unwrap();
        let a = vlip_dynamics(&s, u_r, &thrust, G).unwrap();
        assert_relative_eq!(a.acc.x, (G - 4.905) * 0.1 / 0.5, epsilon = 1e-10);
        assert!(a.acc.z.abs() < 1e-12);
    }

    #[test]
    fn sagittal_examples() {
        let s = upright(10.0, 0.5);
        let p = sagittal_projection(&s, &ThrustCommand::default(), G).unwrap();
        assert_eq!(p.xdd, 0.0);
        let mut s2 = s;
        s2.p.x = 0.1;
        let p = sagittal_projection(&s2, &ThrustCommand::vertical(49.05), G).unwrap();
        assert_relative_eq!(p.xdd, 0.981, epsilon = 1e-12);
        assert!(sagittal_projection(&s2, &ThrustCommand::vertical(10.0 * G), G).is_err());
    }

    #[test]
    fn tilted_thrust_matches_unprojected_equations() {
        let mut s = upright(10.0, 0.5);
        s.p.x = 0.12;
        let u = 40.0;
        let th: f64 = 0.2;
        let thrust = ThrustCommand { force: Vec3::new(u * th.sin(), 0.0, u * th.cos()) };
        let p = sagittal_projection(&s, &thrust, G).unwrap();
        // m ẍ = |λ| sin θ_L + |u| sin θ_T with |λ| from the height constraint
        let r = s.leg().norm();
        let lambda = (10.0 * G - u * th.cos()) * r / 0.5;
        let expected = (lambda * 0.12 / r + u * th.sin()) / 10.0;
        assert_relative_eq!(p.xdd, expected, epsilon = 1e-12);
        assert_relative_eq!(p.lambda, lambda, epsilon = 1e-12);
        // vertical balance holds: −mg + |λ| cos θ_L + |u| cos θ_T = 0
        assert!((-10.0 * G + lambda * 0.5 / r + u * th.cos()).abs() < 1e-12);
    }

    #[test]
    fn orbital_energy_examples() {
        let e = orbital_energy(0.0, 0.0, 0.5, G);
        assert_eq!(e.class, EnergyClass::Rest);
        let w = (G / 0.5f64).sqrt();
        assert!(orbital_energy(0.2, -0.2 * w, 0.5, G).e.abs() < 1e-15);
        let e = orbital_energy(0.1, 0.5, 0.5, G);
        assert_relative_eq!(e.e, 0.125 - 0.5 * G * 0.01 / 0.5, epsilon = 1e-15);
        assert_relative_eq!(e.e, 0.0269, epsilon = 1e-4);
        assert_eq!(e.class, EnergyClass::PassOver);
        assert_eq!(orbital_energy(0.3, 0.1, 0.5, G).class, EnergyClass::Reverse);
    }

    #[test]
    fn capture_point_examples() {
        assert_eq!(capture_point(0.0, 0.5, 10.0, 0.0, G).unwrap(), 0.0);
        let a = capture_point(0.5, 0.5, 10.0, 0.0, G).unwrap();
        assert_relative_eq!(a, 0.5 * (0.5 / G).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(a, 0.11288, epsilon = 1e-5);
        let b = capture_point(0.5, 0.5, 10.0, 49.05, G).unwrap();
        assert_relative_eq!(b, 0.15964, epsilon = 1e-5);
        // stepping there leaves the CoM on the stable manifold of the new stance
        let e = orbital_energy(-b, 0.5, 0.5, G - 4.905);
        assert!(e.e.abs() <= 1e-12);
        assert!(capture_point(0.5, 0.5, 10.0, 10.0 * G, G).is_err());
    }

    #[test]
    fn planner_at_rest_uses_width_only() {
        let s = upright(4.2, 0.5);
        let gait = GaitParams { thrust_fraction: 0.0, ..Default::default() };
        let plan = plan_step(&s, &ThrustCommand::default(), G, &gait, Side::Right).unwrap();
        assert_eq!(plan.target.x, 0.0);
        assert!(plan.target.y < 0.0);
        assert!(!plan.clamped);
    }

    #[test]
    fn planner_sagittal_offsets() {
        let mut s = upright(10.0, 0.5);
        s.v.x = 0.5;
        let gait = GaitParams { step_width: 0.0, ..Default::default() };
        let plan = plan_step(&s, &ThrustCommand::default(), G, &gait, Side::Left).unwrap();
        assert_relative_eq!(plan.target.x, 0.11288, epsilon = 1e-5);
        let plan = plan_step(&s, &ThrustCommand::vertical(49.05), G, &gait, Side::Left).unwrap();
        assert_relative_eq!(plan.target.x, 0.15964, epsilon = 1e-5);
    }

    #[test]
    fn planner_clamps_to_reach() {
        let mut s = upright(10.0, 0.5);
        s.v.x = 5.0;
        let gait = GaitParams::default();
        let plan = plan_step(&s, &ThrustCommand::default(), G, &gait, Side::Left).unwrap();
        assert!(plan.clamped);
        let d = (plan.target - s.p).norm();
        assert_relative_eq!(d, gait.max_leg_length, epsilon = 1e-12);
    }

    #[test]
    fn recovery_rollout_has_a_threshold() {
        let w = (G / 0.5f64).sqrt();
        let reach = horizontal_reach(0.6, 0.5);
        let limit = capturable_push_limit(w, reach, 0.35, 0.4);
        // one-step bound: ξ at the step must fit in the reach
        let one_step = reach * w * (-w * 0.35f64).exp();
        assert!(limit >= one_step * (1.0 - 1e-9));
        assert!(recovers_from_push(0.99 * limit, w, reach, 0.35, 0.4, 50));
        assert!(!recovers_from_push(1.01 * limit, w, reach, 0.35, 0.4, 50));
    }

    #[test]
    fn saddle_eigenvalues_match_numerical() {
        let g_eff = G * 0.75;
        let a = nalgebra::Matrix2::new(0.0, 1.0, g_eff / 0.5, 0.0);
        let mut ev: Vec<f64> = a.eigenvalues().unwrap().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let [lo, hi] = saddle_eigenvalues(0.5, g_eff);
        assert!((ev[0] - lo).abs() < 1e-9 && (ev[1] - hi).abs() < 1e-9);
    }

    #[test]
    fn cop_single_support_is_the_foot() {
        let feet = [Vec3::new(0.1, 0.1, 0.0), Vec3::new(0.2, -0.1, 0.0)];
        assert_eq!(center_of_pressure(&feet, &[30.0, 0.0]).unwrap(), feet[0]);
        assert_eq!(center_of_pressure(&feet, &[0.0, 0.0]), None);
    }

    proptest! {
        #[test]
        fn capture_point_grows_with_thrust(xd in 0.01..2.0f64, f1 in 0.0..0.95f64, f2 in 0.0..0.95f64) {
            prop_assume!((f1 - f2).abs() > 1e-6);
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let a = capture_point(xd, 0.5, 4.2, lo * 4.2 * G, G).unwrap();
            let b = capture_point(xd, 0.5, 4.2, hi * 4.2 * G, G).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn orbital_class_matches_sign(x in -0.5..0.5f64, xd in -2.0..2.0f64) {
            let e = orbital_energy(x, xd, 0.5, G);
            match e.class {
                EnergyClass::PassOver => prop_assert!(e.e > 0.0),
                EnergyClass::Reverse => prop_assert!(e.e < 0.0),
                EnergyClass::Rest => prop_assert!(e.e.abs() <= REST_TOLERANCE),
            }
        }
    }
}
