//! Morphology constants and forward/inverse kinematics of the legs.
//!
//! Each leg is a serial chain body → pelvis (fixed offset `l1_B`) → hip frame
//! (frontal rotation γ_h about x, offset `l2_P`) → knee frame (sagittal
//! rotation φ_h about y, offset `l3_H`) → foot. The knee-to-foot vector is the
//! closed-form parallel-linkage solution
//! `R_y(φ_k) [−l4a cos φ_k, 0, −(l4b + l4a sin φ_k)]ᵀ`.
//!
//! Mirroring: the right leg uses the left leg's offsets and inertias reflected
//! through the sagittal plane (y → −y), and its frontal angle turns about −x,
//! so equal joint values give mirror-image legs.

use nalgebra::{SMatrix, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::math::{rot_x, rot_y, skew, Mat3, Rotation3, Vec3, ORTHONORMAL_INPUT_TOL};
use crate::state::{FullState, JointAngles, Side, VEL_DIM, V_GAMMA, V_OMEGA, V_PHI_H, V_POS};

pub type PointJacobian = SMatrix<f64, 3, VEL_DIM>;

/// Link offsets, masses and inertias. Values are given for the left leg.
///
/// The shipped defaults describe a plausible 4.2 kg thruster biped; they are
/// implementer choices, not measured hardware data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotMorphology {
    /// Body CoM to pelvis, body frame (m).
    #[serde(rename = "l1_B")]
    pub l1_b: Vec3,
    /// Pelvis to hip CoM, hip frame (m).
    #[serde(rename = "l2_P")]
    pub l2_p: Vec3,
    /// Hip to knee CoM, knee frame (m).
    #[serde(rename = "l3_H")]
    pub l3_h: Vec3,
    pub l4a: f64,
    pub l4b: f64,
    /// Body CoM to thruster, body frame (m).
    #[serde(rename = "lt_B")]
    pub lt_b: Vec3,
    #[serde(rename = "m_B")]
    pub m_b: f64,
    #[serde(rename = "m_H")]
    pub m_h: f64,
    #[serde(rename = "m_K")]
    pub m_k: f64,
    /// Body inertia about its CoM in the body frame (kg·m²).
    #[serde(rename = "I_B")]
    pub inertia_b: Mat3,
    #[serde(rename = "I_H")]
    pub inertia_h: Mat3,
    #[serde(rename = "I_K")]
    pub inertia_k: Mat3,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
}

impl Default for RobotMorphology {
    fn default() -> Self {
        RobotMorphology {
            l1_b: Vec3::new(0.0, 0.08, -0.06),
            l2_p: Vec3::new(0.0, 0.02, -0.04),
            l3_h: Vec3::new(0.04, 0.0, -0.20),
            l4a: 0.04,
            l4b: 0.22,
            lt_b: Vec3::new(0.0, 0.14, 0.06),
            m_b: 3.0,
            m_h: 0.35,
            m_k: 0.25,
            inertia_b: Mat3::from_diagonal(&Vec3::new(0.030, 0.025, 0.020)),
            inertia_h: Mat3::from_diagonal(&Vec3::new(4e-4, 4e-4, 3e-4)),
            inertia_k: Mat3::from_diagonal(&Vec3::new(3e-4, 3e-4, 2e-4)),
            g: 9.81,
        }
    }
}

fn is_spd(m: &Mat3) -> bool {
    (m - m.transpose()).norm() <= 1e-12 * m.norm().max(1.0) && m.cholesky().is_some()
}

impl RobotMorphology {
    pub fn total_mass(&self) -> f64 {
        self.m_b + 2.0 * (self.m_h + self.m_k)
    }

    pub fn weight(&self) -> f64 {
        self.total_mass() * self.g
    }

    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (key, m) in [("morphology.m_B", self.m_b), ("morphology.m_H", self.m_h), ("morphology.m_K", self.m_k)] {
            if !(m > 0.0 && m.is_finite()) {
                out.push(Violation::new(key, format!("mass must be positive, got {m}")));
            }
        }
        for (key, i) in [("morphology.I_B", &self.inertia_b), ("morphology.I_H", &self.inertia_h), ("morphology.I_K", &self.inertia_k)] {
            if !is_spd(i) {
                out.push(Violation::new(key, "inertia must be symmetric positive definite"));
            }
        }
        for (key, l) in [("morphology.l4a", self.l4a), ("morphology.l4b", self.l4b)] {
            if !(l > 0.0 && l.is_finite()) {
                out.push(Violation::new(key, format!("linkage length must be positive, got {l}")));
            }
        }
        if !(self.g > 0.0 && self.g.is_finite()) {
            out.push(Violation::new("morphology.g", "gravity must be positive"));
        }
        out
    }

    /// Offsets and inertias of the given side after mirroring.
    pub fn leg(&self, side: Side) -> LegGeometry {
        let s = side.sign();
        let mirror = |v: &Vec3| Vec3::new(v.x, s * v.y, v.z);
        let reflect = Mat3::from_diagonal(&Vec3::new(1.0, s, 1.0));
        LegGeometry {
            side,
            l1: mirror(&self.l1_b),
            l2: mirror(&self.l2_p),
            l3: mirror(&self.l3_h),
            lt: mirror(&self.lt_b),
            l4a: self.l4a,
            l4b: self.l4b,
            inertia_h: reflect * self.inertia_h * reflect,
            inertia_k: reflect * self.inertia_k * reflect,
        }
    }
}

/// Side-resolved geometry.
#[derive(Clone, Debug)]
pub struct LegGeometry {
    pub side: Side,
    pub l1: Vec3,
    pub l2: Vec3,
    pub l3: Vec3,
    pub lt: Vec3,
    pub l4a: f64,
    pub l4b: f64,
    pub inertia_h: Mat3,
    pub inertia_k: Mat3,
}

impl LegGeometry {
    /// Hip frontal rotation; the right leg turns about −x.
    pub fn hip_rotation(&self, gamma: f64) -> Rotation3 {
        rot_x(self.side.sign() * gamma)
    }

    /// The knee-to-foot vector l4^K of the parallel linkage (before R_y(φ_k)).
    pub fn linkage_vector(&self, phi_k: f64) -> Vec3 {
        let (s, c) = phi_k.sin_cos();
        Vec3::new(-self.l4a * c, 0.0, -(self.l4b + self.l4a * s))
    }

    /// R_y(φ_k)·l4^K, and its first and second derivatives in φ_k.
    ///
    /// The product simplifies to `[−l4a − l4b sin φ, 0, −l4b cos φ]`.
    pub fn foot_offset(&self, phi_k: f64) -> (Vec3, Vec3, Vec3) {
        let (s, c) = phi_k.sin_cos();
        let b = self.l4b;
        (
            Vec3::new(-self.l4a - b * s, 0.0, -b * c),
            Vec3::new(-b * c, 0.0, b * s),
            Vec3::new(b * s, 0.0, b * c),
        )
    }
}

/// Inertial positions along one leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegPositions {
    pub pelvis: Vec3,
    pub hip: Vec3,
    pub knee: Vec3,
    pub foot: Vec3,
    pub thruster: Vec3,
}

pub fn check_rotation(r: &Rotation3) -> Result<()> {
    let error = r.orthonormality_error();
    if error > ORTHONORMAL_INPUT_TOL || (r.determinant() - 1.0).abs() > ORTHONORMAL_INPUT_TOL {
        return Err(Error::NotOrthonormal { error });
    }
    Ok(())
}

/// Positions of pelvis, hip CoM, knee CoM, foot and thruster for one side.
pub fn forward_kinematics(
    morph: &RobotMorphology,
    p_b: &Vec3,
    r_b: &Rotation3,
    joints: &JointAngles,
    side: Side,
) -> Result<LegPositions> {
    check_rotation(r_b)?;
    let leg = morph.leg(side);
    let r = r_b.matrix();
    let r_h = r * leg.hip_rotation(joints.gamma).matrix();
    let r_k = r_h * rot_y(joints.phi_h).matrix();
    let pelvis = p_b + r * leg.l1;
    let hip = pelvis + r_h * leg.l2;
    let knee = hip + r_k * leg.l3;
    let foot = knee + r_k * rot_y(joints.phi_k).matrix() * leg.linkage_vector(joints.phi_k);
    let thruster = p_b + r * leg.lt;
    Ok(LegPositions { pelvis, hip, knee, foot, thruster })
}

/// A point with its Jacobian `ṗ = J v` and bias acceleration `p̈ = J a + bias`.
#[derive(Clone, Debug)]
pub struct PointKinematics {
    pub pos: Vec3,
    pub vel: Vec3,
    pub jac: PointJacobian,
    pub bias: Vec3,
}

/// A rigid frame: world rotation, world angular velocity, angular Jacobian and bias.
#[derive(Clone, Debug)]
pub struct FrameKinematics {
    pub rot: Mat3,
    pub omega: Vec3,
    pub jac: PointJacobian,
    pub bias: Vec3,
}

impl FrameKinematics {
    fn child(&self, axis_local: Vec3, column: usize, angle_rate: f64, local_rot: &Mat3) -> FrameKinematics {
        let axis = self.rot * axis_local;
        let mut jac = self.jac;
        for k in 0..3 {
            jac[(k, column)] += axis[k];
        }
        FrameKinematics {
            rot: self.rot * local_rot,
            omega: self.omega + axis * angle_rate,
            jac,
            bias: self.bias + self.omega.cross(&axis) * angle_rate,
        }
    }

    fn point(&self, origin: &PointKinematics, offset_world: &Vec3) -> PointKinematics {
        let w = offset_world;
        PointKinematics {
            pos: origin.pos + w,
            vel: origin.vel + self.omega.cross(w),
            jac: origin.jac - skew(w) * self.jac,
            bias: origin.bias + self.bias.cross(w) + self.omega.cross(&self.omega.cross(w)),
        }
    }
}

/// Everything about one leg the dynamics needs.
#[derive(Clone, Debug)]
pub struct LegKinematics {
    pub pelvis: PointKinematics,
    pub hip_frame: FrameKinematics,
    pub hip: PointKinematics,
    pub knee_frame: FrameKinematics,
    pub knee: PointKinematics,
    /// Foot point. `jac` covers v only; the knee contribution is `knee_column`.
    pub foot: PointKinematics,
    /// ∂p_F/∂φ_k
    pub knee_column: Vec3,
    pub thruster: PointKinematics,
}

/// Kinematics of the whole robot at one state.
#[derive(Clone, Debug)]
pub struct RobotKinematics {
    pub body_frame: FrameKinematics,
    pub body: PointKinematics,
    pub legs: [LegKinematics; 2],
}

impl RobotKinematics {
    pub fn new(morph: &RobotMorphology, state: &FullState) -> Self {
        let r = *state.rotation.matrix();
        let mut jw = PointJacobian::zeros();
        jw.fixed_view_mut::<3, 3>(0, V_OMEGA).copy_from(&r);
        let body_frame = FrameKinematics { rot: r, omega: r * state.omega, jac: jw, bias: Vec3::zeros() };
        let mut jp = PointJacobian::zeros();
        jp.fixed_view_mut::<3, 3>(0, V_POS).copy_from(&Mat3::identity());
        let body = PointKinematics {
            pos: state.body_position(),
            vel: state.body_velocity(),
            jac: jp,
            bias: Vec3::zeros(),
        };
        let legs = Side::BOTH.map(|side| leg_kinematics(morph, state, side, &body_frame, &body));
        RobotKinematics { body_frame, body, legs }
    }

    pub fn leg(&self, side: Side) -> &LegKinematics {
        &self.legs[side.index()]
    }

    /// Full foot velocity including the knee-rate term.
    pub fn foot_velocity(&self, state: &FullState, side: Side) -> Vec3 {
        let leg = self.leg(side);
        leg.foot.vel + leg.knee_column * state.knee_rate[side.index()]
    }
}

fn leg_kinematics(
    morph: &RobotMorphology,
    state: &FullState,
    side: Side,
    body_frame: &FrameKinematics,
    body: &PointKinematics,
) -> LegKinematics {
    let geo = morph.leg(side);
    let i = side.index();
    let j = state.joints(side);
    let pelvis = body_frame.point(body, &(body_frame.rot * geo.l1));
    let hip_frame = body_frame.child(
        Vec3::x() * side.sign(),
        V_GAMMA[i],
        j.gamma_dot,
        geo.hip_rotation(j.gamma).matrix(),
    );
    let hip = hip_frame.point(&pelvis, &(hip_frame.rot * geo.l2));
    let knee_frame = hip_frame.child(Vec3::y(), V_PHI_H[i], j.phi_h_dot, rot_y(j.phi_h).matrix());
    let knee = knee_frame.point(&hip, &(knee_frame.rot * geo.l3));

    let (f, df, ddf) = geo.foot_offset(j.phi_k);
    let mut foot = knee_frame.point(&knee, &(knee_frame.rot * f));
    let knee_column = knee_frame.rot * df;
    let rate = j.phi_k_dot;
    foot.bias += knee_frame.omega.cross(&knee_column) * (2.0 * rate) + knee_frame.rot * ddf * (rate * rate);

    let thruster = body_frame.point(body, &(body_frame.rot * geo.lt));
    LegKinematics { pelvis, hip_frame, hip, knee_frame, knee, foot, knee_column, thruster }
}

/// Frame velocities of one leg.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameVelocities {
    /// ω_H^B = [γ̇_h, 0, 0]ᵀ + ω_B^B (mirrored axis on the right).
    pub omega_hip_body: Vec3,
    /// ω_K^H = [0, φ̇_h, 0]ᵀ + ω_H^H
    pub omega_knee_hip: Vec3,
    pub pelvis: Vec3,
    pub hip: Vec3,
    pub knee: Vec3,
    pub foot: Vec3,
    pub thruster: Vec3,
}

pub fn frame_velocities(morph: &RobotMorphology, state: &FullState, side: Side) -> Result<FrameVelocities> {
    state.validate()?;
    let kin = RobotKinematics::new(morph, state);
    let leg = kin.leg(side);
    let j = state.joints(side);
    let omega_hip_body = state.omega + Vec3::x() * (side.sign() * j.gamma_dot);
    let r_x = morph.leg(side).hip_rotation(j.gamma);
    let omega_hip_hip = r_x.transpose().apply(&omega_hip_body);
    let omega_knee_hip = Vec3::y() * j.phi_h_dot + omega_hip_hip;
    Ok(FrameVelocities {
        omega_hip_body,
        omega_knee_hip,
        pelvis: leg.pelvis.vel,
        hip: leg.hip.vel,
        knee: leg.knee.vel,
        foot: kin.foot_velocity(state, side),
        thruster: leg.thruster.vel,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Foot,
    Thruster,
}

/// ∂ṗ/∂v for the foot or thruster of one side (3×10).
pub fn position_jacobian(morph: &RobotMorphology, state: &FullState, point: PointKind, side: Side) -> PointJacobian {
    let kin = RobotKinematics::new(morph, state);
    let leg = kin.leg(side);
    match point {
        PointKind::Foot => leg.foot.jac,
        PointKind::Thruster => leg.thruster.jac,
    }
}

/// Whole-robot centre of mass.
pub fn center_of_mass(morph: &RobotMorphology, kin: &RobotKinematics) -> Vec3 {
    let mut c = kin.body.pos * morph.m_b;
    for leg in &kin.legs {
        c += leg.hip.pos * morph.m_h + leg.knee.pos * morph.m_k;
    }
    c / morph.total_mass()
}

/// CoM velocity `Σ m_i ṗ_i / m`.
pub fn center_of_mass_velocity(morph: &RobotMorphology, kin: &RobotKinematics) -> Vec3 {
    let mut c = kin.body.vel * morph.m_b;
    for leg in &kin.legs {
        c += leg.hip.vel * morph.m_h + leg.knee.vel * morph.m_k;
    }
    c / morph.total_mass()
}

/// Jacobian of the CoM velocity with respect to v.
pub fn center_of_mass_jacobian(morph: &RobotMorphology, kin: &RobotKinematics) -> PointJacobian {
    let mut j = kin.body.jac * morph.m_b;
    for leg in &kin.legs {
        j += leg.hip.jac * morph.m_h + leg.knee.jac * morph.m_k;
    }
    j / morph.total_mass()
}

/// CoM bias acceleration: `c̈ = J_c a + bias`.
pub fn center_of_mass_bias(morph: &RobotMorphology, kin: &RobotKinematics) -> Vec3 {
    let mut b = kin.body.bias * morph.m_b;
    for leg in &kin.legs {
        b += leg.hip.bias * morph.m_h + leg.knee.bias * morph.m_k;
    }
    b / morph.total_mass()
}

/// Result of the leg inverse kinematics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkSolution {
    pub gamma: f64,
    pub phi_h: f64,
    pub phi_k: f64,
    /// The target was outside the workspace and was moved to its boundary.
    pub clamped: bool,
}

/// Knee angle limit used when clamping IK solutions.
pub const KNEE_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - 0.02;

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = a % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a <= -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Joint angles placing the foot at `foot_body`, the body-frame vector from
/// the body CoM to the foot.
///
/// Picks the branch with the leg below the hip and the knee flexing from the
/// straight configuration toward positive φ_k.
pub fn leg_inverse_kinematics(morph: &RobotMorphology, side: Side, foot_body: &Vec3) -> IkSolution {
    // Solve the left chain on the mirrored target.
    let geo = morph.leg(Side::Left);
    let target = Vec3::new(foot_body.x, side.sign() * foot_body.y, foot_body.z);
    let d = target - geo.l1;
    let mut clamped = false;

    // Frontal angle: the y component in the hip frame must equal the lateral
    // offset carried by l2 and l3.
    let lateral = geo.l2.y + geo.l3.y;
    let rho = d.y.hypot(d.z);
    let mut ratio = if rho > 0.0 { lateral / rho } else { 1.0 };
    if ratio.abs() > 1.0 {
        ratio = ratio.clamp(-1.0, 1.0);
        clamped = true;
    }
    let gamma = wrap_angle(d.z.atan2(d.y) + ratio.acos());

    // Sagittal chain in the hip frame.
    let e = rot_x(gamma).transpose().apply(&d) - geo.l2;
    let e_xz = Vector2::new(e.x, e.z);
    let a_coef = geo.l3.x - geo.l4a;
    let b_coef = geo.l3.z;
    let b = geo.l4b;
    let r = a_coef.hypot(b_coef);
    let psi = b_coef.atan2(a_coef);
    let k = (a_coef * a_coef + b_coef * b_coef + b * b - e_xz.norm_squared()) / (2.0 * b);
    let mut sin_arg = k / r;
    if sin_arg.abs() > 1.0 {
        sin_arg = sin_arg.clamp(-1.0, 1.0);
        clamped = true;
    }
    let mut phi_k = wrap_angle(sin_arg.asin() - psi);
    if phi_k.abs() > KNEE_LIMIT {
        phi_k = phi_k.clamp(-KNEE_LIMIT, KNEE_LIMIT);
        clamped = true;
    }
    let (f, _, _) = geo.foot_offset(phi_k);
    let u = geo.l3 + f;
    let phi_h = wrap_angle(e_xz.x.atan2(e_xz.y) - u.x.atan2(u.z));
    IkSolution { gamma, phi_h, phi_k, clamped }
}

/// Body-frame foot vector for the given joint angles (forward map of
/// [`leg_inverse_kinematics`]).
pub fn foot_in_body(morph: &RobotMorphology, side: Side, gamma: f64, phi_h: f64, phi_k: f64) -> Vec3 {
    let geo = morph.leg(side);
    let r_h = geo.hip_rotation(gamma);
    let r_k = r_h.compose(&rot_y(phi_h));
    let (f, _, _) = geo.foot_offset(phi_k);
    geo.l1 + r_h.apply(&geo.l2) + r_k.apply(&(geo.l3 + f))
}
