//! Equations of motion `M a + h = B_j u_j + B_t u_t + B_g u_g`.
//!
//! M and h are assembled from the frame Jacobians of the five mass-carrying
//! bodies (torso, both hip links, both knee links):
//!
//! ```text
//! M = Σ m_i J_iᵀ J_i + J_Ω,iᵀ I_i J_Ω,i
//! h = Σ m_i J_iᵀ (β_i − g) + J_Ω,iᵀ (I_i β_Ω,i + Ω_i × I_i Ω_i)
//! ```
//!
//! with world-frame inertias `I_i = R_i Î_i R_iᵀ`. The two knee coordinates are
//! kinematic: their rows of M are identity, h is zero there, and the joint
//! input drives them with an acceleration.

use nalgebra::{SMatrix, SVector, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{FrameKinematics, PointKinematics, RobotKinematics, RobotMorphology};
use crate::math::{dexp_inv, exp_so3, rk4_step, skew, Mat3, Rotation3, Vec3};
use crate::state::{
    Acceleration, FullState, Side, StateVector, Velocity, ACC_DIM, A_KNEE, STATE_DIM, VEL_DIM,
};

pub type MassMatrix = SMatrix<f64, ACC_DIM, ACC_DIM>;
pub type InputMap = SMatrix<f64, ACC_DIM, 6>;

/// Condition-number ceiling for the mass-carrying block of M.
pub const MAX_CONDITION: f64 = 1e12;

/// Joint and thruster commands held over one control period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    /// `[u_PL, u_PR, u_HL, u_HR, ü_kL, ü_kR]`: frontal and sagittal hip
    /// torques (N·m) and knee accelerations (rad/s²).
    pub joint: Vector6<f64>,
    /// Thruster forces `[u_tL; u_tR]` in the inertial frame (N).
    pub thrust: [Vec3; 2],
}

impl ControlInput {
    pub fn thrust_vector(&self) -> Vector6<f64> {
        stack(&self.thrust)
    }

    pub fn is_finite(&self) -> bool {
        self.joint.iter().all(|v| v.is_finite()) && self.thrust.iter().all(|f| f.iter().all(|v| v.is_finite()))
    }
}

/// Ground forces on the left and right foot (N, inertial frame).
pub type GroundForces = [Vec3; 2];

pub fn stack(v: &[Vec3; 2]) -> Vector6<f64> {
    Vector6::new(v[0].x, v[0].y, v[0].z, v[1].x, v[1].y, v[1].z)
}

#[derive(Clone, Debug)]
pub struct InputMaps {
    pub b_j: InputMap,
    pub b_t: InputMap,
    pub b_g: InputMap,
}

#[derive(Clone, Debug)]
pub struct DynamicsMatrices {
    pub m: MassMatrix,
    pub h: SVector<f64, ACC_DIM>,
    pub maps: InputMaps,
}

struct MassBody<'a> {
    mass: f64,
    inertia_local: Mat3,
    point: &'a PointKinematics,
    frame: &'a FrameKinematics,
}

fn mass_bodies<'a>(morph: &RobotMorphology, kin: &'a RobotKinematics) -> Vec<MassBody<'a>> {
    let mut out = vec![MassBody {
        mass: morph.m_b,
        inertia_local: morph.inertia_b,
        point: &kin.body,
        frame: &kin.body_frame,
    }];
    for side in Side::BOTH {
        let geo = morph.leg(side);
        let leg = kin.leg(side);
        out.push(MassBody { mass: morph.m_h, inertia_local: geo.inertia_h, point: &leg.hip, frame: &leg.hip_frame });
        out.push(MassBody { mass: morph.m_k, inertia_local: geo.inertia_k, point: &leg.knee, frame: &leg.knee_frame });
    }
    out
}

fn assemble(morph: &RobotMorphology, kin: &RobotKinematics) -> (MassMatrix, SVector<f64, ACC_DIM>) {
    let gravity = Vec3::new(0.0, 0.0, -morph.g);
    let mut m10 = SMatrix::<f64, VEL_DIM, VEL_DIM>::zeros();
    let mut h10 = SVector::<f64, VEL_DIM>::zeros();
    for b in mass_bodies(morph, kin) {
        let inertia = b.frame.rot * b.inertia_local * b.frame.rot.transpose();
        let jw = &b.frame.jac;
        m10 += b.point.jac.transpose() * b.point.jac * b.mass + jw.transpose() * inertia * jw;
        let w = b.frame.omega;
        h10 += b.point.jac.transpose() * ((b.point.bias - gravity) * b.mass)
            + jw.transpose() * (inertia * b.frame.bias + w.cross(&(inertia * w)));
    }
    let mut m = MassMatrix::zeros();
    m.fixed_view_mut::<VEL_DIM, VEL_DIM>(0, 0).copy_from(&m10);
    for k in A_KNEE {
        m[(k, k)] = 1.0;
    }
    let mut h = SVector::<f64, ACC_DIM>::zeros();
    h.fixed_rows_mut::<VEL_DIM>(0).copy_from(&h10);
    (m, h)
}

fn maps(kin: &RobotKinematics) -> InputMaps {
    let mut b_j = InputMap::zeros();
    b_j.fixed_view_mut::<6, 6>(6, 0).copy_from(&SMatrix::<f64, 6, 6>::identity());
    let mut b_t = InputMap::zeros();
    let mut b_g = InputMap::zeros();
    for side in Side::BOTH {
        let leg = kin.leg(side);
        let col = 3 * side.index();
        b_t.fixed_view_mut::<VEL_DIM, 3>(0, col).copy_from(&leg.thruster.jac.transpose());
        b_g.fixed_view_mut::<VEL_DIM, 3>(0, col).copy_from(&leg.foot.jac.transpose());
    }
    InputMaps { b_j, b_t, b_g }
}

pub fn mass_matrix(morph: &RobotMorphology, state: &FullState) -> Result<MassMatrix> {
    state.validate()?;
    Ok(assemble(morph, &RobotKinematics::new(morph, state)).0)
}

pub fn bias_vector(morph: &RobotMorphology, state: &FullState) -> Result<SVector<f64, ACC_DIM>> {
    state.validate()?;
    Ok(assemble(morph, &RobotKinematics::new(morph, state)).1)
}

pub fn input_maps(morph: &RobotMorphology, state: &FullState) -> Result<InputMaps> {
    state.validate()?;
    Ok(maps(&RobotKinematics::new(morph, state)))
}

impl DynamicsMatrices {
    pub fn new(morph: &RobotMorphology, kin: &RobotKinematics) -> Self {
        let (m, h) = assemble(morph, kin);
        DynamicsMatrices { m, h, maps: maps(kin) }
    }

    /// Generalized input force `B_j u_j + B_t u_t + B_g u_g`.
    pub fn generalized_force(&self, u: &ControlInput, ground: &GroundForces) -> SVector<f64, ACC_DIM> {
        self.maps.b_j * u.joint + self.maps.b_t * u.thrust_vector() + self.maps.b_g * stack(ground)
    }

    /// Solves for a. Fails when the mass-carrying block is not positive
    /// definite or its condition estimate exceeds [`MAX_CONDITION`].
    pub fn accelerations(&self, u: &ControlInput, ground: &GroundForces) -> Result<Acceleration> {
        let rhs = self.generalized_force(u, ground) - self.h;
        let m10 = self.m.fixed_view::<VEL_DIM, VEL_DIM>(0, 0).into_owned();
        let chol = m10.cholesky().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let d = chol.l_dirty().diagonal();
        let condition = (d.max() / d.min()).powi(2);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let mut a = Acceleration::zeros();
        a.fixed_rows_mut::<VEL_DIM>(0).copy_from(&chol.solve(&rhs.fixed_rows::<VEL_DIM>(0).into_owned()));
        for k in A_KNEE {
            a[k] = rhs[k];
        }
        Ok(a)
    }

    /// Mechanical power delivered to the mass-carrying coordinates.
    pub fn input_power(&self, v: &Velocity, u: &ControlInput, ground: &GroundForces) -> f64 {
        v.dot(&self.generalized_force(u, ground).fixed_rows::<VEL_DIM>(0))
    }
}

/// State derivative `ẋ` in the layout of [`FullState::to_vector`].
pub fn forward_dynamics(
    morph: &RobotMorphology,
    state: &FullState,
    u: &ControlInput,
    ground: &GroundForces,
) -> Result<StateVector> {
    state.validate()?;
    let kin = RobotKinematics::new(morph, state);
    let a = DynamicsMatrices::new(morph, &kin).accelerations(u, ground)?;
    let r_dot = state.rotation.matrix() * skew(&state.omega);
    let mut xd = StateVector::zeros();
    for i in 0..3 {
        for j in 0..3 {
            xd[3 * i + j] = r_dot[(i, j)];
        }
    }
    xd.fixed_rows_mut::<7>(9).copy_from(&state.qd);
    xd.fixed_rows_mut::<2>(16).copy_from(&state.knee_rate);
    xd.fixed_rows_mut::<ACC_DIM>(18).copy_from(&a);
    Ok(xd)
}

/// Kinetic energy `½ Σ m|ṗ|² + ½ Ωᵀ I Ω`.
pub fn kinetic_energy(morph: &RobotMorphology, kin: &RobotKinematics) -> f64 {
    mass_bodies(morph, kin)
        .iter()
        .map(|b| {
            let w_local = b.frame.rot.transpose() * b.frame.omega;
            0.5 * b.mass * b.point.vel.norm_squared() + 0.5 * w_local.dot(&(b.inertia_local * w_local))
        })
        .sum()
}

/// Gravitational potential energy with zero at ground level.
pub fn potential_energy(morph: &RobotMorphology, kin: &RobotKinematics) -> f64 {
    mass_bodies(morph, kin).iter().map(|b| b.mass * morph.g * b.point.pos.z).sum()
}

pub fn total_energy(morph: &RobotMorphology, state: &FullState) -> f64 {
    let kin = RobotKinematics::new(morph, state);
    kinetic_energy(morph, &kin) + potential_energy(morph, &kin)
}

/// Angular momentum about the whole-body CoM (inertial frame).
pub fn angular_momentum(morph: &RobotMorphology, state: &FullState) -> Vec3 {
    let kin = RobotKinematics::new(morph, state);
    let bodies = mass_bodies(morph, &kin);
    let mass: f64 = bodies.iter().map(|b| b.mass).sum();
    let c: Vec3 = bodies.iter().map(|b| b.point.pos * b.mass).sum::<Vec3>() / mass;
    let cd: Vec3 = bodies.iter().map(|b| b.point.vel * b.mass).sum::<Vec3>() / mass;
    bodies
        .iter()
        .map(|b| {
            let inertia = b.frame.rot * b.inertia_local * b.frame.rot.transpose();
            (b.point.pos - c).cross(&((b.point.vel - cd) * b.mass)) + inertia * b.frame.omega
        })
        .sum()
}

const AUG_DIM: usize = STATE_DIM - 9 + 3 + 1;

fn unpack(base: &Rotation3, z: &SVector<f64, AUG_DIM>) -> FullState {
    let theta: Vec3 = z.fixed_rows::<3>(0).into();
    FullState {
        rotation: base.compose(&exp_so3(&theta)),
        q: z.fixed_rows::<7>(3).into(),
        knee: z.fixed_rows::<2>(10).into(),
        omega: z.fixed_rows::<3>(12).into(),
        qd: z.fixed_rows::<7>(15).into(),
        knee_rate: z.fixed_rows::<2>(22).into(),
    }
}

/// Result of one integrator step.
#[derive(Clone, Copy, Debug)]
pub struct StepOutcome {
    pub state: FullState,
    /// Work done on the mass-carrying coordinates by all inputs over the step (J).
    pub work: f64,
}

/// Advances the full state by `dt` with inputs held constant and ground
/// forces re-evaluated at every stage.
///
/// The rotation is advanced on SO(3) through exponential coordinates around
/// the start-of-step attitude, so every stage stays orthonormal; all other
/// entries use classical RK4. The result is re-orthonormalised.
pub fn step<G>(morph: &RobotMorphology, state: &FullState, u: &ControlInput, dt: f64, mut ground: G) -> Result<StepOutcome>
where
    G: FnMut(&FullState, &RobotKinematics) -> GroundForces,
{
    let base = state.rotation;
    let mut z = SVector::<f64, AUG_DIM>::zeros();
    z.fixed_rows_mut::<7>(3).copy_from(&state.q);
    z.fixed_rows_mut::<2>(10).copy_from(&state.knee);
    z.fixed_rows_mut::<3>(12).copy_from(&state.omega);
    z.fixed_rows_mut::<7>(15).copy_from(&state.qd);
    z.fixed_rows_mut::<2>(22).copy_from(&state.knee_rate);

    let f = |z: &SVector<f64, AUG_DIM>| -> Result<SVector<f64, AUG_DIM>> {
        let s = unpack(&base, z);
        let kin = RobotKinematics::new(morph, &s);
        let ug = ground(&s, &kin);
        let dm = DynamicsMatrices::new(morph, &kin);
        let a = dm.accelerations(u, &ug)?;
        let mut d = SVector::<f64, AUG_DIM>::zeros();
        d.fixed_rows_mut::<3>(0).copy_from(&dexp_inv(&z.fixed_rows::<3>(0).into(), &s.omega));
        d.fixed_rows_mut::<7>(3).copy_from(&s.qd);
        d.fixed_rows_mut::<2>(10).copy_from(&s.knee_rate);
        d.fixed_rows_mut::<ACC_DIM>(12).copy_from(&a);
        d[AUG_DIM - 1] = dm.input_power(&s.velocity(), u, &ug);
        Ok(d)
    };
    let z1 = rk4_step(f, &z, dt)?;
    let mut next = unpack(&base, &z1);
    next.rotation = next.rotation.renormalized();
    if !next.is_finite() {
        return Err(Error::NonFiniteDerivative { index: 0 });
    }
    Ok(StepOutcome { state: next, work: z1[AUG_DIM - 1] })
}

/// Convenience for unforced, contact-free motion.
pub fn no_ground(_: &FullState, _: &RobotKinematics) -> GroundForces {
    [Vec3::zeros(); 2]
}

/// Knee torques implied by the ground forces when the knees follow their
/// commanded accelerations: `τ_k = −j_kᵀ u_g` per side.
pub fn knee_torques(kin: &RobotKinematics, ground: &GroundForces) -> Vector2<f64> {
    Vector2::new(
        -kin.legs[0].knee_column.dot(&ground[0]),
        -kin.legs[1].knee_column.dot(&ground[1]),
    )
}
