//! Whole-body controller mapping the reduced-order plan onto joint and
//! thruster commands.
//!
//! Each control tick solves one equality-constrained least-squares problem
//! over `y = [a (10), ü_k (2), τ_hip (4), δ (2), f_L (3), f_R (3)]`:
//!
//! * hard: the equations of motion, zero acceleration (plus damping) of every
//!   loaded foot, zero force on unloaded feet;
//! * soft: torso attitude PD, CoM height PD, optional CoM horizontal PD,
//!   Cartesian PD on unloaded feet, small regularisation of everything else.
//!
//! Thrust is split as `f_L = F/2 + E δ`, `f_R = F/2 − E δ` with E spanning
//! the plane normal to the thruster baseline, so the total always equals the
//! commanded F and the differential only adds torque about the CoM.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, ZeroConeT};
use nalgebra::{DMatrix, DVector, Matrix3x2, SMatrix, Vector2, Vector6};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlInput, DynamicsMatrices, GroundForces};
use crate::error::{Error, Result, Violation};
use crate::kinematics::{
    center_of_mass, center_of_mass_bias, center_of_mass_jacobian, center_of_mass_velocity, RobotKinematics,
    RobotMorphology,
};
use crate::math::{log_so3, Rotation3, Vec3};
use crate::sim::swing::SwingReference;
use crate::state::{FullState, Side, VEL_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerParams {
    pub kp_attitude: f64,
    pub kd_attitude: f64,
    pub kp_height: f64,
    pub kd_height: f64,
    /// Horizontal CoM servo used while both feet hold the ground.
    pub kp_com: f64,
    pub kd_com: f64,
    pub kp_foot: f64,
    pub kd_foot: f64,
    /// Damping on loaded feet (1/s).
    pub kd_stance_foot: f64,
    pub w_attitude: f64,
    pub w_height: f64,
    pub w_com: f64,
    pub w_foot: f64,
    pub w_torque: f64,
    pub w_differential: f64,
    pub w_force: f64,
    pub w_regularization: f64,
    /// Weight of the zero-acceleration task on loaded feet.
    pub w_contact: f64,
    /// Friction coefficient assumed by the controller.
    pub friction_coefficient: f64,
    /// Smallest normal force the controller plans on a loaded foot (N).
    pub min_normal_force: f64,
    /// Hip torque limit (N·m).
    pub max_hip_torque: f64,
    /// Knee acceleration limit (rad/s²).
    pub max_knee_accel: f64,
    /// Per-thruster force limit (N).
    pub max_thrust: f64,
    /// Normal force above which a foot counts as loaded (N).
    pub contact_threshold: f64,
    /// Swing targets sit this far below the ground to guarantee touchdown (m).
    pub touchdown_depth: f64,
    /// Double-support time before stepping starts (s).
    pub settle_time: f64,
    /// Both feet stay loaded this long after each touchdown (s).
    pub double_support_time: f64,
    /// Height servo of the reduced-order plant (1/s², 1/s).
    pub vlip_kp_height: f64,
    pub vlip_kd_height: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            kp_attitude: 150.0,
            kd_attitude: 25.0,
            kp_height: 150.0,
            kd_height: 25.0,
            kp_com: 40.0,
            kd_com: 12.0,
            kp_foot: 600.0,
            kd_foot: 50.0,
            kd_stance_foot: 40.0,
            w_attitude: 1.0,
            w_height: 1.0,
            w_com: 1.0,
            w_foot: 1.0,
            w_torque: 1e-4,
            w_differential: 1e-2,
            w_force: 1e-6,
            w_regularization: 1e-6,
            w_contact: 100.0,
            friction_coefficient: 0.6,
            min_normal_force: 0.0,
            max_hip_torque: 25.0,
            max_knee_accel: 2000.0,
            max_thrust: 40.0,
            contact_threshold: 1.0,
            touchdown_depth: 0.003,
            settle_time: 0.15,
            double_support_time: 0.04,
            vlip_kp_height: 100.0,
            vlip_kd_height: 20.0,
        }
    }
}

impl ControllerParams {
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let fields = [
            ("controller.kp_attitude", self.kp_attitude),
            ("controller.kd_attitude", self.kd_attitude),
            ("controller.kp_height", self.kp_height),
            ("controller.kd_height", self.kd_height),
            ("controller.kp_com", self.kp_com),
            ("controller.kd_com", self.kd_com),
            ("controller.kp_foot", self.kp_foot),
            ("controller.kd_foot", self.kd_foot),
            ("controller.kd_stance_foot", self.kd_stance_foot),
            ("controller.touchdown_depth", self.touchdown_depth),
            ("controller.settle_time", self.settle_time),
            ("controller.double_support_time", self.double_support_time),
            ("controller.vlip_kp_height", self.vlip_kp_height),
            ("controller.vlip_kd_height", self.vlip_kd_height),
            ("controller.friction_coefficient", self.friction_coefficient),
            ("controller.min_normal_force", self.min_normal_force),
        ];
        for (key, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(Violation::new(key, format!("must be a finite non-negative number (got {v})")));
            }
        }
        let positive = [
            ("controller.w_attitude", self.w_attitude),
            ("controller.w_height", self.w_height),
            ("controller.w_com", self.w_com),
            ("controller.w_foot", self.w_foot),
            ("controller.w_torque", self.w_torque),
            ("controller.w_differential", self.w_differential),
            ("controller.w_force", self.w_force),
            ("controller.w_regularization", self.w_regularization),
            ("controller.w_contact", self.w_contact),
            ("controller.max_hip_torque", self.max_hip_torque),
            ("controller.max_knee_accel", self.max_knee_accel),
            ("controller.max_thrust", self.max_thrust),
            ("controller.contact_threshold", self.contact_threshold),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::new(key, format!("must be positive (got {v})")));
            }
        }
        out
    }
}

/// What the controller should achieve this tick.
#[derive(Clone, Debug)]
pub struct TrackingCommand {
    /// Feet that hold the ground `[left, right]`.
    pub loaded: [bool; 2],
    /// Cartesian references for the unloaded feet.
    pub foot_refs: [Option<SwingReference>; 2],
    /// Desired CoM height (m).
    pub com_height: f64,
    /// Horizontal CoM position hold, used in double support.
    pub com_hold: Option<Vector2<f64>>,
    /// Total thrust (N, inertial).
    pub thrust: Vec3,
    /// Desired torso attitude.
    pub attitude: Rotation3,
}

#[derive(Clone, Debug)]
pub struct TrackingOutput {
    pub input: ControlInput,
    /// Ground forces the solution expects on loaded feet.
    pub expected_ground: GroundForces,
    /// Torque about the CoM produced by the thruster differential.
    pub attitude_torque: Vec3,
    /// The constrained solve failed and a clipped fallback was used.
    pub saturated: bool,
}

const N: usize = 24;
const Y_KNEE: usize = 10;
const Y_TAU: usize = 12;
const Y_DIFF: usize = 16;
const Y_FORCE: usize = 18;

/// Basis of the plane normal to `baseline`.
pub fn differential_basis(baseline: &Vec3) -> Matrix3x2<f64> {
    let b = baseline.normalize();
    let helper = if b.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
    let e1 = b.cross(&helper).normalize();
    let e2 = b.cross(&e1);
    Matrix3x2::from_columns(&[e1, e2])
}

/// Splits `total` over the two thrusters so that the pair also produces the
/// component of `torque` (about `com`) that is realisable normal to the
/// thruster baseline.
pub fn allocate_thrust(total: &Vec3, torque: &Vec3, com: &Vec3, mounts: &[Vec3; 2]) -> [Vec3; 2] {
    let delta = mounts[0] - mounts[1];
    let mid = (mounts[0] + mounts[1]) * 0.5 - com;
    // torque = mid × F + Δ × d with d ⊥ Δ  ⇒  d = ((τ − mid × F) × Δ) / |Δ|²
    let residual = torque - mid.cross(total);
    let d = residual.cross(&delta) / delta.norm_squared();
    [total * 0.5 + d, total * 0.5 - d]
}

struct Problem {
    soft: Vec<(DVector<f64>, f64, f64)>,
    eq: Vec<(DVector<f64>, f64)>,
    /// `row · y ≤ bound`
    ineq: Vec<(DVector<f64>, f64)>,
}

impl Problem {
    fn soft(&mut self, row: DVector<f64>, target: f64, weight: f64) {
        self.soft.push((row, target, weight));
    }

    fn hard(&mut self, row: DVector<f64>, target: f64) {
        self.eq.push((row, target));
    }

    fn at_most(&mut self, row: DVector<f64>, bound: f64) {
        self.ineq.push((row, bound));
    }

    fn bound(&mut self, i: usize, limit: f64) {
        self.at_most(unit(i), limit);
        self.at_most(-unit(i), limit);
    }

    fn hessian(&self, ridge: f64) -> (DMatrix<f64>, DVector<f64>) {
        let mut h = DMatrix::<f64>::identity(N, N) * ridge;
        let mut g = DVector::<f64>::zeros(N);
        for (row, target, w) in &self.soft {
            h.ger(*w, row, row, 1.0);
            g.axpy(w * target, row, 1.0);
        }
        (h, g)
    }

    /// Quadratic program with all inequalities.
    fn solve_qp(&self, ridge: f64) -> Option<DVector<f64>> {
        let (h, g) = self.hessian(ridge);
        let p_rows: Vec<Vec<f64>> = (0..N).map(|i| (0..N).map(|j| if j >= i { h[(i, j)] } else { 0.0 }).collect()).collect();
        let p = CscMatrix::from(p_rows.iter().map(|r| r.iter()));
        let q: Vec<f64> = g.iter().map(|v| -v).collect();
        let rows: Vec<Vec<f64>> = self.eq.iter().chain(self.ineq.iter()).map(|(r, _)| r.iter().copied().collect()).collect();
        let a = CscMatrix::from(rows.iter().map(|r| r.iter()));
        let b: Vec<f64> = self.eq.iter().chain(self.ineq.iter()).map(|(_, v)| *v).collect();
        let cones = [ZeroConeT(self.eq.len()), NonnegativeConeT(self.ineq.len())];
        let settings = DefaultSettingsBuilder::default().verbose(false).max_iter(100).build().ok()?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).ok()?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Some(DVector::from_vec(solver.solution.x.clone())),
            _ => None,
        }
    }

    /// Equality-constrained least squares ignoring the inequalities.
    fn solve_equality(&self, ridge: f64) -> Option<DVector<f64>> {
        let nc = self.eq.len();
        let (h, g) = self.hessian(ridge);
        let mut kkt = DMatrix::<f64>::zeros(N + nc, N + nc);
        let mut rhs = DVector::<f64>::zeros(N + nc);
        kkt.view_mut((0, 0), (N, N)).copy_from(&h);
        rhs.rows_mut(0, N).copy_from(&g);
        for (k, (row, target)) in self.eq.iter().enumerate() {
            for i in 0..N {
                kkt[(N + k, i)] = row[i];
                kkt[(i, N + k)] = row[i];
            }
            rhs[N + k] = *target;
        }
        let sol = kkt.clone().lu().solve(&rhs).or_else(|| kkt.svd(true, true).solve(&rhs, 1e-12).ok())?;
        Some(sol.rows(0, N).into_owned())
    }
}

fn row_from(jac: &SMatrix<f64, 3, VEL_DIM>, k: usize) -> DVector<f64> {
    let mut r = DVector::zeros(N);
    for c in 0..VEL_DIM {
        r[c] = jac[(k, c)];
    }
    r
}

fn unit(i: usize) -> DVector<f64> {
    let mut r = DVector::zeros(N);
    r[i] = 1.0;
    r
}

/// Joint torques, knee accelerations and thruster forces for one tick.
pub fn whole_body_tracking(
    morph: &RobotMorphology,
    params: &ControllerParams,
    state: &FullState,
    cmd: &TrackingCommand,
) -> Result<TrackingOutput> {
    let kin = RobotKinematics::new(morph, state);
    let dm = DynamicsMatrices::new(morph, &kin);
    let mounts = [kin.legs[0].thruster.pos, kin.legs[1].thruster.pos];
    let basis = differential_basis(&(mounts[0] - mounts[1]));
    let half = cmd.thrust * 0.5;
    let thrust0 = Vector6::new(half.x, half.y, half.z, half.x, half.y, half.z);

    let b_tl = dm.maps.b_t.fixed_view::<VEL_DIM, 3>(0, 0);
    let b_tr = dm.maps.b_t.fixed_view::<VEL_DIM, 3>(0, 3);
    let g_diff = (b_tl - b_tr) * basis;
    let base_force = dm.maps.b_t.fixed_rows::<VEL_DIM>(0) * thrust0;

    let mut p = Problem { soft: Vec::new(), eq: Vec::new(), ineq: Vec::new() };

    // M a − S τ − G δ − B_g f = B_t u_0 − h
    for r in 0..VEL_DIM {
        let mut row = DVector::zeros(N);
        for c in 0..VEL_DIM {
            row[c] = dm.m[(r, c)];
        }
        if r >= 6 {
            row[Y_TAU + r - 6] = -1.0;
        }
        for k in 0..2 {
            row[Y_DIFF + k] = -g_diff[(r, k)];
        }
        for k in 0..6 {
            row[Y_FORCE + k] = -dm.maps.b_g[(r, k)];
        }
        p.hard(row, base_force[r] - dm.h[r]);
    }

    for side in Side::BOTH {
        let i = side.index();
        let leg = kin.leg(side);
        let vel = kin.foot_velocity(state, side);
        if cmd.loaded[i] {
            let acc = -vel * params.kd_stance_foot - leg.foot.bias;
            for k in 0..3 {
                let mut row = row_from(&leg.foot.jac, k);
                row[Y_KNEE + i] = leg.knee_column[k];
                p.soft(row, acc[k], params.w_contact);
            }
            // unilateral contact inside a friction pyramid
            let f = Y_FORCE + 3 * i;
            p.at_most(-unit(f + 2), -params.min_normal_force);
            for k in 0..2 {
                let mut row = unit(f + k);
                row[f + 2] = -params.friction_coefficient;
                p.at_most(row.clone(), 0.0);
                row[f + k] = -1.0;
                p.at_most(row, 0.0);
            }
        } else {
            for k in 0..3 {
                p.hard(unit(Y_FORCE + 3 * i + k), 0.0);
            }
            if let Some(r) = &cmd.foot_refs[i] {
                let acc = r.acc + (r.pos - leg.foot.pos) * params.kp_foot + (r.vel - vel) * params.kd_foot - leg.foot.bias;
                for k in 0..3 {
                    let mut row = row_from(&leg.foot.jac, k);
                    row[Y_KNEE + i] = leg.knee_column[k];
                    p.soft(row, acc[k], params.w_foot);
                }
            }
        }
    }

    // attitude: world angular acceleration of the torso
    let err = log_so3(&state.rotation.compose(&cmd.attitude.transpose()));
    let omega_w = kin.body_frame.omega;
    let alpha = -err * params.kp_attitude - omega_w * params.kd_attitude;
    for k in 0..3 {
        p.soft(row_from(&kin.body_frame.jac, k), alpha[k], params.w_attitude);
    }

    let jc = center_of_mass_jacobian(morph, &kin);
    let bc = center_of_mass_bias(morph, &kin);
    let com = center_of_mass(morph, &kin);
    let com_v = center_of_mass_velocity(morph, &kin);
    let az = -(com.z - cmd.com_height) * params.kp_height - com_v.z * params.kd_height;
    p.soft(row_from(&jc, 2), az - bc.z, params.w_height);
    if let Some(hold) = cmd.com_hold {
        for k in 0..2 {
            let acc = -(com[k] - hold[k]) * params.kp_com - com_v[k] * params.kd_com;
            p.soft(row_from(&jc, k), acc - bc[k], params.w_com);
        }
    }

    for k in 0..4 {
        p.soft(unit(Y_TAU + k), 0.0, params.w_torque);
    }
    for k in 0..2 {
        p.soft(unit(Y_DIFF + k), 0.0, params.w_differential);
    }
    for k in 0..6 {
        p.soft(unit(Y_FORCE + k), 0.0, params.w_force);
    }

    for k in 0..4 {
        p.bound(Y_TAU + k, params.max_hip_torque);
    }
    for k in 0..2 {
        p.bound(Y_KNEE + k, params.max_knee_accel);
    }
    // keeps both |F/2 ± E δ| within the per-thruster limit
    let diff_limit = ((params.max_thrust - half.norm()) / std::f64::consts::SQRT_2).max(0.0);
    for k in 0..2 {
        p.bound(Y_DIFF + k, diff_limit);
    }

    let (y, mut saturated) = match p.solve_qp(params.w_regularization) {
        Some(y) => (y, false),
        None => {
            let y = p.solve_equality(params.w_regularization).ok_or(Error::InvalidInput {
                name: "tracking",
                reason: "least-squares system is singular".into(),
            })?;
            (y, true)
        }
    };

    let mut joint = Vector6::zeros();
    for k in 0..4 {
        joint[k] = y[Y_TAU + k].clamp(-params.max_hip_torque, params.max_hip_torque);
    }
    for k in 0..2 {
        joint[4 + k] = y[Y_KNEE + k].clamp(-params.max_knee_accel, params.max_knee_accel);
    }
    let mut delta = Vector2::new(y[Y_DIFF], y[Y_DIFF + 1]);
    if delta.amax() > diff_limit {
        delta = delta.map(|v| v.clamp(-diff_limit, diff_limit));
        saturated = true;
    }
    let d = basis * delta;
    let thrust = [half + d, half - d];
    let attitude_torque = (mounts[0] - com).cross(&thrust[0]) + (mounts[1] - com).cross(&thrust[1]);
    let f = |k: usize| Vec3::new(y[Y_FORCE + 3 * k], y[Y_FORCE + 3 * k + 1], y[Y_FORCE + 3 * k + 2]);
    Ok(TrackingOutput {
        input: ControlInput { joint, thrust },
        expected_ground: [f(0), f(1)],
        attitude_torque,
        saturated,
    })
}
