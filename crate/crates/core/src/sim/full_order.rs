//! Full-order plant: rigid-body dynamics on compliant ground, closed through
//! the gait scheduler, the capture-point planner and the whole-body
//! controller.

use nalgebra::Vector2;

use crate::contact::{foot_contact, robot_ground_forces};
use crate::dynamics::{knee_torques, step, total_energy, ControlInput, DynamicsMatrices};
use crate::gait::GaitScheduler;
use crate::kinematics::{
    center_of_mass, center_of_mass_jacobian, center_of_mass_velocity, leg_inverse_kinematics, RobotKinematics,
};
use crate::math::{Rotation3, Vec3};
use crate::sim::log::{StanceTracker, StepEvent, TrajectoryLog};
use crate::sim::metrics::{Accumulator, End, Outcome};
use crate::sim::swing::{swing_trajectory, SwingReference};
use crate::sim::tracking::{whole_body_tracking, TrackingCommand};
use crate::sim::{PlantKind, RunOutput, Scenario};
use crate::state::{FullState, JointAngles, Side, VEL_DIM};
use crate::vlip::{center_of_pressure, effective_gravity, lip_flow, natural_frequency, plan_step, CapturePlan, ThrustCommand, VlipState};

/// Torso tilt beyond which the robot counts as fallen (rad).
pub const FALL_TILT: f64 = std::f64::consts::FRAC_PI_3;

/// Initial foothold lateral positions relative to the CoM: the first stance
/// foot sits where the in-place gait expects it after a step, the other a
/// step width away.
pub(crate) fn initial_footholds(s: &Scenario) -> [Vec3; 2] {
    let m = s.morphology.total_mass();
    let g_eff = effective_gravity(m, s.thrust_magnitude(), s.morphology.g).unwrap_or(s.morphology.g);
    let growth = (natural_frequency(s.z0, g_eff) * s.gait.step_duration).exp();
    let stance = s.gait.initial_stance;
    let near = stance.sign() * s.gait.step_width / (1.0 + growth);
    let far = near - stance.sign() * s.gait.step_width;
    let mut feet = [Vec3::zeros(); 2];
    feet[stance.index()] = Vec3::new(0.0, near, s.initial.drop_height);
    feet[stance.other().index()] = Vec3::new(0.0, far, s.initial.drop_height);
    feet
}

/// Upright robot at rest with the feet at `feet` and the CoM above the
/// origin at `z0` plus the drop height.
pub fn initial_state(s: &Scenario) -> FullState {
    let feet = initial_footholds(s);
    let target = Vec3::new(0.0, 0.0, s.z0 + s.initial.drop_height);
    let mut state = FullState::default();
    state.set_body_position(target);
    for _ in 0..50 {
        let p = state.body_position();
        for side in Side::BOTH {
            let sol = leg_inverse_kinematics(&s.morphology, side, &(feet[side.index()] - p));
            state.set_joints(side, &JointAngles::new(sol.gamma, sol.phi_h, sol.phi_k));
        }
        let kin = RobotKinematics::new(&s.morphology, &state);
        let err = target - center_of_mass(&s.morphology, &kin);
        state.set_body_position(p + err);
        if err.norm() < 1e-13 {
            break;
        }
    }
    state.set_body_velocity(s.initial_velocity());
    state
}

/// Applies a CoM impulse as the generalized velocity jump `M⁻¹ J_cᵀ ι`.
fn apply_impulse(s: &Scenario, state: &mut FullState, impulse: &Vec3) -> crate::Result<()> {
    let kin = RobotKinematics::new(&s.morphology, state);
    let dm = DynamicsMatrices::new(&s.morphology, &kin);
    let jc = center_of_mass_jacobian(&s.morphology, &kin);
    let m10 = dm.m.fixed_view::<VEL_DIM, VEL_DIM>(0, 0).into_owned();
    let chol = m10.cholesky().ok_or(crate::Error::IllConditioned { condition: f64::INFINITY })?;
    let dv = chol.solve(&(jc.transpose() * impulse));
    state.omega += dv.fixed_rows::<3>(0);
    state.qd += dv.fixed_rows::<7>(3);
    Ok(())
}

fn roll_pitch(r: &Rotation3) -> (f64, f64) {
    let m = r.matrix();
    (m[(2, 1)].atan2(m[(2, 2)]), (-m[(2, 0)]).clamp(-1.0, 1.0).asin())
}

/// Pendulum state expected after `remaining` seconds on the current stance
/// foot, so the swing foot aims at where the capture point will be at
/// touchdown rather than where it is now.
fn forecast_touchdown(state: &VlipState, omega: f64, remaining: f64) -> VlipState {
    let r = state.leg();
    let (x, vx) = lip_flow(r.x, state.v.x, omega, remaining);
    let (y, vy) = lip_flow(r.y, state.v.y, omega, remaining);
    VlipState {
        p: Vec3::new(state.c.x + x, state.c.y + y, state.p.z),
        v: Vec3::new(vx, vy, state.v.z),
        ..*state
    }
}

pub(crate) fn run(s: &Scenario) -> RunOutput {
    let mut log = TrajectoryLog::new(PlantKind::FullOrder, s.control_period());
    let mut acc = Accumulator::new();
    let end = simulate(s, &mut log, &mut acc);
    let metrics = acc.finish(s, &log, end);
    RunOutput { log, metrics }
}

struct Walk {
    scheduler: GaitScheduler,
    liftoff: Vec3,
    stance: StanceTracker,
    /// Latest plan for the swing foot.
    plan: Option<CapturePlan>,
    stance_foothold: Vec3,
}

fn simulate(s: &Scenario, log: &mut TrajectoryLog, acc: &mut Accumulator) -> End {
    let morph = &s.morphology;
    let ctrl = &s.controller;
    let period = s.control_period();
    let ticks = (s.duration / period).round() as usize;
    let thrust = ThrustCommand::vertical(s.thrust_magnitude());
    let g_eff = effective_gravity(morph.total_mass(), thrust.force.z, morph.g).unwrap_or(morph.g);
    let omega = natural_frequency(s.z0, g_eff);
    let blew_up = |t: f64, e: crate::Error| End { outcome: Outcome::BlewUp, time: t, reason: Some(e.to_string()) };

    let mut state = initial_state(s);
    let com_hold = Vector2::new(0.0, 0.0);
    let mut walk: Option<Walk> = None;
    let mut pushes = s.pushes.clone();
    pushes.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_push = 0;
    let mut work = 0.0;

    for k in 0..=ticks {
        let t = k as f64 * period;
        while next_push < pushes.len() && pushes[next_push].time <= t + 1e-12 {
            let before = total_energy(morph, &state);
            if let Err(e) = apply_impulse(s, &mut state, &pushes[next_push].impulse) {
                return blew_up(t, e);
            }
            work += total_energy(morph, &state) - before;
            next_push += 1;
        }

        let kin = RobotKinematics::new(morph, &state);
        let feet = Side::BOTH.map(|side| kin.leg(side).foot.pos);
        let contacts = Side::BOTH.map(|side| {
            foot_contact(&s.ground, &feet[side.index()], &kin.foot_velocity(&state, side))
        });
        let grf = [contacts[0].force, contacts[1].force];
        let loaded_phys = [0, 1].map(|i| contacts[i].force.z > ctrl.contact_threshold);
        let com = center_of_mass(morph, &kin);
        let com_v = center_of_mass_velocity(morph, &kin);

        let mut loaded = loaded_phys;
        let mut refs: [Option<SwingReference>; 2] = [None, None];
        let mut hold = None;
        let mut stance_code = -1.0;
        let mut phase = 0.0;
        let mut target_xy = [f64::NAN; 2];

        if t + 1e-12 < ctrl.settle_time {
            // double support from release: the legs hold their shape through
            // the drop and absorb the landing
            hold = Some(com_hold);
            loaded = [true, true];
        } else {
            let w = walk.get_or_insert_with(|| {
                let mut scheduler = GaitScheduler::new(&s.gait, t);
                scheduler.restart(t);
                let st = scheduler.stance();
                Walk { liftoff: feet[st.other().index()], stance: StanceTracker::new(st, t, feet[st.index()]), scheduler, plan: None, stance_foothold: feet[st.index()] }
            });
            let status = w.scheduler.update(t, loaded_phys, false);
            let stance_pos = feet[status.stance.index()];
            let vstate = VlipState { p: com, v: com_v, c: stance_pos, z0: s.z0, m: morph.total_mass() };
            if status.step_event {
                w.liftoff = feet[status.swing.index()];
                if let Some(rec) = w.stance.finish(t) {
                    log.stances.push(rec);
                }
                w.stance = StanceTracker::new(status.stance, t, stance_pos);
                w.stance_foothold = stance_pos;
                let (roll, pitch) = roll_pitch(&state.rotation);
                let r = com - stance_pos;
                let plan = w.plan.take();
                log.steps.push(StepEvent {
                    time: t,
                    stance: status.stance,
                    foothold: stance_pos,
                    target: plan.map(|p| p.target).unwrap_or(stance_pos),
                    com,
                    com_velocity: com_v,
                    capture_offset: plan.map(|p| p.capture_offset).unwrap_or([0.0; 2]),
                    clamped: plan.is_some_and(|p| p.clamped),
                    section: vec![r.x, r.y, r.z, com_v.x, com_v.y, com_v.z, roll, pitch],
                });
            }
            w.stance.sample(&com);
            let forecast = forecast_touchdown(&vstate, omega, (s.gait.step_duration - status.elapsed).max(0.0));
            let plan = match plan_step(&forecast, &thrust, morph.g, &s.gait, status.swing) {
                Ok(p) => p,
                Err(e) => return blew_up(t, e),
            };
            let mut target = plan.target;
            target.z = -ctrl.touchdown_depth;
            let ds = ctrl.double_support_time.min(0.5 * s.gait.step_duration);
            let st = status.stance.index();
            let sw = status.swing.index();
            if status.elapsed < ds {
                // weight transfer: the old stance foot stays planted until
                // the new one carries load
                loaded[sw] = true;
                loaded[st] = loaded_phys[st];
                w.liftoff = feet[sw];
            } else {
                let swing_time = s.gait.step_duration - ds;
                let swing_phase = ((status.elapsed - ds) / swing_time).clamp(0.0, 1.0);
                refs[sw] = Some(swing_trajectory(swing_phase, &w.liftoff, &target, s.gait.swing_apex, swing_time));
                loaded[sw] = false;
                loaded[st] = true;
            }
            if !loaded[st] {
                let mut down = w.stance_foothold;
                down.z = -ctrl.touchdown_depth;
                refs[st] = Some(SwingReference { pos: down, vel: Vec3::zeros(), acc: Vec3::zeros() });
            }
            stance_code = status.stance.index() as f64;
            phase = status.phase;
            target_xy = [plan.target.x, plan.target.y];
            w.plan = Some(plan);
        }

        let cmd = TrackingCommand {
            loaded,
            foot_refs: refs,
            com_height: s.z0,
            com_hold: hold,
            thrust: thrust.force,
            attitude: Rotation3::identity(),
        };
        let out = match whole_body_tracking(morph, ctrl, &state, &cmd) {
            Ok(o) => o,
            Err(e) => return blew_up(t, e),
        };
        let u: ControlInput = out.input;

        let tau_knee = knee_torques(&kin, &grf);
        let energy = total_energy(morph, &state);
        let cop = center_of_pressure(&feet, &[grf[0].z, grf[1].z])
            .unwrap_or(Vec3::new(f64::NAN, f64::NAN, f64::NAN));
        let mut row = Vec::with_capacity(log.columns.len());
        row.push(t);
        row.extend(state.to_vector().iter());
        row.extend(u.joint.iter());
        row.extend(u.thrust_vector().iter());
        row.extend(grf.iter().flat_map(|f| f.iter().copied()));
        row.extend(cop.iter());
        row.extend(com.iter());
        row.extend(com_v.iter());
        row.extend([tau_knee[0], tau_knee[1], stance_code, phase, target_xy[0], target_xy[1], energy, work]);
        log.push_row(row);

        acc.height(com.z - s.z0);
        acc.peak_joint = acc.peak_joint.max(u.joint.fixed_rows::<4>(0).amax());
        acc.peak_knee = acc.peak_knee.max(tau_knee.amax());
        acc.impulse += (u.thrust[0].norm() + u.thrust[1].norm()) * period;
        for c in &contacts {
            if c.in_contact {
                acc.normal(c.force.z);
            }
        }
        acc.energy(energy, work);

        if com.z < 0.5 * s.z0 {
            return End { outcome: Outcome::Fell, time: t, reason: Some("CoM below half the nominal height".into()) };
        }
        if state.rotation.tilt() > FALL_TILT {
            return End { outcome: Outcome::Fell, time: t, reason: Some("torso tilt beyond 60 degrees".into()) };
        }
        if k == ticks {
            break;
        }

        for _ in 0..s.substeps() {
            match step(morph, &state, &u, s.dt, |st, kn| robot_ground_forces(&s.ground, st, kn)) {
                Ok(o) => {
                    state = o.state;
                    work += o.work;
                }
                Err(e) => return blew_up(t, e),
            }
        }
    }
    if let Some(w) = &walk {
        if let Some(rec) = w.stance.finish(s.duration) {
            log.stances.push(rec);
        }
    }
    End { outcome: Outcome::Completed, time: s.duration, reason: None }
}
