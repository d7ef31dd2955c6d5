//! Reduced-order plant: the thrust-assisted pendulum with instantaneous
//! foot placement at the capture-point plan.

use nalgebra::SVector;

use crate::error::Error;
use crate::gait::GaitScheduler;
use crate::math::{rk4_step, Vec3};
use crate::sim::log::{StanceTracker, StepEvent, TrajectoryLog};
use crate::sim::metrics::{Accumulator, End, Outcome};
use crate::sim::{PlantKind, RunOutput, Scenario};
use crate::state::Side;
use crate::vlip::{
    effective_gravity, height_hold_input, natural_frequency, orbital_energy, plan_step, vlip_dynamics, ThrustCommand,
    VlipState,
};

/// Relative slack on the leg-length fall test; a step clamped to full
/// reach lands exactly on the limit.
const REACH_TOLERANCE: f64 = 1e-9;

/// Start on the lateral period-one orbit of in-place stepping: stance foot
/// half a step width to the side, CoM moving towards it.
pub(crate) fn initial_state(s: &Scenario) -> crate::Result<VlipState> {
    let m = s.morphology.total_mass();
    let g_eff = effective_gravity(m, s.thrust_magnitude(), s.morphology.g)?;
    let omega = natural_frequency(s.z0, g_eff);
    let sign = s.gait.initial_stance.sign();
    let half = 0.5 * s.gait.step_width;
    let vy = sign * omega * half * (0.5 * omega * s.gait.step_duration).tanh();
    Ok(VlipState {
        p: Vec3::new(0.0, 0.0, s.z0),
        v: s.initial_velocity() + Vec3::new(0.0, vy, 0.0),
        c: Vec3::new(0.0, sign * half, 0.0),
        z0: s.z0,
        m,
    })
}

fn section(state: &VlipState) -> Vec<f64> {
    let r = state.leg();
    vec![r.x, r.y, r.z, state.v.x, state.v.y, state.v.z]
}

pub(crate) fn run(s: &Scenario) -> RunOutput {
    let period = s.control_period();
    let mut log = TrajectoryLog::new(PlantKind::Vlip, period);
    let mut acc = Accumulator::new();
    let end = simulate(s, &mut log, &mut acc);
    let metrics = acc.finish(s, &log, end);
    RunOutput { log, metrics }
}

fn simulate(s: &Scenario, log: &mut TrajectoryLog, acc: &mut Accumulator) -> End {
    let g = s.morphology.g;
    let thrust = ThrustCommand::vertical(s.thrust_magnitude());
    let (kp, kd) = (s.controller.vlip_kp_height, s.controller.vlip_kd_height);
    let mut state = match initial_state(s) {
        Ok(st) => st,
        Err(e) => return End { outcome: Outcome::BlewUp, time: 0.0, reason: Some(e.to_string()) },
    };
    let g_eff = effective_gravity(state.m, thrust.force.z, g).unwrap_or(g);
    let period = s.control_period();
    let ticks = (s.duration / period).round() as usize;
    let mut scheduler = GaitScheduler::new(&s.gait, 0.0);
    let mut stance = StanceTracker::new(scheduler.stance(), 0.0, state.c);
    let mut pushes: Vec<_> = s.pushes.clone();
    pushes.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_push = 0;

    for k in 0..=ticks {
        let t = k as f64 * period;
        while next_push < pushes.len() && pushes[next_push].time <= t + 1e-12 {
            state.v += pushes[next_push].impulse / state.m;
            next_push += 1;
        }

        let r = state.leg();
        let e_x = orbital_energy(r.x, state.v.x, s.z0, g_eff);
        let early = s.gait.energy_threshold.is_some_and(|th| e_x.e > th);
        let status = scheduler.update(t, [true, true], early);
        if status.step_event {
            let plan = match plan_step(&state, &thrust, g, &s.gait, status.stance) {
                Ok(p) => p,
                Err(e) => return End { outcome: Outcome::BlewUp, time: t, reason: Some(e.to_string()) },
            };
            if let Some(rec) = stance.finish(t) {
                log.stances.push(rec);
            }
            state.c = plan.target;
            stance = StanceTracker::new(status.stance, t, state.c);
            log.steps.push(StepEvent {
                time: t,
                stance: status.stance,
                foothold: state.c,
                target: plan.target,
                com: state.p,
                com_velocity: state.v,
                capture_offset: plan.capture_offset,
                clamped: plan.clamped,
                section: section(&state),
            });
        }

        let upcoming = plan_step(&state, &thrust, g, &s.gait, status.swing).ok();
        let u_r = height_hold_input(&state, &thrust, g, kp, kd);
        let dyn_out = u_r.and_then(|u| vlip_dynamics(&state, u, &thrust, g).map(|a| (u, a)));
        let (u_r, a) = match dyn_out {
            Ok(v) => v,
            Err(Error::ConstraintPulling { lambda }) => {
                return End { outcome: Outcome::Fell, time: t, reason: Some(format!("leg unloaded (λ = {lambda:.4})")) };
            }
            Err(e) => return End { outcome: Outcome::BlewUp, time: t, reason: Some(e.to_string()) },
        };
        let r = state.leg();
        let e_y = orbital_energy(r.y, state.v.y, s.z0, g_eff);
        let target = upcoming.map(|p| p.target).unwrap_or(state.c);
        let stance_code = match status.stance {
            Side::Left => 0.0,
            Side::Right => 1.0,
        };
        log.push_row(vec![
            t,
            state.p.x,
            state.p.y,
            state.p.z,
            state.v.x,
            state.v.y,
            state.v.z,
            u_r,
            thrust.force.x,
            thrust.force.y,
            thrust.force.z,
            a.lambda,
            a.leg_force,
            state.c.x,
            state.c.y,
            state.c.z,
            e_x.e,
            e_y.e,
            stance_code,
            status.phase,
            target.x,
            target.y,
        ]);
        stance.sample(&state.p);
        acc.height(state.p.z - s.z0);
        acc.normal(a.leg_force * (r.z / r.norm()));
        acc.impulse += thrust.magnitude() * period;

        if r.norm() > s.gait.max_leg_length * (1.0 + REACH_TOLERANCE) {
            return End { outcome: Outcome::Fell, time: t, reason: Some("CoM left the reach of the stance foot".into()) };
        }
        if state.p.z < 0.5 * s.z0 {
            return End { outcome: Outcome::Fell, time: t, reason: Some("CoM below half the nominal height".into()) };
        }
        if k == ticks {
            break;
        }

        for _ in 0..s.substeps() {
            let c = state.c;
            let mut x = SVector::<f64, 6>::zeros();
            x.fixed_rows_mut::<3>(0).copy_from(&state.p);
            x.fixed_rows_mut::<3>(3).copy_from(&state.v);
            let f = |x: &SVector<f64, 6>| -> crate::Result<SVector<f64, 6>> {
                let st = VlipState { p: x.fixed_rows::<3>(0).into(), v: x.fixed_rows::<3>(3).into(), c, ..state };
                let u = height_hold_input(&st, &thrust, g, kp, kd)?;
                let a = vlip_dynamics(&st, u, &thrust, g)?;
                let mut d = SVector::<f64, 6>::zeros();
                d.fixed_rows_mut::<3>(0).copy_from(&st.v);
                d.fixed_rows_mut::<3>(3).copy_from(&a.acc);
                Ok(d)
            };
            match rk4_step(f, &x, s.dt) {
                Ok(x1) => {
                    state.p = x1.fixed_rows::<3>(0).into();
                    state.v = x1.fixed_rows::<3>(3).into();
                }
                Err(Error::ConstraintPulling { lambda }) => {
                    return End {
                        outcome: Outcome::Fell,
                        time: t,
                        reason: Some(format!("leg unloaded (λ = {lambda:.4})")),
                    };
                }
                Err(e) => return End { outcome: Outcome::BlewUp, time: t, reason: Some(e.to_string()) },
            }
        }
    }
    if let Some(rec) = stance.finish(s.duration) {
        log.stances.push(rec);
    }
    End { outcome: Outcome::Completed, time: s.duration, reason: None }
}
