//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use harpy::config::{resolved, Config, DEFAULT_CONFIG};
use harpy::contact::{foot_contact, friction_axis, GroundModelParams};
use harpy::dynamics::{kinetic_energy, mass_matrix, no_ground, step, total_energy, ControlInput};
use harpy::export::{write_bundle, METRICS_FILE, RESOLVED_FILE, STEPS_FILE, TRAJECTORY_FILE};
use harpy::kinematics::{RobotKinematics, RobotMorphology};
use harpy::math::{rk4_step, Mat3, Rotation3, Vec3};
use harpy::sim::{run_scenario, Outcome, RunOutput, Scenario, POINCARE_THRESHOLD};
use harpy::state::{FullState, JointAngles, Side, VEL_DIM};
use harpy::sweep::sweep;
use harpy::vlip::{capture_point, height_hold_input, vlip_dynamics, ThrustCommand, VlipState};
use nalgebra::{SVector, UnitQuaternion, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    ok: bool,
    detail: String,
}

impl Check {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Check { ok, detail: detail.into() }
    }

    fn all(checks: Vec<Check>) -> Check {
        let ok = checks.iter().all(|c| c.ok);
        let detail = checks
            .into_iter()
            .map(|c| format!("{}{}", if c.ok { "" } else { "[x] " }, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Check { ok, detail }
    }
}

fn defaults() -> Config {
    Config::parse(DEFAULT_CONFIG, "<built-in defaults>").expect("shipped config parses")
}

fn column(out: &RunOutput, name: &str) -> usize {
    out.log.columns.iter().position(|c| *c == name).unwrap_or_else(|| panic!("no column {name}"))
}

// ---------------------------------------------------------------------------
// Kinetic-energy oracle: each link pose as a (value, time derivative) pair
// propagated through the transform chain, built from scratch here.

#[derive(Clone, Copy)]
struct DualMat(Mat3, Mat3);

#[derive(Clone, Copy)]
struct DualVec(Vec3, Vec3);

impl DualMat {
    fn mul(&self, o: &DualMat) -> DualMat {
        DualMat(self.0 * o.0, self.1 * o.0 + self.0 * o.1)
    }

    fn apply(&self, v: &Vec3) -> DualVec {
        DualVec(self.0 * v, self.1 * v)
    }

    /// World angular velocity, vee(Ṙ Rᵀ).
    fn omega(&self) -> Vec3 {
        let w = self.1 * self.0.transpose();
        Vec3::new(w[(2, 1)], w[(0, 2)], w[(1, 0)])
    }
}

impl DualVec {
    fn add(&self, o: &DualVec) -> DualVec {
        DualVec(self.0 + o.0, self.1 + o.1)
    }
}

fn about_x(a: f64, rate: f64) -> DualMat {
    let (s, c) = a.sin_cos();
    DualMat(
        Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        Mat3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s) * rate,
    )
}

fn about_y(a: f64, rate: f64) -> DualMat {
    let (s, c) = a.sin_cos();
    DualMat(
        Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        Mat3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s) * rate,
    )
}

fn hat(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

fn oracle_kinetic_energy(m: &RobotMorphology, s: &FullState) -> f64 {
    let r = *s.rotation.matrix();
    let body = DualMat(r, r * hat(&s.omega));
    let p = DualVec(s.body_position(), s.body_velocity());
    let link = |mass: f64, frame: &DualMat, pos: &DualVec, inertia: &Mat3| {
        let w = frame.omega();
        let i_world = frame.0 * inertia * frame.0.transpose();
        0.5 * mass * pos.1.norm_squared() + 0.5 * w.dot(&(i_world * w))
    };
    let mut ke = link(m.m_b, &body, &p, &m.inertia_b);
    for side in [Side::Left, Side::Right] {
        let sign = if side == Side::Left { 1.0 } else { -1.0 };
        let flip = |v: &Vec3| Vec3::new(v.x, sign * v.y, v.z);
        let reflect = Mat3::from_diagonal(&Vec3::new(1.0, sign, 1.0));
        let j = s.joints(side);
        let hip_frame = body.mul(&about_x(sign * j.gamma, sign * j.gamma_dot));
        let knee_frame = hip_frame.mul(&about_y(j.phi_h, j.phi_h_dot));
        let pelvis = p.add(&body.apply(&flip(&m.l1_b)));
        let hip = pelvis.add(&hip_frame.apply(&flip(&m.l2_p)));
        let knee = hip.add(&knee_frame.apply(&flip(&m.l3_h)));
        ke += link(m.m_h, &hip_frame, &hip, &(reflect * m.inertia_h * reflect));
        ke += link(m.m_k, &knee_frame, &knee, &(reflect * m.inertia_k * reflect));
    }
    ke
}

fn random_state(rng: &mut ChaCha8Rng) -> FullState {
    let mut u = || rng.random_range(-1.0..1.0);
    let quat = Vector4::new(u(), u(), u(), u());
    let rot = UnitQuaternion::from_quaternion(nalgebra::Quaternion::from_vector(quat)).to_rotation_matrix();
    let mut s = FullState { rotation: Rotation3::from_matrix(*rot.matrix()).unwrap(), ..Default::default() };
    s.set_body_position(Vec3::new(u(), u(), 0.5 + u()));
    s.set_body_velocity(Vec3::new(2.0 * u(), 2.0 * u(), 2.0 * u()));
    s.omega = Vec3::new(3.0 * u(), 3.0 * u(), 3.0 * u());
    for side in [Side::Left, Side::Right] {
        let j = JointAngles::new(0.6 * u(), 1.2 * u(), 0.8 * u()).with_rates(4.0 * u(), 4.0 * u(), 4.0 * u());
        s.set_joints(side, &j);
    }
    s
}

fn criterion_1() -> Check {
    let m = RobotMorphology::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_018);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let s = random_state(&mut rng);
        let v = s.velocity();
        let mm = mass_matrix(&m, &s).unwrap();
        let quad = (v.transpose() * mm.fixed_view::<VEL_DIM, VEL_DIM>(0, 0) * v)[(0, 0)];
        let ke = oracle_kinetic_energy(&m, &s);
        worst = worst.max((quad - 2.0 * ke).abs() / (2.0 * ke));
    }
    let mass = Check::new(worst <= 1e-10, format!("max |vᵀMv − 2T|/2T = {worst:.2e} over 100 states (≤ 1e-10)"));

    let mut s = FullState { rotation: Rotation3::identity(), ..Default::default() };
    s.set_body_position(Vec3::new(0.0, 0.0, 1.0));
    s.set_joints(Side::Left, &JointAngles::new(0.1, -0.5, 0.6).with_rates(1.5, -2.0, 0.0));
    s.set_joints(Side::Right, &JointAngles::new(-0.2, 0.4, 0.3).with_rates(-1.0, 2.5, 0.0));
    s.omega = Vec3::new(1.0, -2.0, 1.5);
    s.set_body_velocity(Vec3::new(0.5, -0.3, 2.0));
    let e0 = total_energy(&m, &s);
    let k0 = kinetic_energy(&m, &RobotKinematics::new(&m, &s));
    let u = ControlInput::default();
    for _ in 0..10_000 {
        s = step(&m, &s, &u, 1e-4, no_ground).unwrap().state;
    }
    let drift = (total_energy(&m, &s) - e0).abs() / k0;
    let flight = Check::new(drift <= 1e-5, format!("flight energy drift {drift:.2e} of K0 over 1 s (≤ 1e-5)"));
    Check::all(vec![mass, flight])
}

fn criterion_2() -> Check {
    let g = GroundModelParams::default();
    let normal = 40.0;
    let mut worst = 0.0_f64;
    for i in 0..=4000 {
        let v = -0.2 + 1e-4 * i as f64;
        let sign = if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
        let mu = g.mu_c + (g.mu_s - g.mu_c) * (-(v / g.v_s).powi(2)).exp();
        let expected = -mu * normal * sign - g.mu_v * v;
        worst = worst.max((friction_axis(&g, v, normal) - expected).abs());
        // the same law through the full contact model
        let depth = normal / g.k_gp;
        let f = foot_contact(&g, &Vec3::new(0.0, 0.0, -depth), &Vec3::new(v, 0.0, 0.0)).force;
        worst = worst.max((f.x - expected).abs());
    }
    let curve = Check::new(worst <= 1e-12, format!("friction curve max error {worst:.1e} N (≤ 1e-12)"));

    let ground = GroundModelParams { k_gd: 0.0, ..Default::default() };
    let (mass, gravity, h0) = (1.0, 9.81, 0.05);
    let f = |x: &SVector<f64, 2>| {
        let n = foot_contact(&ground, &Vec3::new(0.0, 0.0, x[0]), &Vec3::new(0.0, 0.0, x[1])).force.z;
        Ok(SVector::<f64, 2>::new(x[1], n / mass - gravity))
    };
    let mut x = SVector::<f64, 2>::new(h0, 0.0);
    let mut touched = false;
    let mut apex = None;
    for _ in 0..20_000 {
        let next = rk4_step(f, &x, 1e-4).unwrap();
        touched |= next[0] < 0.0;
        if touched && x[1] > 0.0 && next[1] <= 0.0 {
            apex = Some(x[0].max(next[0]));
            break;
        }
        x = next;
    }
    let rebound = match apex {
        Some(a) => {
            let err = (a - h0).abs() / h0;
            Check::new(err <= 1e-3, format!("undamped rebound apex {a:.6} m from {h0} m, error {:.3}% (≤ 0.1%)", 100.0 * err))
        }
        None => Check::new(false, "no rebound apex found"),
    };
    Check::all(vec![curve, rebound])
}

fn criterion_3() -> Check {
    let (xd, z0, g) = (0.5, 0.5, 9.81);
    let m = RobotMorphology::default().total_mass();
    let mut checks = Vec::new();
    for (fraction, published) in [(0.0, 0.11288), (0.5, 0.15964)] {
        let thrust = fraction * m * g;
        let oracle = xd * (z0 / (g - thrust / m)).sqrt();
        let got = capture_point(xd, z0, m, thrust, g).unwrap();
        let ok = (got - oracle).abs() <= 1e-12 && (got - published).abs() <= 5e-6;
        checks.push(Check::new(ok, format!("offset {got:.5} m at thrust {fraction}·mg (expected {published})")));

        // step placed at the offset: CoM starts `got` behind the new foot
        let tau = (z0 / (g - thrust / m)).sqrt();
        let t_cmd = ThrustCommand::vertical(thrust);
        let deriv = |x: &SVector<f64, 6>| {
            let st = VlipState { p: x.fixed_rows::<3>(0).into(), v: x.fixed_rows::<3>(3).into(), c: Vec3::zeros(), z0, m };
            let u_r = height_hold_input(&st, &t_cmd, g, 100.0, 20.0)?;
            let a = vlip_dynamics(&st, u_r, &t_cmd, g)?;
            let mut d = SVector::<f64, 6>::zeros();
            d.fixed_rows_mut::<3>(0).copy_from(&st.v);
            d.fixed_rows_mut::<3>(3).copy_from(&a.acc);
            Ok(d)
        };
        let mut x = SVector::<f64, 6>::from_column_slice(&[-got, 0.0, z0, xd, 0.0, 0.0]);
        let dt = 1e-4;
        let mut t = 0.0;
        let mut settled_at = None;
        let mut at_limit = f64::NAN;
        while t < 8.0 * tau {
            x = rk4_step(deriv, &x, dt).unwrap();
            t += dt;
            let norm = x[0].hypot(x[3]);
            if at_limit.is_nan() && t >= 5.0 * tau {
                at_limit = norm;
            }
            if settled_at.is_none() && norm <= 1e-3 {
                settled_at = Some(t / tau);
            }
        }
        let within = settled_at.is_some_and(|k| k <= 5.0);
        let reached = settled_at.map_or("never".to_string(), |k| format!("{k:.2}τ"));
        checks.push(Check::new(within, format!("‖(x,ẋ)‖ = {at_limit:.2e} at 5τ, ≤ 1e-3 reached at {reached}")));
    }
    Check::all(checks)
}

fn fixed_stance(x0: SVector<f64, 6>, fraction: f64, z0: f64, duration: f64) -> Vec<SVector<f64, 6>> {
    let g = 9.81;
    let m = RobotMorphology::default().total_mass();
    let thrust = ThrustCommand::vertical(fraction * m * g);
    let deriv = |x: &SVector<f64, 6>| {
        let st = VlipState { p: x.fixed_rows::<3>(0).into(), v: x.fixed_rows::<3>(3).into(), c: Vec3::zeros(), z0, m };
        let u_r = height_hold_input(&st, &thrust, g, 100.0, 20.0)?;
        let a = vlip_dynamics(&st, u_r, &thrust, g)?;
        let mut d = SVector::<f64, 6>::zeros();
        d.fixed_rows_mut::<3>(0).copy_from(&st.v);
        d.fixed_rows_mut::<3>(3).copy_from(&a.acc);
        Ok(d)
    };
    let mut x = x0;
    let mut out = vec![x];
    for _ in 0..(duration / 1e-4).round() as usize {
        x = rk4_step(deriv, &x, 1e-4).unwrap();
        out.push(x);
    }
    out
}

fn criterion_4() -> Check {
    let z0 = 0.41;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0_f64;
    for fraction in [0.0, 0.25, 0.5] {
        let g_eff = 9.81 * (1.0 - fraction);
        let energy = |x: f64, xd: f64| 0.5 * xd * xd - 0.5 * g_eff * x * x / z0;
        for _ in 0..10 {
            let mut u = || rng.random_range(-1.0..1.0);
            let x0 = SVector::<f64, 6>::from_column_slice(&[0.1 * u(), 0.1 * u(), z0, 0.5 * u(), 0.5 * u(), 0.0]);
            let path = fixed_stance(x0, fraction, z0, 0.4);
            let (ex0, ey0) = (energy(x0[0], x0[3]), energy(x0[1], x0[4]));
            for x in &path {
                worst = worst.max((energy(x[0], x[3]) - ex0).abs()).max((energy(x[1], x[4]) - ey0).abs());
            }
        }
    }
    Check::new(worst <= 1e-8, format!("max |E(t) − E(0)| = {worst:.2e} J/kg over 30 trajectories of 0.4 s (≤ 1e-8)"))
}

fn criterion_5() -> Check {
    let z0 = 0.41;
    let mut checks = Vec::new();
    for fraction in [0.0, 0.25, 0.5] {
        let expected = (z0 / (9.81_f64 * (1.0 - fraction))).sqrt();
        let dt = 1e-4;
        let duration = 7.0 * expected;
        let path = fixed_stance(SVector::<f64, 6>::from_column_slice(&[1e-3, 0.0, z0, 0.0, 0.0, 0.0]), fraction, z0, duration);
        // least-squares slope of ln x over the last two time constants
        let (mut n, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, x) in path.iter().enumerate() {
            let t = i as f64 * dt;
            if t < duration - 2.0 * expected {
                continue;
            }
            let y = x[0].ln();
            n += 1.0;
            st += t;
            sy += y;
            stt += t * t;
            sty += t * y;
        }
        let slope = (n * sty - st * sy) / (n * stt - st * st);
        let measured = 1.0 / slope;
        let err = (measured - expected).abs() / expected;
        checks.push(Check::new(
            err <= 0.01,
            format!("thrust {fraction}·mg: τ {measured:.5} s vs √(z0/g_eff) {expected:.5} s ({:.3}%)", 100.0 * err),
        ));
    }
    Check::all(checks)
}

fn criterion_6(config: &Config) -> Check {
    let vlip = run_scenario(config.scenario("walk-vlip").unwrap());
    let m = &vlip.metrics;
    let cycles = m.converged_cycle.map(|c| c as f64 / 2.0);
    let vlip_ok = !m.fell && m.outcome == Outcome::Completed && cycles.is_some_and(|c| c <= 5.0);
    let vlip_check = Check::new(
        vlip_ok,
        format!(
            "VLIP: {:?}, {} steps, residual below {POINCARE_THRESHOLD:e} from step {:?} ({:?} cycles), final {:.1e}",
            m.outcome,
            m.steps,
            m.converged_cycle,
            cycles,
            m.limit_cycle_residual.unwrap_or(f64::NAN)
        ),
    );

    let s = config.scenario("walk-full").unwrap();
    let full = run_scenario(s);
    let m = &full.metrics;
    let band = 0.15 * s.z0;
    let full_ok = !m.fell && m.outcome == Outcome::Completed && m.simulated_time >= s.duration - 1e-9 && m.max_com_height_deviation <= band;
    let full_check = Check::new(
        full_ok,
        format!(
            "full-order: {:?} over {:.2} s, max CoM height deviation {:.4} m (≤ {band:.4})",
            m.outcome, m.simulated_time, m.max_com_height_deviation
        ),
    );
    Check::all(vec![vlip_check, full_check])
}

fn criterion_7(config: &Config) -> Check {
    let cell = 0.1;
    let values: Vec<f64> = (0..=60).map(|i| i as f64 * cell).collect();
    let path = "pushes.0.impulse.0";
    let with = sweep(config.scenario("push-thrust").unwrap(), path, &values, 8, None).unwrap();
    let without = sweep(config.scenario("push-no-thrust").unwrap(), path, &values, 8, None).unwrap();
    let fell = |rows: &[harpy::sweep::SweepRow]| rows.iter().map(|r| r.fell.unwrap_or(true)).collect::<Vec<_>>();
    let (fw, fo) = (fell(&with), fell(&without));

    let witness = values.iter().zip(fw.iter().zip(&fo)).find(|(_, (w, o))| !**w && **o).map(|(v, _)| *v);
    let exists = Check::new(
        witness.is_some(),
        format!("push recovered with thrust but falling without: {}", witness.map_or("none".into(), |v| format!("{v:.1} N·s"))),
    );

    let mut checks = vec![exists];
    for (label, rows, falls) in [("0.5·mg", &with, &fw), ("0", &without, &fo)] {
        let first_fall = falls.iter().position(|f| *f);
        let limit = rows[0].analytic_push_limit.unwrap();
        let ok = match first_fall {
            Some(i) if i > 0 && falls[i..].iter().all(|f| *f) => {
                // the simulated boundary lies in (values[i-1], values[i]]
                limit > values[i - 1] - cell && limit <= values[i] + cell
            }
            _ => false,
        };
        let boundary = first_fall.map_or("none".into(), |i| format!("{:.1}", values[i]));
        checks.push(Check::new(ok, format!("thrust {label}: first fall at {boundary} N·s, analytic limit {limit:.3} N·s")));
    }
    Check::all(checks)
}

/// Mean lateral CoP offset from the CoM per stance segment.
fn cop_sides(out: &RunOutput, skip_until: f64) -> Vec<f64> {
    let (t, stance, cop, com) = (column(out, "t"), column(out, "stance"), column(out, "cop_y"), column(out, "com_y"));
    let mut segments: Vec<(f64, f64, usize)> = Vec::new();
    for row in out.log.rows.iter().filter(|r| r[t] >= skip_until && r[cop].is_finite()) {
        match segments.last_mut() {
            Some(seg) if seg.0 == row[stance] => {
                seg.1 += row[cop] - row[com];
                seg.2 += 1;
            }
            _ => segments.push((row[stance], row[cop] - row[com], 1)),
        }
    }
    segments.into_iter().map(|(_, sum, n)| sum / n as f64).collect()
}

fn criterion_8(config: &Config) -> Check {
    let s = config.scenario("drop-stand").unwrap();
    let out = run_scenario(s);
    let (t, kl, kr) = (column(&out, "t"), column(&out, "tau_knee_l"), column(&out, "tau_knee_r"));
    let torque = |r: &Vec<f64>| r[kl].abs().max(r[kr].abs());
    let early = out.log.rows.iter().filter(|r| r[t] <= 0.15).map(torque).fold(0.0, f64::max);
    let late = out.log.rows.iter().filter(|r| r[t] >= s.duration - 0.25).map(torque).fold(0.0, f64::max);
    let spike = Check::new(
        !out.metrics.fell && early >= 2.0 * late && late > 0.0,
        format!("drop: peak knee torque {early:.2} N·m in first 0.15 s, ≤ {late:.2} N·m in last 0.25 s"),
    );

    let mut checks = vec![spike];
    for name in ["walk-vlip", "walk-full"] {
        let s = config.scenario(name).unwrap();
        let out = run_scenario(s);
        let sides = cop_sides(&out, s.controller.settle_time + 0.5);
        let alternates = sides.len() >= 4 && sides.windows(2).all(|w| w[0] * w[1] < 0.0);
        checks.push(Check::new(
            alternates && out.metrics.cop_alternates,
            format!("{name}: CoP alternates across {} stance segments", sides.len()),
        ));
    }
    Check::all(checks)
}

fn criterion_9(config: &Config) -> Check {
    let mut checks = Vec::new();
    let dir = tempfile::tempdir().unwrap();
    for name in ["walk-vlip", "walk-full"] {
        let s = Scenario { duration: 1.0, ..config.scenario(name).unwrap().clone() };
        let a = run_scenario(&s);
        let b = run_scenario(&s);
        let bits = |o: &RunOutput| o.log.rows.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
        let same_rows = bits(&a) == bits(&b) && a.metrics == b.metrics;

        // rerun from the resolved echo and compare bundles byte for byte
        let first = write_bundle(&dir.path().join(format!("{name}-a")), &s, &a).unwrap();
        let text = std::fs::read_to_string(first.join(RESOLVED_FILE)).unwrap();
        let reparsed = Config::parse(&text, "resolved").unwrap();
        let echo = reparsed.scenario(&s.name).unwrap().clone();
        let second = write_bundle(&dir.path().join(format!("{name}-b")), &echo, &run_scenario(&echo)).unwrap();
        let identical = [TRAJECTORY_FILE, STEPS_FILE, METRICS_FILE, RESOLVED_FILE]
            .iter()
            .all(|f| std::fs::read(first.join(f)).unwrap() == std::fs::read(second.join(f)).unwrap());
        checks.push(Check::new(
            same_rows && echo == s && identical,
            format!("{name}: repeat runs bit-identical, resolved echo round-trips and reproduces the bundle"),
        ));
    }

    let all_round_trip = config
        .scenarios
        .iter()
        .all(|s| Config::parse(&resolved(s), "resolved").map(|c| c.scenarios == vec![s.clone()]).unwrap_or(false));
    checks.push(Check::new(all_round_trip, "every shipped scenario round-trips through its resolved form"));

    let vlip = config.scenario("walk-vlip").unwrap();
    let header = |s: &Scenario| run_scenario(&Scenario { duration: 0.01, ..s.clone() }).log.columns.join(",");
    let full = config.scenario("walk-full").unwrap();
    let schema = header(vlip) == VLIP_HEADER && header(full) == FULL_HEADER;
    checks.push(Check::new(schema, "trajectory CSV headers match the pinned schema"));
    Check::all(checks)
}

const VLIP_HEADER: &str = "t,com_x,com_y,com_z,com_vx,com_vy,com_vz,u_r,thrust_x,thrust_y,thrust_z,lambda,leg_force,\
cop_x,cop_y,cop_z,orbital_energy_x,orbital_energy_y,stance,phase,target_x,target_y";

const FULL_HEADER: &str = "t,r11,r12,r13,r21,r22,r23,r31,r32,r33,p_x,p_y,p_z,gamma_l,gamma_r,phi_h_l,phi_h_r,\
phi_k_l,phi_k_r,omega_x,omega_y,omega_z,v_x,v_y,v_z,gamma_dot_l,gamma_dot_r,phi_h_dot_l,phi_h_dot_r,\
phi_k_dot_l,phi_k_dot_r,tau_gamma_l,tau_gamma_r,tau_phi_h_l,tau_phi_h_r,acc_phi_k_l,acc_phi_k_r,\
thrust_l_x,thrust_l_y,thrust_l_z,thrust_r_x,thrust_r_y,thrust_r_z,grf_l_x,grf_l_y,grf_l_z,grf_r_x,grf_r_y,grf_r_z,\
cop_x,cop_y,cop_z,com_x,com_y,com_z,com_vx,com_vy,com_vz,tau_knee_l,tau_knee_r,stance,phase,target_x,target_y,energy,work";

fn main() -> ExitCode {
    let config = defaults();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("dynamics correctness", Box::new(criterion_1)),
        ("contact model", Box::new(criterion_2)),
        ("capture-point formula", Box::new(criterion_3)),
        ("orbital-energy conservation", Box::new(criterion_4)),
        ("virtual buoyancy scaling", Box::new(criterion_5)),
        ("stable limit cycle", Box::new(|| criterion_6(&config))),
        ("thrust reduces recovery effort", Box::new(|| criterion_7(&config))),
        ("qualitative anchors", Box::new(|| criterion_8(&config))),
        ("determinism and formats", Box::new(|| criterion_9(&config))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let c = run();
        let status = if c.ok { "PASS" } else { "FAIL" };
        println!("criterion {} {status} {name} ({:.1} s): {}", i + 1, start.elapsed().as_secs_f64(), c.detail);
        failed += usize::from(!c.ok);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
