//! Swing-foot reference between liftoff and touchdown.

use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwingReference {
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Vec3,
}

/// Foot reference at `phase` ∈ [0, 1] of a swing lasting `duration` seconds.
///
/// Horizontal motion follows a cubic smoothstep; height adds a quartic bump
/// that peaks `apex` above the higher endpoint at mid-swing. Velocity is zero
/// at both ends. Phases outside [0, 1] are clamped.
pub fn swing_trajectory(phase: f64, liftoff: &Vec3, target: &Vec3, apex: f64, duration: f64) -> SwingReference {
    let s = phase.clamp(0.0, 1.0);
    let moving = (0.0..1.0).contains(&phase) as u8 as f64;
    let rate = moving / duration;

    let blend = s * s * (3.0 - 2.0 * s);
    let d_blend = 6.0 * s * (1.0 - s);
    let dd_blend = 6.0 - 12.0 * s;

    let bump = 16.0 * s * s * (1.0 - s) * (1.0 - s);
    let d_bump = 32.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    let dd_bump = 32.0 * (1.0 - 6.0 * s + 6.0 * s * s);

    let delta = target - liftoff;
    let lift = apex + 0.5 * delta.z.abs();
    let up = Vec3::z() * lift;

    SwingReference {
        pos: liftoff + delta * blend + up * bump,
        vel: (delta * d_blend + up * d_bump) * rate,
        acc: (delta * dd_blend + up * dd_bump) * (rate * rate),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn endpoints_are_at_rest() {
        let a = Vec3::new(0.0, 0.1, 0.0);
        let b = Vec3::new(0.2, 0.1, 0.03);
        let r0 = swing_trajectory(0.0, &a, &b, 0.05, 0.4);
        assert_eq!(r0.pos, a);
        assert_eq!(r0.vel, Vec3::zeros());
        let r1 = swing_trajectory(1.0, &a, &b, 0.05, 0.4);
        assert_relative_eq!(r1.pos, b, epsilon = 1e-15);
        assert_eq!(r1.vel, Vec3::zeros());
    }

    #[test]
    fn velocity_is_derivative_of_position() {
        let a = Vec3::new(0.0, 0.1, 0.0);
        let b = Vec3::new(0.2, -0.1, -0.01);
        let (t, h, dur) = (0.3, 1e-6, 0.4);
        let p = |tt: f64| swing_trajectory(tt / dur, &a, &b, 0.05, dur).pos;
        let fd = (p(t + h) - p(t - h)) / (2.0 * h);
        assert_relative_eq!(fd, swing_trajectory(t / dur, &a, &b, 0.05, dur).vel, epsilon = 1e-7);
        let v = |tt: f64| swing_trajectory(tt / dur, &a, &b, 0.05, dur).vel;
        let fd = (v(t + h) - v(t - h)) / (2.0 * h);
        assert_relative_eq!(fd, swing_trajectory(t / dur, &a, &b, 0.05, dur).acc, epsilon = 1e-5);
    }

    proptest! {
        #[test]
        fn apex_clears_both_endpoints(
            a in proptest::array::uniform3(-0.3..0.3f64),
            b in proptest::array::uniform3(-0.3..0.3f64),
            apex in 0.0..0.1f64,
        ) {
            let (a, b) = (Vec3::from(a), Vec3::from(b));
            let mid = swing_trajectory(0.5, &a, &b, apex, 0.4);
            prop_assert!(mid.pos.z >= a.z.max(b.z) + apex - 1e-12);
        }
    }
}
