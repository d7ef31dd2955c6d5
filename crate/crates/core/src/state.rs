//! Full-order state vector and index conventions.
//!
//! Layout follows the robot's generalized coordinates:
//! `x = [r_B (9, row-major), q (7), φ_kL, φ_kR, ω_B (3, body frame), q̇ (7), φ̇_kL, φ̇_kR]`
//! with `q = [p_B (3), γ_hL, γ_hR, φ_hL, φ_hR]`.
//!
//! The mass-carrying generalized velocity is `v = [ω_B; q̇]` (10 entries) and
//! the acceleration vector of the equations of motion is
//! `a = [ω̇_B; q̈; φ̈_kL; φ̈_kR]` (12 entries).

use nalgebra::{SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Rotation3, Vec3};

pub const STATE_DIM: usize = 30;
pub const Q_DIM: usize = 7;
/// Dimension of `v = [ω_B; q̇]`.
pub const VEL_DIM: usize = 10;
/// Dimension of `a`, including the two knee rows.
pub const ACC_DIM: usize = 12;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type QVector = SVector<f64, Q_DIM>;
pub type Velocity = SVector<f64, VEL_DIM>;
pub type Acceleration = SVector<f64, ACC_DIM>;

// Column indices into v (and the first ten entries of a).
pub const V_OMEGA: usize = 0;
pub const V_POS: usize = 3;
pub const V_GAMMA: [usize; 2] = [6, 7];
pub const V_PHI_H: [usize; 2] = [8, 9];
/// Knee entries of a.
pub const A_KNEE: [usize; 2] = [10, 11];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    /// +1 for left, −1 for right (the y mirror factor).
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Joint angles and rates of one leg.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointAngles {
    /// Hip frontal angle γ_h (rad).
    pub gamma: f64,
    /// Hip sagittal angle φ_h (rad).
    pub phi_h: f64,
    /// Knee sagittal angle φ_k (rad), |φ_k| < π/2.
    pub phi_k: f64,
    pub gamma_dot: f64,
    pub phi_h_dot: f64,
    pub phi_k_dot: f64,
}

impl JointAngles {
    pub fn new(gamma: f64, phi_h: f64, phi_k: f64) -> Self {
        JointAngles { gamma, phi_h, phi_k, ..Default::default() }
    }

    pub fn with_rates(mut self, gamma_dot: f64, phi_h_dot: f64, phi_k_dot: f64) -> Self {
        self.gamma_dot = gamma_dot;
        self.phi_h_dot = phi_h_dot;
        self.phi_k_dot = phi_k_dot;
        self
    }

    pub fn angles(&self) -> [f64; 3] {
        [self.gamma, self.phi_h, self.phi_k]
    }

    pub fn rates(&self) -> [f64; 3] {
        [self.gamma_dot, self.phi_h_dot, self.phi_k_dot]
    }
}

/// The full-order robot state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    /// Body-to-inertial rotation R_B.
    pub rotation: Rotation3,
    /// q = [p_B, γ_hL, γ_hR, φ_hL, φ_hR]
    pub q: QVector,
    /// [φ_kL, φ_kR]
    pub knee: Vector2<f64>,
    /// Body angular velocity in the body frame.
    pub omega: Vec3,
    pub qd: QVector,
    pub knee_rate: Vector2<f64>,
}

impl Default for FullState {
    fn default() -> Self {
        FullState {
            rotation: Rotation3::identity(),
            q: QVector::zeros(),
            knee: Vector2::zeros(),
            omega: Vec3::zeros(),
            qd: QVector::zeros(),
            knee_rate: Vector2::zeros(),
        }
    }
}

impl FullState {
    pub fn body_position(&self) -> Vec3 {
        self.q.fixed_rows::<3>(0).into()
    }

    pub fn set_body_position(&mut self, p: Vec3) {
        self.q.fixed_rows_mut::<3>(0).copy_from(&p);
    }

    pub fn body_velocity(&self) -> Vec3 {
        self.qd.fixed_rows::<3>(0).into()
    }

    pub fn set_body_velocity(&mut self, v: Vec3) {
        self.qd.fixed_rows_mut::<3>(0).copy_from(&v);
    }

    pub fn joints(&self, side: Side) -> JointAngles {
        let i = side.index();
        JointAngles {
            gamma: self.q[3 + i],
            phi_h: self.q[5 + i],
            phi_k: self.knee[i],
            gamma_dot: self.qd[3 + i],
            phi_h_dot: self.qd[5 + i],
            phi_k_dot: self.knee_rate[i],
        }
    }

    pub fn set_joints(&mut self, side: Side, j: &JointAngles) {
        let i = side.index();
        self.q[3 + i] = j.gamma;
        self.q[5 + i] = j.phi_h;
        self.knee[i] = j.phi_k;
        self.qd[3 + i] = j.gamma_dot;
        self.qd[5 + i] = j.phi_h_dot;
        self.knee_rate[i] = j.phi_k_dot;
    }

    /// v = [ω_B; q̇]
    pub fn velocity(&self) -> Velocity {
        let mut v = Velocity::zeros();
        v.fixed_rows_mut::<3>(V_OMEGA).copy_from(&self.omega);
        v.fixed_rows_mut::<Q_DIM>(V_POS).copy_from(&self.qd);
        v
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<9>(0).copy_from_slice(&self.rotation.row_major());
        x.fixed_rows_mut::<7>(9).copy_from(&self.q);
        x.fixed_rows_mut::<2>(16).copy_from(&self.knee);
        x.fixed_rows_mut::<3>(18).copy_from(&self.omega);
        x.fixed_rows_mut::<7>(21).copy_from(&self.qd);
        x.fixed_rows_mut::<2>(28).copy_from(&self.knee_rate);
        x
    }

    pub fn from_vector(x: &StateVector) -> Result<Self> {
        let state = FullState {
            rotation: Rotation3::from_row_major(x.fixed_rows::<9>(0).as_slice())?,
            q: x.fixed_rows::<7>(9).into(),
            knee: x.fixed_rows::<2>(16).into(),
            omega: x.fixed_rows::<3>(18).into(),
            qd: x.fixed_rows::<7>(21).into(),
            knee_rate: x.fixed_rows::<2>(28).into(),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.row_major().iter().all(|v| v.is_finite())
            && self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
            && self.knee.iter().chain(self.knee_rate.iter()).all(|v| v.is_finite())
            && self.omega.iter().all(|v| v.is_finite())
    }

    pub fn validate(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::InvalidInput { name: "state", reason: "non-finite entry".into() });
        }
        let err = self.rotation.orthonormality_error();
        if err > crate::math::ORTHONORMAL_INPUT_TOL {
            return Err(Error::NotOrthonormal { error: err });
        }
        Ok(())
    }

    pub const COLUMN_NAMES: [&'static str; STATE_DIM] = [
        "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33",
        "p_x", "p_y", "p_z", "gamma_l", "gamma_r", "phi_h_l", "phi_h_r",
        "phi_k_l", "phi_k_r",
        "omega_x", "omega_y", "omega_z",
        "v_x", "v_y", "v_z", "gamma_dot_l", "gamma_dot_r", "phi_h_dot_l", "phi_h_dot_r",
        "phi_k_dot_l", "phi_k_dot_r",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rot_y;

    #[test]
    fn vector_layout_round_trip() {
        let mut s = FullState { rotation: rot_y(0.2), ..Default::default() };
        s.set_body_position(Vec3::new(0.1, 0.2, 0.5));
        s.set_joints(Side::Right, &JointAngles::new(0.1, -0.3, 0.7).with_rates(1.0, 2.0, 3.0));
        s.omega = Vec3::new(0.4, 0.5, 0.6);
        let x = s.to_vector();
        assert_eq!(x[11], 0.5);
        assert_eq!(x[13], 0.1); // γ_hR
        assert_eq!(x[17], 0.7); // φ_kR
        assert_eq!(x[29], 3.0);
        let back = FullState::from_vector(&x).unwrap();
        assert_eq!(back.joints(Side::Right), s.joints(Side::Right));
        assert!((back.rotation.matrix() - s.rotation.matrix()).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_rotation_block() {
        let mut x = FullState::default().to_vector();
        x[0] = 2.0;
        assert!(FullState::from_vector(&x).is_err());
    }
}
