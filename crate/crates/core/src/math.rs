//! Rotation and integration primitives shared by the dynamics code.
//!
//! Rotations are stored as plain 3×3 matrices (body-to-inertial, `x = R x_body`)
//! and advanced with the exponential map so long runs stay on SO(3).

use nalgebra::{Matrix3, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when accepting an externally supplied rotation matrix.
pub const ORTHONORMAL_INPUT_TOL: f64 = 1e-6;

/// A proper rotation matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 9]", try_from = "[f64; 9]")]
pub struct Rotation3(Mat3);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(Mat3::identity())
    }

    /// Accepts `m` if it is orthonormal with unit determinant to within
    /// [`ORTHONORMAL_INPUT_TOL`], then snaps it back onto SO(3).
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let error = orthonormality_error(&m);
        if !error.is_finite() || error > ORTHONORMAL_INPUT_TOL {
            return Err(Error::NotOrthonormal { error });
        }
        if (m.determinant() - 1.0).abs() > ORTHONORMAL_INPUT_TOL {
            return Err(Error::NotOrthonormal { error: (m.determinant() - 1.0).abs() });
        }
        Ok(Rotation3(m).renormalized())
    }

    /// Wraps `m` without any check, for building invalid rotations in tests.
    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation3(m)
    }

    /// Row-major entries, the `r_B` block of the full state.
    pub fn from_row_major(entries: &[f64]) -> Result<Self> {
        assert_eq!(entries.len(), 9, "rotation needs nine entries");
        Self::from_matrix(Mat3::from_row_slice(entries))
    }

    pub fn row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)], m[(0, 1)], m[(0, 2)],
            m[(1, 0)], m[(1, 1)], m[(1, 2)],
            m[(2, 0)], m[(2, 1)], m[(2, 2)],
        ]
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation3(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation3) -> Self {
        Rotation3(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// ‖RᵀR − I‖_F
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Gram-Schmidt on the columns, keeping the first column direction.
    pub fn renormalized(&self) -> Self {
        let c0 = self.0.column(0).normalize();
        let c1 = self.0.column(1) - c0 * c0.dot(&self.0.column(1));
        let c1 = c1.normalize();
        let c2 = c0.cross(&c1);
        Rotation3(Mat3::from_columns(&[c0, c1, c2]))
    }

    /// Angle between the body z axis and the inertial z axis.
    pub fn tilt(&self) -> f64 {
        self.0[(2, 2)].clamp(-1.0, 1.0).acos()
    }

    /// Heading of the body x axis projected onto the ground plane.
    pub fn yaw(&self) -> f64 {
        self.0[(1, 0)].atan2(self.0[(0, 0)])
    }
}

impl From<Rotation3> for [f64; 9] {
    fn from(r: Rotation3) -> Self {
        r.row_major()
    }
}

impl TryFrom<[f64; 9]> for Rotation3 {
    type Error = Error;

    fn try_from(entries: [f64; 9]) -> Result<Self> {
        Rotation3::from_row_major(&entries)
    }
}

fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

pub fn rot_x(angle: f64) -> Rotation3 {
    let (s, c) = angle.sin_cos();
    Rotation3(Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
}

pub fn rot_y(angle: f64) -> Rotation3 {
    let (s, c) = angle.sin_cos();
    Rotation3(Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
}

pub fn rot_z(angle: f64) -> Rotation3 {
    let (s, c) = angle.sin_cos();
    Rotation3(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
}

/// `skew(w) * v == w × v`
pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Rodrigues formula for exp([phi]×).
pub fn exp_so3(phi: &Vec3) -> Rotation3 {
    let theta2 = phi.norm_squared();
    let k = skew(phi);
    let (a, b) = if theta2 < 1e-12 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rotation3(Mat3::identity() + k * a + k * k * b)
}

/// Rotation vector of `r`, inverse of [`exp_so3`] for angles below π.
pub fn log_so3(r: &Rotation3) -> Vec3 {
    let m = r.matrix();
    let cos_theta = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let vee = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    if theta < 1e-6 {
        return vee * 0.5;
    }
    if std::f64::consts::PI - theta < 1e-6 {
        // axis from the symmetric part: R ≈ 2 n nᵀ − I
        let b = (m + Mat3::identity()) * 0.5;
        let (i, _) = b.diagonal().argmax();
        let mut axis: Vec3 = b.column(i).into();
        axis /= b[(i, i)].max(1e-300).sqrt();
        return axis.normalize() * theta;
    }
    vee * (theta / (2.0 * theta.sin()))
}

/// Inverse right Jacobian of SO(3): maps a body angular velocity to the rate
/// of the exponential coordinates `theta` in `R = R0 exp([theta]×)`.
pub fn dexp_inv(theta: &Vec3, w: &Vec3) -> Vec3 {
    let t2 = theta.norm_squared();
    let coeff = if t2 < 1e-8 {
        1.0 / 12.0 + t2 / 720.0
    } else {
        let t = t2.sqrt();
        1.0 / t2 - (1.0 + t.cos()) / (2.0 * t * t.sin())
    };
    let tw = theta.cross(w);
    w + tw * 0.5 + theta.cross(&tw) * coeff
}

/// Advances `R` under constant body rate `w` for `dt` seconds:
/// `R exp([w dt]×)`, re-orthonormalised.
pub fn integrate_rotation(r: &Rotation3, w_body: &Vec3, dt: f64) -> Rotation3 {
    debug_assert!(dt > 0.0);
    r.compose(&exp_so3(&(w_body * dt))).renormalized()
}

/// One classical fourth-order Runge-Kutta step of `ẋ = f(x)`.
///
/// Returns [`Error::NonFiniteDerivative`] if any stage evaluation produces a
/// NaN or infinity.
pub fn rk4_step<const N: usize, F>(mut f: F, x: &SVector<f64, N>, dt: f64) -> Result<SVector<f64, N>>
where
    F: FnMut(&SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let mut eval = |y: &SVector<f64, N>| -> Result<SVector<f64, N>> {
        let d = f(y)?;
        match d.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFiniteDerivative { index }),
            None => Ok(d),
        }
    };
    let k1 = eval(x)?;
    let k2 = eval(&(x + k1 * (0.5 * dt)))?;
    let k3 = eval(&(x + k2 * (0.5 * dt)))?;
    let k4 = eval(&(x + k3 * dt))?;
    Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0))
}
