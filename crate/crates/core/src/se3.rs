//! Rigid-motion primitives: unit vectors, rotations, rigid transforms and the
//! SO(3) exponential / logarithm maps.
//!
//! Rotations are stored as 3x3 matrices. Every turning angle in the pipeline
//! is obtained as a projection of `so3_log` of a relative rotation, so the
//! logarithm refuses to answer near pi instead of silently picking a branch.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Vectors shorter than this (meters) cannot be normalized.
pub const EPS_LEN: f64 = 1e-9;
/// Logarithms are rejected for angles at or beyond `pi - EPS_LOG`.
pub const EPS_LOG: f64 = 1e-6;

/// Tolerance used when validating orthonormality and determinant.
const ROTATION_TOL: f64 = 1e-8;

/// A direction with unit norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    pub const X: UnitVec3 = UnitVec3(Vec3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVec3 = UnitVec3(Vec3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVec3 = UnitVec3(Vec3::new(0.0, 0.0, 1.0));

    pub fn new(v: Vec3) -> Result<Self> {
        unit(v)
    }

    /// Wraps a vector that is already known to have unit norm.
    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9, "not unit: {v:?}");
        UnitVec3(v)
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }

    pub fn dot(&self, other: &UnitVec3) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn flipped(self) -> Self {
        UnitVec3(-self.0)
    }
}

impl std::ops::Deref for UnitVec3 {
    type Target = Vec3;
    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

/// Normalizes `v`, failing when its norm is at most [`EPS_LEN`].
pub fn unit(v: Vec3) -> Result<UnitVec3> {
    let norm = v.norm();
    if !norm.is_finite() || norm <= EPS_LEN {
        return Err(Error::DegenerateVector { norm });
    }
    Ok(UnitVec3(v / norm))
}

/// A proper orthonormal 3x3 matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rotation({:?})", self.0)
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates `RᵀR = I` and `det R = +1` within 1e-8.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let orth_err = (m.transpose() * m - Matrix3::identity()).abs().max();
        if !orth_err.is_finite() || orth_err > ROTATION_TOL {
            return Err(Error::NotARotation(format!(
                "orthonormality error {orth_err:e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::NotARotation(format!("determinant {det}")));
        }
        Ok(Rotation(m))
    }

    /// Builds a rotation from three orthonormal, right-handed columns.
    pub fn from_basis(x: &UnitVec3, y: &UnitVec3, z: &UnitVec3) -> Self {
        let m = Matrix3::from_columns(&[x.0, y.0, z.0]);
        debug_assert!(Rotation::from_matrix(m).is_ok());
        Rotation(m)
    }

    /// Rotation by `angle` radians about `axis` (right-hand rule).
    pub fn about_axis(axis: &UnitVec3, angle: f64) -> Self {
        so3_exp(axis.0 * angle)
    }

    /// Intrinsic roll-pitch-yaw, `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        Rotation::about_axis(&UnitVec3::Z, yaw)
            * Rotation::about_axis(&UnitVec3::Y, pitch)
            * Rotation::about_axis(&UnitVec3::X, roll)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn column(&self, i: usize) -> UnitVec3 {
        UnitVec3(self.0.column(i).into_owned())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Rotation angle in `[0, pi]`.
    pub fn angle(&self) -> f64 {
        let (sin, cos) = sin_cos_of_angle(&self.0);
        sin.atan2(cos)
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// Rigid transform `p ↦ R p + t`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Transform {
    pub rotation: Rotation,
    pub translation: Vec3,
}

impl Transform {
    pub fn new(rotation: Rotation, translation: Vec3) -> Self {
        Transform {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Transform::default()
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Transform::new(Rotation::identity(), translation)
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    /// Maps a point expressed in the outer frame into this transform's
    /// local frame, i.e. applies the inverse transform.
    pub fn apply_inverse(&self, p: &Vec3) -> Vec3 {
        self.rotation.matrix().tr_mul(&(p - self.translation))
    }

    pub fn inverse(&self) -> Self {
        let r_inv = self.rotation.inverse();
        Transform::new(r_inv, -r_inv.apply(&self.translation))
    }
}

impl Mul for Transform {
    type Output = Transform;
    fn mul(self, rhs: Transform) -> Transform {
        Transform::new(
            self.rotation * rhs.rotation,
            self.apply(&rhs.translation),
        )
    }
}

#[rustfmt::skip]
pub fn hat(w: &Vec3) -> Matrix3<f64> {
    Matrix3::new(
         0.0, -w.z,  w.y,
         w.z,  0.0, -w.x,
        -w.y,  w.x,  0.0,
    )
}

/// `vee(R - Rᵀ) / 2`, which equals `sin(theta) * axis`.
fn skew_part(m: &Matrix3<f64>) -> Vec3 {
    Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    ) * 0.5
}

fn sin_cos_of_angle(m: &Matrix3<f64>) -> (f64, f64) {
    let sin = skew_part(m).norm();
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    (sin, cos)
}

/// Exponential map via the Rodrigues formula.
///
/// Valid for any `w`; `so3_log` inverts it for `‖w‖ < pi - EPS_LOG`.
pub fn so3_exp(w: Vec3) -> Rotation {
    let theta2 = w.norm_squared();
    let k = hat(&w);
    let (a, b) = if theta2 < 1e-8 {
        // Taylor expansions of sin(t)/t and (1 - cos t)/t^2.
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rotation(Matrix3::identity() + k * a + k * k * b)
}

/// Logarithm map, returning `theta * axis`.
///
/// The angle is recovered with `atan2` of the skew and symmetric parts, which
/// keeps full precision for small angles.
pub fn so3_log(r: &Rotation) -> Result<Vec3> {
    let m = &r.0;
    let s = skew_part(m);
    let sin = s.norm();
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = sin.atan2(cos);
    if theta >= std::f64::consts::PI - EPS_LOG {
        return Err(Error::NearPiRotation { angle: theta });
    }
    if sin == 0.0 {
        return Ok(Vec3::zeros());
    }
    Ok(s * (theta / sin))
}

/// Projects a near-rotation back onto SO(3) by Gram-Schmidt on its columns.
pub fn reorthonormalize(m: &Matrix3<f64>) -> Result<Rotation> {
    let err = (m.transpose() * m - Matrix3::identity()).norm();
    if !err.is_finite() || err >= 0.1 {
        return Err(Error::NotARotation(format!(
            "Frobenius orthonormality error {err} exceeds 0.1"
        )));
    }
    let c0 = m.column(0).normalize();
    let c1 = m.column(1) - c0 * c0.dot(&m.column(1));
    let c1 = c1.normalize();
    let c2 = m.column(2) - c0 * c0.dot(&m.column(2)) - c1 * c1.dot(&m.column(2));
    let c2 = c2.normalize();
    if c0.cross(&c1).dot(&c2) < 0.0 {
        return Err(Error::NotARotation("reflection (det = -1)".into()));
    }
    // c0 x c1 equals c2 up to rounding; using the cross product keeps det at +1.
    Ok(Rotation(Matrix3::from_columns(&[c0, c1, c0.cross(&c1)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn quat_axis_angle(r: &Rotation) -> Vec3 {
        // Independent path: quaternion extraction.
        let q = UnitQuaternion::from_matrix(r.matrix());
        q.scaled_axis()
    }

    #[test]
    fn unit_examples() {
        let u = unit(Vec3::new(3.0, 4.0, 0.0)).unwrap();
        assert!((u.x - 0.6).abs() < 1e-15 && (u.y - 0.8).abs() < 1e-15 && u.z == 0.0);
        assert_eq!(*unit(Vec3::new(0.0, 0.0, 5.0)).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        assert!(matches!(
            unit(Vec3::new(1e-12, 0.0, 0.0)),
            Err(Error::DegenerateVector { .. })
        ));
    }

    #[test]
    fn log_identity_and_quarter_turn() {
        assert_eq!(so3_log(&Rotation::identity()).unwrap(), Vec3::zeros());
        let r = so3_exp(Vec3::new(0.0, 0.0, FRAC_PI_2));
        let w = so3_log(&r).unwrap();
        assert!((w - Vec3::new(0.0, 0.0, FRAC_PI_2)).abs().max() < 1e-12);
    }

    #[test]
    fn exp_quarter_turn_about_z() {
        let r = so3_exp(Vec3::new(0.0, 0.0, FRAC_PI_2));
        let x = r.apply(&Vec3::x());
        assert!((x - Vec3::y()).norm() < 1e-15);
        assert_eq!(so3_exp(Vec3::zeros()), Rotation::identity());
    }

    #[test]
    fn log_of_tilted_axis_matches_quaternion_oracle() {
        let axis = Vec3::new(1.0, 1.0, 1.0).normalize();
        let r = so3_exp(axis * 0.7);
        let w = so3_log(&r).unwrap();
        assert!((w - quat_axis_angle(&r)).abs().max() < 1e-9);
        assert!((w - axis * 0.7).abs().max() < 1e-9);
        let back = so3_exp(w);
        assert!((back.matrix() - r.matrix()).abs().max() < 1e-9);
    }

    #[test]
    fn coordinate_axis_logs_are_exact() {
        for (i, axis) in [UnitVec3::X, UnitVec3::Y, UnitVec3::Z].iter().enumerate() {
            for &theta in &[0.1, 1.0, 2.5, -1.3] {
                let w = so3_log(&Rotation::about_axis(axis, theta)).unwrap();
                let mut expected = Vec3::zeros();
                expected[i] = theta;
                assert!((w - expected).abs().max() < 1e-12, "{w:?} vs {expected:?}");
            }
        }
    }

    #[test]
    fn near_pi_is_rejected() {
        let r = Rotation::about_axis(&UnitVec3::X, PI - 1e-7);
        assert!(matches!(so3_log(&r), Err(Error::NearPiRotation { .. })));
        let r = Rotation::about_axis(&UnitVec3::X, PI);
        assert!(matches!(so3_log(&r), Err(Error::NearPiRotation { .. })));
    }

    #[test]
    fn reorthonormalize_examples() {
        let r = so3_exp(Vec3::new(0.3, -0.2, 0.9));
        let out = reorthonormalize(r.matrix()).unwrap();
        assert!((out.matrix() - r.matrix()).abs().max() < 1e-12);

        let mut m = *r.matrix();
        m.column_mut(0).scale_mut(1.0 + 1e-6);
        m.column_mut(2).scale_mut(1.0 - 1e-6);
        let out = reorthonormalize(&m).unwrap();
        let err = (out.matrix().transpose() * out.matrix() - Matrix3::identity()).abs().max();
        assert!(err < 1e-12);

        let reflect = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(matches!(reorthonormalize(&reflect), Err(Error::NotARotation(_))));
        assert!(matches!(
            reorthonormalize(&(Matrix3::identity() * 2.0)),
            Err(Error::NotARotation(_))
        ));
    }

    #[test]
    fn from_matrix_rejects_scaled() {
        assert!(Rotation::from_matrix(Matrix3::identity() * 1.01).is_err());
        assert!(Rotation::from_matrix(Matrix3::identity()).is_ok());
    }

    #[test]
    fn transform_inverse_roundtrip() {
        let t = Transform::new(so3_exp(Vec3::new(0.1, 0.2, 0.3)), Vec3::new(1.0, -2.0, 0.5));
        let p = Vec3::new(0.3, 0.4, -0.7);
        assert!((t.apply_inverse(&t.apply(&p)) - p).norm() < 1e-14);
        assert!(((t.inverse() * t).translation).norm() < 1e-14);
    }

    fn small_rotation_vector() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..3.0f64).prop_filter_map(
            "non-zero direction",
            |(x, y, z, theta)| {
                let v = Vec3::new(x, y, z);
                (v.norm() > 1e-3).then(|| v.normalize() * theta)
            },
        )
    }

    proptest! {
        #[test]
        fn log_exp_roundtrip(w in small_rotation_vector()) {
            let back = so3_log(&so3_exp(w)).unwrap();
            prop_assert!((back - w).norm() <= 1e-9);
        }

        #[test]
        fn composition_stays_a_rotation(a in small_rotation_vector(), b in small_rotation_vector()) {
            let r = so3_exp(a) * so3_exp(b);
            prop_assert!(Rotation::from_matrix(*r.matrix()).is_ok());
        }
    }
}
