use nalgebra::{Matrix4, Rotation3, UnitQuaternion, Vector3};

use super::Vec3;

/// A rotation followed by a translation: `x -> R x + t`.
///
/// Composition follows function application order, so `a.compose(&b)`
/// applies `b` first and then `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    pub fn from_rotation(rotation: UnitQuaternion<f64>) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    /// Rotation from XYZ Euler angles in radians: rotate about x first,
    /// then y, then z (`R = Rz * Ry * Rx`).
    pub fn from_euler_xyz(angles: Vec3) -> UnitQuaternion<f64> {
        UnitQuaternion::from_euler_angles(angles.x, angles.y, angles.z)
    }

    /// Builds a transform from a quaternion given as `[w, x, y, z]`. The
    /// quaternion is renormalized.
    pub fn from_wxyz(q: [f64; 4], translation: [f64; 3]) -> Self {
        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
        Self::new(
            UnitQuaternion::from_quaternion(quat),
            Vector3::from(translation),
        )
    }

    pub fn rotation_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform {
            rotation: inv,
            translation: -(inv * self.translation),
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = self.rotation.to_homogeneous();
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Recovers a rigid transform from the upper 3x4 block of a homogeneous
    /// matrix. The rotation block is orthonormalized.
    pub fn from_matrix(m: &Matrix4<f64>) -> RigidTransform {
        let r = m.fixed_view::<3, 3>(0, 0).into_owned();
        let rot = Rotation3::from_matrix(&r);
        RigidTransform {
            rotation: UnitQuaternion::from_rotation_matrix(&rot),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }

    /// Largest absolute elementwise difference between the homogeneous
    /// matrices of two transforms.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        (self.to_matrix() - other.to_matrix()).abs().max()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.rotation.quaternion().norm() - 1.0).abs() <= tol
    }
}
