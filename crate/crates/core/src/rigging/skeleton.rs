use std::f64::consts::PI;

use super::RigError;
use crate::geometry::{RigidTransform, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Bind transform relative to the parent joint (or world for the root).
    pub bind_local: RigidTransform,
}

/// Joint hierarchy with precomputed canonical (bind) global transforms.
///
/// Joints are stored parents-first: every joint's parent has a smaller
/// index, and joint 0 is the only root.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    canonical: Vec<RigidTransform>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self, RigError> {
        if joints.is_empty() {
            return Err(RigError::InvalidSkeleton("no joints".into()));
        }
        if joints.len() > u16::MAX as usize {
            return Err(RigError::InvalidSkeleton("too many joints".into()));
        }
        for (i, j) in joints.iter().enumerate() {
            match (i, j.parent) {
                (0, None) => {}
                (0, Some(_)) => {
                    return Err(RigError::InvalidSkeleton("joint 0 must be the root".into()))
                }
                (_, None) => {
                    return Err(RigError::InvalidSkeleton(format!(
                        "joint {i} ({}) is a second root",
                        j.name
                    )))
                }
                (_, Some(p)) if p >= i => {
                    return Err(RigError::InvalidSkeleton(format!(
                        "joint {i} ({}) has parent {p}; parents must precede children",
                        j.name
                    )))
                }
                _ => {}
            }
            if !j.bind_local.is_normalized(1e-6) {
                return Err(RigError::InvalidSkeleton(format!(
                    "joint {i} has a non-unit rotation"
                )));
            }
        }
        let mut canonical: Vec<RigidTransform> = Vec::with_capacity(joints.len());
        for j in &joints {
            let g = match j.parent {
                Some(p) => canonical[p].compose(&j.bind_local),
                None => j.bind_local,
            };
            canonical.push(g);
        }
        Ok(Self { joints, canonical })
    }

    /// One root joint at the origin.
    pub fn single_joint() -> Self {
        Self::new(vec![Joint {
            name: "root".into(),
            parent: None,
            bind_local: RigidTransform::identity(),
        }])
        .expect("valid single-joint skeleton")
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Canonical global transforms `M^c`.
    pub fn canonical_transforms(&self) -> &[RigidTransform] {
        &self.canonical
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }
}

/// Skeletal pose: per-joint local XYZ Euler rotations (radians) applied
/// after each joint's bind transform, plus a global rotation (XYZ Euler)
/// and translation applied to the whole skeleton.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub joint_rotations: Vec<Vec3>,
    pub root_rotation: Vec3,
    pub root_translation: Vec3,
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w == -PI {
        w = PI;
    }
    w
}

impl Pose {
    /// Builds a pose, wrapping every angle and rejecting non-finite values.
    pub fn new(
        joint_rotations: Vec<Vec3>,
        root_rotation: Vec3,
        root_translation: Vec3,
    ) -> Result<Self, RigError> {
        let finite = joint_rotations.iter().all(|r| r.iter().all(|v| v.is_finite()))
            && root_rotation.iter().all(|v| v.is_finite())
            && root_translation.iter().all(|v| v.is_finite());
        if !finite {
            return Err(RigError::InvalidPose("non-finite value".into()));
        }
        Ok(Self {
            joint_rotations: joint_rotations.into_iter().map(|r| r.map(wrap_angle)).collect(),
            root_rotation: root_rotation.map(wrap_angle),
            root_translation,
        })
    }

    pub fn canonical(joint_count: usize) -> Self {
        Self {
            joint_rotations: vec![Vec3::zeros(); joint_count],
            root_rotation: Vec3::zeros(),
            root_translation: Vec3::zeros(),
        }
    }

    /// Pose applying only a global rigid motion.
    pub fn rigid(joint_count: usize, root_rotation: Vec3, root_translation: Vec3) -> Self {
        Self {
            root_rotation: root_rotation.map(wrap_angle),
            root_translation,
            ..Self::canonical(joint_count)
        }
    }

    /// True when every angle and the root translation are exactly zero.
    pub fn is_canonical(&self) -> bool {
        self.root_translation == Vec3::zeros()
            && self.root_rotation == Vec3::zeros()
            && self.joint_rotations.iter().all(|r| *r == Vec3::zeros())
    }

    pub fn global_transform(&self) -> RigidTransform {
        RigidTransform::new(
            RigidTransform::from_euler_xyz(self.root_rotation),
            self.root_translation,
        )
    }

    /// Joint-wise linear interpolation of angles and translation.
    pub fn lerp(&self, other: &Pose, t: f64) -> Pose {
        let mix = |a: &Vec3, b: &Vec3| a + (b - a) * t;
        Pose {
            joint_rotations: self
                .joint_rotations
                .iter()
                .zip(&other.joint_rotations)
                .map(|(a, b)| mix(a, b))
                .collect(),
            root_rotation: mix(&self.root_rotation, &other.root_rotation),
            root_translation: mix(&self.root_translation, &other.root_translation),
        }
    }
}

/// Live global transforms `M^t` for `pose`, root first.
pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<Vec<RigidTransform>, RigError> {
    if pose.joint_rotations.len() != skeleton.len() {
        return Err(RigError::JointCountMismatch {
            skeleton: skeleton.len(),
            pose: pose.joint_rotations.len(),
        });
    }
    let global = pose.global_transform();
    let mut out: Vec<RigidTransform> = Vec::with_capacity(skeleton.len());
    for (j, joint) in skeleton.joints().iter().enumerate() {
        let local = joint
            .bind_local
            .compose(&RigidTransform::from_rotation(RigidTransform::from_euler_xyz(
                pose.joint_rotations[j],
            )));
        let g = match joint.parent {
            Some(p) => out[p].compose(&local),
            None => global.compose(&local),
        };
        out.push(g);
    }
    Ok(out)
}
