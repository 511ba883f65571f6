//! Skeleton kinematics, skinning-weight baking, voxel warping and
//! collision resolution.

mod skeleton;
mod skinning;
mod warp;

pub use skeleton::{forward_kinematics, wrap_angle, Joint, Pose, Skeleton};
pub use skinning::{bake_skinning_weights, BlendSign, SkinWeights, SkinnedMesh, WEIGHT_SUM_TOLERANCE};
pub use warp::{resolve_collisions, warp_voxels, ResolvedCells, WarpResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RigError {
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("pose has {pose} joint rotations but the skeleton has {skeleton} joints")]
    JointCountMismatch { skeleton: usize, pose: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid skinning weights: {0}")]
    InvalidWeights(String),
    #[error("{voxels} voxels but {weights} per-voxel records")]
    WeightCountMismatch { voxels: usize, weights: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
