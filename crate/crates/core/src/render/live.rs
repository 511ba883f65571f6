use nalgebra::Matrix3;
use std::time::{Duration, Instant};

use crate::asset::Asset;
use crate::geometry::Vec3;
use crate::rigging::{resolve_collisions, warp_voxels, Pose, RigError, SkinWeights, Skeleton, WarpResult};
use crate::volume::{build_octree, Flut, GridSpec, VolumeError, VoxelOctree, VoxelSet};
use crate::{Error, Real};

/// Octree over the live cells of one pose, plus what is needed to map live
/// view directions back to each voxel's canonical frame.
#[derive(Clone, Debug)]
pub struct LiveVolume {
    pub octree: VoxelOctree,
    /// `(R_i^t)^-1` per FLUT index; `None` when every voxel is unrotated.
    view_rotations: Option<Vec<Matrix3<f64>>>,
    /// `(winner, loser)` pairs from collision resolution.
    pub collision_pairs: Vec<(u32, u32)>,
    pub out_of_bounds: usize,
}

impl LiveVolume {
    /// The canonical pose: voxels in place, no rotation.
    pub fn canonical(voxels: &VoxelSet) -> Result<Self, Error> {
        Ok(Self {
            octree: VoxelOctree::from_voxels(voxels)?,
            view_rotations: None,
            collision_pairs: Vec::new(),
            out_of_bounds: 0,
        })
    }

    /// Resolves collisions of `warp` by density in `flut` and builds the
    /// live octree.
    pub fn from_warp<S: Real>(warp: &WarpResult, flut: &Flut<S>) -> Result<Self, Error> {
        let resolved = resolve_collisions(warp, flut)?;
        if resolved.cells.is_empty() {
            return Err(VolumeError::AllOutOfBounds.into());
        }
        let octree = build_octree(&warp.grid, &resolved.cells, &resolved.flut_indices)?;
        let view_rotations = (!warp.has_identity_rotations()).then(|| {
            warp.rotations
                .iter()
                .map(|q| q.inverse().to_rotation_matrix().into_inner())
                .collect()
        });
        Ok(Self {
            octree,
            view_rotations,
            collision_pairs: resolved.pairs,
            out_of_bounds: resolved.dropped_out_of_bounds,
        })
    }

    /// The same volume uniformly scaled by `s` about the world origin.
    /// Densities are per unit world length and stay unchanged.
    pub fn scaled(&self, s: f64) -> Result<Self, Error> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale {s} must be positive")));
        }
        let g = self.octree.grid();
        let grid = GridSpec::new(g.resolution(), (g.min() * s).into(), (g.max() * s).into())?;
        Ok(Self {
            octree: VoxelOctree::from_sorted_leaves(grid, self.octree.leaves().to_vec())?,
            ..self.clone()
        })
    }

    pub fn has_rotations(&self) -> bool {
        self.view_rotations.is_some()
    }

    /// Canonical-frame direction for a live ray direction hitting voxel
    /// `flut_index`.
    #[inline]
    pub fn canonical_direction(&self, flut_index: u32, dir: &Vec3) -> Vec3 {
        match &self.view_rotations {
            Some(r) => r[flut_index as usize] * dir,
            None => *dir,
        }
    }
}

/// Wall-clock time of the three per-frame stages.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub warp: Duration,
    /// Collision resolution and octree construction.
    pub build_octree: Duration,
    pub volume_render: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.warp + self.build_octree + self.volume_render
    }
}

/// Warps the asset's voxels to `pose`. Without a rig, a one-joint pose is
/// applied as a rigid motion.
pub fn warp_asset(asset: &Asset, pose: &Pose) -> Result<WarpResult, Error> {
    match &asset.rig {
        Some(rig) => Ok(warp_voxels(&asset.voxels, &rig.weights, &rig.skeleton, pose)?),
        None => {
            if pose.joint_rotations.len() != 1 {
                return Err(RigError::JointCountMismatch {
                    skeleton: 1,
                    pose: pose.joint_rotations.len(),
                }
                .into());
            }
            let weights = SkinWeights::rigid(asset.len(), 0);
            Ok(warp_voxels(&asset.voxels, &weights, &Skeleton::single_joint(), pose)?)
        }
    }
}

/// Builds the live volume of `asset` for `pose` (`None` = canonical), timing
/// the warp and build stages. An all-zero pose takes the canonical path.
pub fn pose_asset(asset: &Asset, pose: Option<&Pose>) -> Result<(LiveVolume, StageTimings), Error> {
    let mut timings = StageTimings::default();
    let t0 = Instant::now();
    let warp = match pose {
        Some(p) if !(p.is_canonical() && p.joint_rotations.len() == asset.joint_count()) => warp_asset(asset, p)?,
        _ => WarpResult::identity(&asset.voxels),
    };
    timings.warp = t0.elapsed();
    let t1 = Instant::now();
    let live = LiveVolume::from_warp(&warp, &asset.flut)?;
    timings.build_octree = t1.elapsed();
    Ok((live, timings))
}
