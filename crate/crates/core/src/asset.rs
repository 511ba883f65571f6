//! A renderable character: canonical voxels, their feature table and an
//! optional rig.

use crate::rigging::{RigError, SkinWeights, Skeleton};
use crate::volume::{Flut, GridSpec, VolumeError, VoxelSet};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct Rig {
    pub skeleton: Skeleton,
    pub weights: SkinWeights,
}

/// Voxel `i` of `voxels` owns FLUT entry `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Asset {
    pub voxels: VoxelSet,
    pub flut: Flut<f32>,
    pub rig: Option<Rig>,
}

impl Asset {
    pub fn new(voxels: VoxelSet, flut: Flut<f32>, rig: Option<Rig>) -> Result<Self, Error> {
        if voxels.is_empty() {
            return Err(VolumeError::EmptyVoxelSet.into());
        }
        if flut.len() != voxels.len() {
            return Err(VolumeError::InvalidParameter(format!(
                "FLUT has {} entries for {} voxels",
                flut.len(),
                voxels.len()
            ))
            .into());
        }
        if let Some(rig) = &rig {
            if rig.weights.len() != voxels.len() {
                return Err(RigError::WeightCountMismatch {
                    voxels: voxels.len(),
                    weights: rig.weights.len(),
                }
                .into());
            }
            if let Some(j) = rig.weights.max_joint() {
                if j as usize >= rig.skeleton.len() {
                    return Err(RigError::InvalidWeights(format!(
                        "weights reference joint {j} but the skeleton has {} joints",
                        rig.skeleton.len()
                    ))
                    .into());
                }
            }
        }
        Ok(Self { voxels, flut, rig })
    }

    pub fn grid(&self) -> &GridSpec {
        self.voxels.grid()
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// Joint count a pose for this asset must carry.
    pub fn joint_count(&self) -> usize {
        self.rig.as_ref().map_or(1, |r| r.skeleton.len())
    }
}
