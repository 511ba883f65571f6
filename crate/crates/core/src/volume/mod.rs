//! Sparse voxel model: carving, Morton codes, octree build, point queries,
//! ray traversal and the feature table.

mod carve;
mod flut;
mod grid;
mod morton;
mod octree;
mod traverse;
mod voxels;

pub use carve::{carve_volume, dilated_binary_mask, AlphaMask, CarveOptions};
pub use flut::{Flut, MAX_CHANNELS};
pub use grid::GridSpec;
pub use morton::{
    morton_decode, morton_encode, morton_encode_unchecked, MORTON_COORD_BITS, MORTON_COORD_LIMIT,
};
pub use octree::{build_octree, Leaf, NodeRef, RadixNode, VoxelOctree};
pub use traverse::RaySegment;
pub use voxels::VoxelSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VolumeError {
    #[error("carved-empty: no cell survived carving (per-view survivors {per_view_survivors:?})")]
    CarvedEmpty { per_view_survivors: Vec<usize> },
    #[error("voxel set is empty")]
    EmptyVoxelSet,
    #[error("every voxel left the grid in this pose")]
    AllOutOfBounds,
    #[error("grid coordinate {0:?} out of range")]
    CoordinateOutOfRange([u32; 3]),
    #[error("duplicate cell {0:?}")]
    DuplicateCell([u32; 3]),
    #[error("leaf table is not strictly sorted")]
    UnsortedLeaves,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("mask does not match camera: {0}")]
    MaskMismatch(String),
    #[error("carving needs at least one view")]
    NoViews,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
