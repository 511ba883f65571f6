//! Linear blend skinning of voxel centers and live-grid collision handling.

use nalgebra::UnitQuaternion;
use rayon::prelude::*;

use super::{forward_kinematics, Pose, RigError, SkinWeights, Skeleton};
use crate::geometry::{RigidTransform, Vec3};
use crate::volume::{morton_encode_unchecked, Flut, GridSpec, VoxelSet};
use crate::Real;

/// Voxels moved to a live pose.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpResult {
    pub grid: GridSpec,
    /// Live voxel centers `p_i^t`.
    pub positions: Vec<Vec3>,
    /// Live cell of each voxel, `None` when it left the grid.
    pub live_cells: Vec<Option<[u32; 3]>>,
    /// Per-voxel rotation `R_i^t` used to map view directions back to the
    /// canonical frame.
    pub rotations: Vec<UnitQuaternion<f64>>,
    /// Canonical voxel indices sharing a live cell, ascending within a
    /// group; groups in Morton order of their cell.
    pub collision_groups: Vec<Vec<u32>>,
    pub out_of_bounds: usize,
    /// In-bounds voxels as `(live morton code, voxel index)`, sorted.
    sorted_live: Vec<(u64, u32)>,
}

impl WarpResult {
    /// The canonical pose: every voxel stays in its own cell.
    pub fn identity(voxels: &VoxelSet) -> Self {
        let live: Vec<Option<[u32; 3]>> = voxels.cells().iter().map(|c| Some(*c)).collect();
        Self::assemble(
            *voxels.grid(),
            voxels.positions(),
            live,
            vec![UnitQuaternion::identity(); voxels.len()],
        )
    }

    fn assemble(
        grid: GridSpec,
        positions: Vec<Vec3>,
        live_cells: Vec<Option<[u32; 3]>>,
        rotations: Vec<UnitQuaternion<f64>>,
    ) -> Self {
        let mut sorted_live: Vec<(u64, u32)> = live_cells
            .par_iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (morton_encode_unchecked(c), i as u32)))
            .collect();
        sorted_live.par_sort_unstable();
        let out_of_bounds = live_cells.len() - sorted_live.len();
        let mut collision_groups = Vec::new();
        for run in sorted_live.chunk_by(|a, b| a.0 == b.0) {
            if run.len() > 1 {
                collision_groups.push(run.iter().map(|(_, i)| *i).collect());
            }
        }
        Self {
            grid,
            positions,
            live_cells,
            rotations,
            collision_groups,
            out_of_bounds,
            sorted_live,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// True when every rotation is the identity, so view directions need no
    /// per-voxel mapping.
    pub fn has_identity_rotations(&self) -> bool {
        self.rotations.iter().all(|q| q.angle() == 0.0)
    }
}

/// Warps canonical voxel centers to `pose` by linear blend skinning,
/// `p^t = sum_j w_j M^t_j (M^c_j)^-1 p^c`, with the weights renormalized
/// to sum to one.
pub fn warp_voxels(
    voxels: &VoxelSet,
    weights: &SkinWeights,
    skeleton: &Skeleton,
    pose: &Pose,
) -> Result<WarpResult, RigError> {
    if weights.len() != voxels.len() {
        return Err(RigError::WeightCountMismatch {
            voxels: voxels.len(),
            weights: weights.len(),
        });
    }
    if let Some(j) = weights.max_joint() {
        if j as usize >= skeleton.len() {
            return Err(RigError::InvalidWeights(format!(
                "weights reference joint {j} but the skeleton has {} joints",
                skeleton.len()
            )));
        }
    }
    let live = forward_kinematics(skeleton, pose)?;
    let skinning: Vec<RigidTransform> = live
        .iter()
        .zip(skeleton.canonical_transforms())
        .map(|(t, c)| t.compose(&c.inverse()))
        .collect();
    let grid = *voxels.grid();
    let moved: Vec<(Vec3, Option<[u32; 3]>, UnitQuaternion<f64>)> = (0..voxels.len())
        .into_par_iter()
        .map(|i| {
            let p = voxels.position(i);
            // Stored weights are rounded to f32; renormalize so a shared
            // rigid motion stays rigid.
            let mut q = Vec3::zeros();
            let mut total = 0.0;
            for (j, w) in weights.voxel(i) {
                q += skinning[j as usize].transform_point(&p) * w as f64;
                total += w as f64;
            }
            q /= total;
            let rot = skinning[weights.dominant_joint(i) as usize].rotation;
            (q, grid.cell_of(&q), rot)
        })
        .collect();
    let mut positions = Vec::with_capacity(moved.len());
    let mut cells = Vec::with_capacity(moved.len());
    let mut rotations = Vec::with_capacity(moved.len());
    for (p, c, r) in moved {
        positions.push(p);
        cells.push(c);
        rotations.push(r);
    }
    let result = WarpResult::assemble(grid, positions, cells, rotations);
    if result.out_of_bounds > 0 {
        log::debug!("{} voxels left the grid and were dropped", result.out_of_bounds);
    }
    Ok(result)
}

/// One occupied live cell per contested group, ready for octree build.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedCells {
    pub cells: Vec<[u32; 3]>,
    pub flut_indices: Vec<u32>,
    /// `(winner, loser)` canonical index pairs.
    pub pairs: Vec<(u32, u32)>,
    pub dropped_out_of_bounds: usize,
}

/// Keeps, for each live cell, the voxel with the highest density (lowest
/// index on ties) and lists every `(winner, loser)` pair.
pub fn resolve_collisions<S: Real>(warp: &WarpResult, flut: &Flut<S>) -> Result<ResolvedCells, RigError> {
    if flut.len() != warp.len() {
        return Err(RigError::WeightCountMismatch {
            voxels: warp.len(),
            weights: flut.len(),
        });
    }
    let mut out = ResolvedCells {
        cells: Vec::with_capacity(warp.sorted_live.len()),
        flut_indices: Vec::with_capacity(warp.sorted_live.len()),
        pairs: Vec::new(),
        dropped_out_of_bounds: warp.out_of_bounds,
    };
    for run in warp.sorted_live.chunk_by(|a, b| a.0 == b.0) {
        let mut winner = run[0].1;
        for &(_, i) in &run[1..] {
            if flut.density(i as usize) > flut.density(winner as usize) {
                winner = i;
            }
        }
        out.cells.push(crate::volume::morton_decode(run[0].0));
        out.flut_indices.push(winner);
        for &(_, i) in run {
            if i != winner {
                out.pairs.push((winner, i));
            }
        }
    }
    Ok(out)
}
