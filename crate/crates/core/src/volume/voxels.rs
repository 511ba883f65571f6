use super::{morton::morton_encode_unchecked, GridSpec, VolumeError};
use crate::geometry::Vec3;

/// Occupied cells of a grid. The position of a cell in `cells` is its
/// canonical voxel index, which is also its FLUT entry.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelSet {
    grid: GridSpec,
    cells: Vec<[u32; 3]>,
}

impl VoxelSet {
    pub fn new(grid: GridSpec, cells: Vec<[u32; 3]>) -> Result<Self, VolumeError> {
        if cells.is_empty() {
            return Err(VolumeError::EmptyVoxelSet);
        }
        if let Some(c) = cells.iter().find(|c| !grid.contains_cell(**c)) {
            return Err(VolumeError::CoordinateOutOfRange(*c));
        }
        let mut codes: Vec<u64> = cells.iter().map(|c| morton_encode_unchecked(*c)).collect();
        codes.sort_unstable();
        if let Some(w) = codes.windows(2).find(|w| w[0] == w[1]) {
            return Err(VolumeError::DuplicateCell(super::morton_decode(w[0])));
        }
        Ok(Self { grid, cells })
    }

    /// Every cell of the grid.
    pub fn full(grid: GridSpec) -> Self {
        let n = grid.resolution();
        let mut cells = Vec::with_capacity((n as usize).pow(3));
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    cells.push([i, j, k]);
                }
            }
        }
        Self { grid, cells }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cells(&self) -> &[[u32; 3]] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Canonical position of voxel `index` (its cell center).
    pub fn position(&self, index: usize) -> Vec3 {
        self.grid.cell_center(self.cells[index])
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.cells.iter().map(|c| self.grid.cell_center(*c)).collect()
    }
}
