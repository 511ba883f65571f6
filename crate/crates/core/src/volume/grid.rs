use nalgebra::Vector3;

use super::VolumeError;
use crate::geometry::Vec3;

/// Cubic grid of `resolution^3` cells over an axis-aligned box.
///
/// Bounds are held at f32 precision so that a grid written to an asset
/// reloads bit-identically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    resolution: u32,
    min: [f32; 3],
    max: [f32; 3],
}

impl GridSpec {
    pub fn new(resolution: u32, min: [f64; 3], max: [f64; 3]) -> Result<Self, VolumeError> {
        Self::from_f32(
            resolution,
            min.map(|v| v as f32),
            max.map(|v| v as f32),
        )
    }

    pub fn from_f32(resolution: u32, min: [f32; 3], max: [f32; 3]) -> Result<Self, VolumeError> {
        if resolution == 0 || !resolution.is_power_of_two() || resolution > (1 << 21) {
            return Err(VolumeError::InvalidGrid(format!(
                "resolution {resolution} must be a power of two <= 2^21"
            )));
        }
        let ext: Vec<f64> = (0..3).map(|a| max[a] as f64 - min[a] as f64).collect();
        if ext.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(VolumeError::InvalidGrid(format!("empty bounds {min:?}..{max:?}")));
        }
        let e0 = ext[0];
        if ext.iter().any(|e| ((e - e0) / e0).abs() > 1e-5) {
            return Err(VolumeError::InvalidGrid(format!(
                "bounds must be cubic, got extents {ext:?}"
            )));
        }
        Ok(Self { resolution, min, max })
    }

    /// Cube centered at `center` with edge length `size`.
    pub fn cube(resolution: u32, center: [f64; 3], size: f64) -> Result<Self, VolumeError> {
        let h = 0.5 * size;
        Self::new(
            resolution,
            center.map(|c| c - h),
            center.map(|c| c + h),
        )
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Number of octree levels above the leaves.
    pub fn depth(&self) -> u32 {
        self.resolution.trailing_zeros()
    }

    pub fn min_f32(&self) -> [f32; 3] {
        self.min
    }

    pub fn max_f32(&self) -> [f32; 3] {
        self.max
    }

    pub fn min(&self) -> Vec3 {
        Vector3::new(self.min[0] as f64, self.min[1] as f64, self.min[2] as f64)
    }

    pub fn max(&self) -> Vec3 {
        Vector3::new(self.max[0] as f64, self.max[1] as f64, self.max[2] as f64)
    }

    pub fn center(&self) -> Vec3 {
        (self.min() + self.max()) * 0.5
    }

    /// Edge length of one cell, per axis.
    pub fn cell_size_vec(&self) -> Vec3 {
        (self.max() - self.min()) / self.resolution as f64
    }

    /// Mean edge length of one cell.
    pub fn cell_size(&self) -> f64 {
        let c = self.cell_size_vec();
        (c.x + c.y + c.z) / 3.0
    }

    pub fn cell_center(&self, cell: [u32; 3]) -> Vec3 {
        let cs = self.cell_size_vec();
        self.min()
            + Vector3::new(
                (cell[0] as f64 + 0.5) * cs.x,
                (cell[1] as f64 + 0.5) * cs.y,
                (cell[2] as f64 + 0.5) * cs.z,
            )
    }

    /// Position in cell units relative to the grid minimum.
    #[inline]
    pub fn to_grid(&self, p: &Vec3) -> Vec3 {
        let cs = self.cell_size_vec();
        let d = p - self.min();
        Vector3::new(d.x / cs.x, d.y / cs.y, d.z / cs.z)
    }

    /// Cell containing `p` under half-open cells, or `None` outside.
    pub fn cell_of(&self, p: &Vec3) -> Option<[u32; 3]> {
        let g = self.to_grid(p);
        let n = self.resolution as f64;
        if (0..3).all(|a| g[a] >= 0.0 && g[a] < n) {
            Some([g.x as u32, g.y as u32, g.z as u32])
        } else {
            None
        }
    }

    pub fn contains_cell(&self, cell: [u32; 3]) -> bool {
        cell.iter().all(|&c| c < self.resolution)
    }
}
