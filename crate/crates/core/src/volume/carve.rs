//! Conservative visual-hull carving from alpha mattes.

use rayon::prelude::*;

use super::{GridSpec, VolumeError, VoxelSet};
use crate::geometry::Camera;

/// Single-channel alpha matte, row-major, straight alpha in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaMask {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl AlphaMask {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, VolumeError> {
        if data.len() != width as usize * height as usize {
            return Err(VolumeError::MaskMismatch(format!(
                "{} values for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CarveOptions {
    pub dilation_radius_px: u32,
    pub alpha_threshold: f32,
    /// Keep cells that no camera sees. Off by default: unobserved cells are
    /// discarded.
    pub keep_unobserved: bool,
}

impl Default for CarveOptions {
    fn default() -> Self {
        Self {
            dilation_radius_px: 5,
            alpha_threshold: 0.005,
            keep_unobserved: false,
        }
    }
}

/// Thresholds `mask` at `threshold` and dilates the result by a disc of
/// `radius` pixels.
pub fn dilated_binary_mask(mask: &AlphaMask, threshold: f32, radius: u32) -> Vec<bool> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    // Row prefix counts of set pixels give O(1) span queries.
    let mut prefix = vec![0u32; (w + 1) * h];
    for y in 0..h {
        let row = &mut prefix[y * (w + 1)..(y + 1) * (w + 1)];
        for x in 0..w {
            let set = mask.data[y * w + x] >= threshold;
            row[x + 1] = row[x] + set as u32;
        }
    }
    let r = radius as i64;
    let spans: Vec<(i64, i64)> = (-r..=r)
        .map(|dy| (dy, ((r * r - dy * dy) as f64).sqrt().floor() as i64))
        .collect();
    let mut out = vec![false; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row_out)| {
        for (x, o) in row_out.iter_mut().enumerate() {
            *o = spans.iter().any(|&(dy, half)| {
                let yy = y as i64 + dy;
                if yy < 0 || yy >= h as i64 {
                    return false;
                }
                let lo = (x as i64 - half).max(0) as usize;
                let hi = (x as i64 + half + 1).min(w as i64) as usize;
                let row = &prefix[yy as usize * (w + 1)..];
                row[hi] > row[lo]
            });
        }
    });
    out
}

/// Carves the grid against every view. A cell survives iff each view whose
/// image contains the cell center's projection has the dilated mask set
/// there; cells seen by no view are dropped unless `keep_unobserved`.
pub fn carve_volume(
    views: &[(Camera, AlphaMask)],
    grid: GridSpec,
    opts: &CarveOptions,
) -> Result<VoxelSet, VolumeError> {
    if views.is_empty() {
        return Err(VolumeError::NoViews);
    }
    if !(opts.alpha_threshold > 0.0 && opts.alpha_threshold < 1.0) {
        return Err(VolumeError::InvalidParameter(format!(
            "alpha threshold {} outside (0, 1)",
            opts.alpha_threshold
        )));
    }
    for (i, (cam, mask)) in views.iter().enumerate() {
        if cam.width != mask.width || cam.height != mask.height {
            return Err(VolumeError::MaskMismatch(format!(
                "view {i}: camera {}x{} vs mask {}x{}",
                cam.width, cam.height, mask.width, mask.height
            )));
        }
    }
    let dilated: Vec<Vec<bool>> = views
        .iter()
        .map(|(_, m)| dilated_binary_mask(m, opts.alpha_threshold, opts.dilation_radius_px))
        .collect();

    let n = grid.resolution();
    let slabs: Vec<(Vec<[u32; 3]>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut kept = Vec::new();
            let mut passes = vec![0usize; views.len()];
            for j in 0..n {
                for i in 0..n {
                    let center = grid.cell_center([i, j, k]);
                    let mut observed = false;
                    let mut alive = true;
                    for (v, (cam, mask)) in views.iter().enumerate() {
                        match cam.project_to_pixel(&center) {
                            Some((x, y)) => {
                                observed = true;
                                if dilated[v][y as usize * mask.width as usize + x as usize] {
                                    passes[v] += 1;
                                } else {
                                    alive = false;
                                }
                            }
                            None => passes[v] += 1,
                        }
                    }
                    if alive && (observed || opts.keep_unobserved) {
                        kept.push([i, j, k]);
                    }
                }
            }
            (kept, passes)
        })
        .collect();

    let mut cells = Vec::new();
    let mut per_view = vec![0usize; views.len()];
    for (kept, passes) in slabs {
        cells.extend(kept);
        for (acc, p) in per_view.iter_mut().zip(passes) {
            *acc += p;
        }
    }
    if cells.is_empty() {
        return Err(VolumeError::CarvedEmpty {
            per_view_survivors: per_view,
        });
    }
    VoxelSet::new(grid, cells)
}
