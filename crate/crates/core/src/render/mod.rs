//! Volume rendering over the posed octree: per-segment integration with
//! view canonicalization, full-frame rendering and depth compositing.

mod frame;
mod image;
mod integrate;
mod live;
mod request;

pub use frame::{composite, render_frame, render_live, FrameBuffers};
pub use integrate::{
    basis_for, integrate_ray, integrate_ray_with, integrate_segments, HitRecord, IntegrationTrace,
    RaySample,
};
pub use image::RgbaImage;
pub use live::{pose_asset, warp_asset, LiveVolume, StageTimings};
pub use request::{frame_png, render_png, render_request, FrameRequest};

use crate::Error;

pub const DEFAULT_LAMBDA_TH: f64 = 0.01;
pub const DEFAULT_DEPTH_DENSITY: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    /// Rays stop once accumulated alpha exceeds `1 - lambda_th`.
    pub lambda_th: f64,
    /// Off during fitting, where truncation would bias gradients.
    pub early_stop: bool,
    /// Depth is the entry distance of the first voxel denser than this.
    pub depth_density_threshold: f64,
    /// Solid background for export; `None` keeps the frame transparent.
    pub background: Option<[f32; 3]>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            lambda_th: DEFAULT_LAMBDA_TH,
            early_stop: true,
            depth_density_threshold: DEFAULT_DEPTH_DENSITY,
            background: None,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.lambda_th > 0.0 && self.lambda_th < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda_th {} outside (0, 1)",
                self.lambda_th
            )));
        }
        if !(self.depth_density_threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "depth density threshold {} is negative",
                self.depth_density_threshold
            )));
        }
        Ok(())
    }
}
