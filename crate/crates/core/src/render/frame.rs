use std::time::Instant;

use rayon::prelude::*;

use super::{integrate_ray_with, pose_asset, LiveVolume, RenderOptions, StageTimings};
use crate::asset::Asset;
use crate::geometry::Camera;
use crate::rigging::Pose;
use crate::volume::Flut;
use crate::Error;

/// Per-pixel premultiplied features, coarse alpha and depth.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffers {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    /// Pixel-major, `channels` values per pixel.
    pub color: Vec<f32>,
    pub alpha: Vec<f32>,
    /// World distance along the pixel ray, infinity where nothing is dense.
    pub depth: Vec<f32>,
}

impl FrameBuffers {
    pub fn new(width: u32, height: u32, channels: usize) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            channels,
            color: vec![0.0; n * channels],
            alpha: vec![0.0; n],
            depth: vec![f32::INFINITY; n],
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.alpha.len()
    }

    pub fn pixel_color(&self, p: usize) -> &[f32] {
        &self.color[p * self.channels..(p + 1) * self.channels]
    }

    /// 8-bit RGBA with straight (un-premultiplied) color. With a background
    /// the frame is composited over it and comes out opaque. Channels past
    /// the third are ignored; missing ones read as zero.
    pub fn to_rgba8(&self, background: Option<[f32; 3]>) -> Vec<u8> {
        let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let mut out = Vec::with_capacity(self.pixel_count() * 4);
        for p in 0..self.pixel_count() {
            let a = self.alpha[p].clamp(0.0, 1.0);
            let f = self.pixel_color(p);
            let rgb: [f32; 3] = std::array::from_fn(|c| f.get(c).copied().unwrap_or(0.0));
            match background {
                Some(bg) => {
                    for c in 0..3 {
                        out.push(q(rgb[c] + (1.0 - a) * bg[c]));
                    }
                    out.push(255);
                }
                None => {
                    for v in rgb {
                        out.push(if a > 0.0 { q(v / a) } else { 0 });
                    }
                    out.push(q(a));
                }
            }
        }
        out
    }
}

/// Integrates every pixel of `camera` through `live`. Rows are rendered in
/// parallel; each pixel is independent, so the result does not depend on
/// thread count.
pub fn render_live(live: &LiveVolume, flut: &Flut<f32>, camera: &Camera, opts: &RenderOptions) -> FrameBuffers {
    let mut fb = FrameBuffers::new(camera.width, camera.height, flut.channels());
    let w = camera.width as usize;
    let c = fb.channels;
    fb.color
        .par_chunks_mut(w * c)
        .zip(fb.alpha.par_chunks_mut(w))
        .zip(fb.depth.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((color, alpha), depth))| {
            let mut segments = Vec::new();
            for x in 0..w {
                let ray = camera.ray_from_pixel([x as f64, y as f64]);
                let s = integrate_ray_with(live, flut, &ray, opts, None, &mut segments);
                color[x * c..(x + 1) * c].copy_from_slice(&s.color);
                alpha[x] = s.alpha;
                depth[x] = s.depth as f32;
            }
        });
    fb
}

/// Warps, resolves collisions, rebuilds the octree and renders one frame.
/// `pose = None` renders the canonical pose.
pub fn render_frame(
    asset: &Asset,
    pose: Option<&Pose>,
    camera: &Camera,
    opts: &RenderOptions,
) -> Result<(FrameBuffers, StageTimings), Error> {
    opts.validate()?;
    let (live, mut timings) = pose_asset(asset, pose)?;
    let t = Instant::now();
    let fb = render_live(&live, &asset.flut, camera, opts);
    timings.volume_render = t.elapsed();
    Ok((fb, timings))
}

/// Blends the volumetric foreground over a rasterized background using
/// depth for occlusion: nearer foreground pixels are composited
/// premultiplied, the rest show the background. `bg_color` holds
/// `fg.channels` values per pixel.
pub fn composite(fg: &FrameBuffers, bg_color: &[f32], bg_depth: &[f32]) -> Result<Vec<f32>, Error> {
    let n = fg.pixel_count();
    let c = fg.channels;
    if bg_color.len() != n * c || bg_depth.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "foreground {}x{}x{c}, background has {} color values and {} depths",
            fg.width,
            fg.height,
            bg_color.len(),
            bg_depth.len()
        )));
    }
    let mut out = bg_color.to_vec();
    for p in 0..n {
        if fg.depth[p] <= bg_depth[p] {
            let a = fg.alpha[p];
            for k in 0..c {
                out[p * c + k] = fg.color[p * c + k] + (1.0 - a) * bg_color[p * c + k];
            }
        }
    }
    Ok(out)
}
