use std::time::Instant;

use super::{pose_asset, render_live, FrameBuffers, RenderOptions, StageTimings};
use crate::asset::Asset;
use crate::assetio::encode_png;
use crate::geometry::Camera;
use crate::rigging::Pose;
use crate::Error;

/// Everything that determines one rendered frame of an asset.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameRequest {
    /// `None` renders the canonical pose.
    pub pose: Option<Pose>,
    pub camera: Camera,
    pub options: RenderOptions,
    /// Uniform scale of the character about the world origin.
    pub scale: f64,
}

impl FrameRequest {
    pub fn new(pose: Option<Pose>, camera: Camera) -> Self {
        Self {
            pose,
            camera,
            options: RenderOptions::default(),
            scale: 1.0,
        }
    }
}

pub fn render_request(asset: &Asset, req: &FrameRequest) -> Result<(FrameBuffers, StageTimings), Error> {
    req.options.validate()?;
    let (mut live, mut timings) = pose_asset(asset, req.pose.as_ref())?;
    if req.scale != 1.0 {
        let t = Instant::now();
        live = live.scaled(req.scale)?;
        timings.build_octree += t.elapsed();
    }
    let t = Instant::now();
    let fb = render_live(&live, &asset.flut, &req.camera, &req.options);
    timings.volume_render = t.elapsed();
    Ok((fb, timings))
}

/// PNG bytes of a rendered frame, composited over the request's background
/// when it has one.
pub fn frame_png(fb: &FrameBuffers, options: &RenderOptions) -> Result<Vec<u8>, Error> {
    Ok(encode_png(fb.width, fb.height, &fb.to_rgba8(options.background))?)
}

/// Renders a request straight to PNG bytes.
pub fn render_png(asset: &Asset, req: &FrameRequest) -> Result<(Vec<u8>, FrameBuffers, StageTimings), Error> {
    let (fb, timings) = render_request(asset, req)?;
    Ok((frame_png(&fb, &req.options)?, fb, timings))
}
