use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use smallvec::SmallVec;

use super::{
    backward, loss_rgba_with_grad, loss_vrt, psnr, vrt_backward, GradBuffer, RayTarget, Reduction, SparseAdam,
};
use crate::asset::Asset;
use crate::geometry::{Camera, Ray};
use crate::render::{
    integrate_ray_with, pose_asset, render_live, warp_asset, IntegrationTrace, LiveVolume, RaySample,
    RenderOptions, RgbaImage,
};
use crate::rigging::{Pose, WarpResult};
use crate::Error;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("non-finite loss at iteration {iteration} (view {view}, pixel {pixel:?})")]
    NonFinite {
        iteration: usize,
        view: usize,
        pixel: [u32; 2],
    },
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PoseSampling {
    /// Uniformly random frame each iteration.
    #[default]
    Random,
    /// Frames in order, wrapping around.
    Cycle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    /// Rays per batch `N_P`.
    pub rays_per_batch: usize,
    /// Step size for SH coefficients.
    pub learning_rate: f64,
    /// Step size for densities; defaults to `learning_rate / cell_size` so
    /// that the dimensionless optical depth per cell moves like a
    /// coefficient.
    pub density_learning_rate: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lambda_vrt: f64,
    pub pose_sampling: PoseSampling,
    pub seed: u64,
    pub reduction: Reduction,
    /// Probe PSNR is evaluated every this many iterations and at the end;
    /// 0 evaluates only at the end.
    pub probe_every: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            rays_per_batch: 4096,
            learning_rate: 0.01,
            density_learning_rate: None,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-8,
            lambda_vrt: 0.01,
            pose_sampling: PoseSampling::Random,
            seed: 0,
            reduction: Reduction::Deterministic,
            probe_every: 100,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: &str| Err(FitError::InvalidConfig(m.into()));
        if self.rays_per_batch == 0 {
            return bad("rays per batch must be at least 1");
        }
        if !(self.learning_rate > 0.0) || self.density_learning_rate.is_some_and(|v| !(v > 0.0)) {
            return bad("learning rates must be positive");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("moment decays must lie in (0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.lambda_vrt >= 0.0) {
            return bad("lambda_vrt must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainView {
    pub camera: Camera,
    pub image: RgbaImage,
}

/// Images of one pose; `pose = None` is the canonical pose.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainFrame {
    pub pose: Option<Pose>,
    pub views: Vec<TrainView>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeView {
    pub pose: Option<Pose>,
    pub camera: Camera,
    pub image: RgbaImage,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitDataset {
    pub frames: Vec<TrainFrame>,
    pub probes: Vec<ProbeView>,
}

impl FitDataset {
    fn validate(&self) -> Result<(), FitError> {
        if self.frames.iter().all(|f| f.views.is_empty()) {
            return Err(FitError::InvalidDataset("no training images".into()));
        }
        let views = self
            .frames
            .iter()
            .flat_map(|f| f.views.iter().map(|v| (&v.camera, &v.image)))
            .chain(self.probes.iter().map(|p| (&p.camera, &p.image)));
        for (c, img) in views {
            if c.width != img.width || c.height != img.height {
                return Err(FitError::InvalidDataset(format!(
                    "camera is {}x{} but its image is {}x{}",
                    c.width, c.height, img.width, img.height
                )));
            }
        }
        Ok(())
    }
}

/// One progress record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossReport {
    pub iteration: usize,
    pub l_rgba: f64,
    pub l_vrt: f64,
    pub total: f64,
    pub probe_psnr: Option<f64>,
    pub rays_per_sec: f64,
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub asset: Asset,
    pub reports: Vec<LossReport>,
}

impl FitOutcome {
    pub fn final_probe_psnr(&self) -> Option<f64> {
        self.reports.iter().rev().find_map(|r| r.probe_psnr)
    }
}

/// Mean PSNR of `asset` over the probe views, rendered with inference
/// settings.
pub fn probe_psnr(asset: &Asset, probes: &[ProbeView]) -> Result<Option<f64>, Error> {
    if probes.is_empty() {
        return Ok(None);
    }
    let mut sum = 0.0;
    for p in probes {
        let (live, _) = pose_asset(asset, p.pose.as_ref())?;
        let fb = render_live(&live, &asset.flut, &p.camera, &RenderOptions::default());
        sum += psnr(&RgbaImage::from_frame(&fb).data, &p.image.data);
    }
    Ok(Some(sum / probes.len() as f64))
}

struct FrameState {
    warp: Option<WarpResult>,
    /// Reused across iterations when collisions cannot change it.
    cached: Option<LiveVolume>,
    /// Cumulative pixel counts of the frame's views.
    offsets: Vec<usize>,
}

/// Optimizes the asset's FLUT against the dataset. The initial table is
/// the asset's; every iteration samples a pose, rebuilds its live volume,
/// integrates a ray batch without early stop, backpropagates the RGBA and
/// VRT losses and takes one sparse adaptive-moment step.
pub fn fit(
    dataset: &FitDataset,
    mut asset: Asset,
    config: &FitConfig,
    progress: &mut dyn FnMut(&LossReport),
) -> Result<FitOutcome, Error> {
    config.validate()?;
    dataset.validate()?;
    if asset.flut.channels() != 3 {
        return Err(FitError::InvalidConfig(format!(
            "image fitting needs 3 feature channels, the table has {}",
            asset.flut.channels()
        ))
        .into());
    }
    let cell = asset.grid().cell_size();
    let mut opt = SparseAdam::new(
        asset.len(),
        asset.flut.stride(),
        config.learning_rate as f32,
        config.density_learning_rate.unwrap_or(config.learning_rate / cell) as f32,
        config.beta1 as f32,
        config.beta2 as f32,
        config.eps as f32,
    );
    let mut frames = Vec::with_capacity(dataset.frames.len());
    for f in &dataset.frames {
        let warp = f.pose.as_ref().map(|p| warp_asset(&asset, p)).transpose()?;
        let mut offsets = vec![0];
        for v in &f.views {
            offsets.push(offsets.last().unwrap() + v.camera.pixel_count());
        }
        frames.push(FrameState {
            warp,
            cached: None,
            offsets,
        });
    }
    let usable: Vec<usize> = (0..frames.len()).filter(|&i| !dataset.frames[i].views.is_empty()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut grad = GradBuffer::for_flut(&asset.flut);
    let opts = RenderOptions {
        early_stop: false,
        ..RenderOptions::default()
    };
    let mut reports = Vec::with_capacity(config.iterations);
    let n = config.rays_per_batch;

    for it in 0..config.iterations {
        let start = Instant::now();
        let fi = match config.pose_sampling {
            PoseSampling::Random => usable[rng.gen_range(0..usable.len())],
            PoseSampling::Cycle => usable[it % usable.len()],
        };
        let frame = &dataset.frames[fi];
        let state = &mut frames[fi];

        let rebuilt;
        let live: &LiveVolume = match &state.cached {
            Some(l) => l,
            None => {
                let l = match &state.warp {
                    Some(w) => LiveVolume::from_warp(w, &asset.flut)?,
                    None => LiveVolume::canonical(&asset.voxels)?,
                };
                let reusable = state.warp.as_ref().is_none_or(|w| w.collision_groups.is_empty());
                if reusable {
                    state.cached = Some(l);
                    state.cached.as_ref().unwrap()
                } else {
                    rebuilt = l;
                    &rebuilt
                }
            }
        };

        // Sample pixels across the frame's views.
        let total_px = *state.offsets.last().unwrap();
        let picks: Vec<(usize, u32, u32)> = (0..n)
            .map(|_| {
                let r = rng.gen_range(0..total_px);
                let v = state.offsets.partition_point(|&o| o <= r) - 1;
                let local = r - state.offsets[v];
                let w = frame.views[v].camera.width as usize;
                (v, (local % w) as u32, (local / w) as u32)
            })
            .collect();
        let rays: Vec<Ray> = picks
            .iter()
            .map(|&(v, x, y)| frame.views[v].camera.ray_from_pixel([x as f64, y as f64]))
            .collect();
        let targets: Vec<RayTarget<f32>> = picks
            .iter()
            .map(|&(v, x, y)| {
                let img = &frame.views[v].image;
                let p = img.pixel(y as usize * img.width as usize + x as usize);
                RayTarget {
                    color: SmallVec::from_slice(&p[..3]),
                    alpha: p[3],
                }
            })
            .collect();

        let flut = &asset.flut;
        let forward: Vec<(RaySample<f32>, IntegrationTrace<f32>)> = rays
            .par_iter()
            .map_init(Vec::new, |segments, ray| {
                let mut trace = IntegrationTrace::default();
                let s = integrate_ray_with(live, flut, ray, &opts, Some(&mut trace), segments);
                (s, trace)
            })
            .collect();
        let (samples, traces): (Vec<_>, Vec<_>) = forward.into_iter().unzip();
        if let Some(bad) = samples
            .iter()
            .position(|s| !s.alpha.is_finite() || s.color.iter().any(|c| !c.is_finite()))
        {
            let (view, x, y) = picks[bad];
            return Err(FitError::NonFinite {
                iteration: it,
                view,
                pixel: [x, y],
            }
            .into());
        }
        let (l_rgba, ray_grads) = loss_rgba_with_grad(&samples, &targets);
        let l_vrt = loss_vrt(&live.collision_pairs, flut);
        let total = l_rgba + config.lambda_vrt as f32 * l_vrt;
        if !total.is_finite() {
            let (view, x, y) = picks[0];
            return Err(FitError::NonFinite {
                iteration: it,
                view,
                pixel: [x, y],
            }
            .into());
        }

        grad.clear();
        backward(flut, Some(live), &rays, &traces, &ray_grads, config.reduction, &mut grad);
        vrt_backward(&live.collision_pairs, flut, config.lambda_vrt as f32, &mut grad);
        opt.step(&mut asset.flut, &grad);

        let elapsed = start.elapsed().as_secs_f64();
        let last = it + 1 == config.iterations;
        let probe = if last || (config.probe_every > 0 && (it + 1) % config.probe_every == 0) {
            probe_psnr(&asset, &dataset.probes)?
        } else {
            None
        };
        let report = LossReport {
            iteration: it,
            l_rgba: l_rgba as f64,
            l_vrt: l_vrt as f64,
            total: total as f64,
            probe_psnr: probe,
            rays_per_sec: n as f64 / elapsed.max(1e-9),
        };
        progress(&report);
        reports.push(report);
    }
    Ok(FitOutcome { asset, reports })
}
