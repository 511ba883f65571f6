use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::Arc;
use std::time::Instant;

use nvol::assetio::{load_clip, load_mesh, load_scene, load_skeleton, read_asset, write_asset, write_depth, PoseClip};
use nvol::fit::{FitConfig, PoseSampling, Reduction};
use nvol::geometry::{Camera, Vec3};
use nvol::render::{render_png, render_request, FrameRequest, RenderOptions};
use nvol::rigging::{bake_skinning_weights, BlendSign, Pose};
use nvol::synth::{make_synthetic_scene, random_asset, RandomAssetSpec, SynthSpec};
use nvol::volume::{build_octree, carve_volume, CarveOptions, Flut};
use nvol::{Asset, ErrorCategory, Rig};
use nvol_service::{default_orbit, orbit_camera, serve_on, AppState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::*;
use crate::report::{median, ms, CliError, StageMedians};

fn emit(g: &Global, value: serde_json::Value, text: impl FnOnce() -> String) {
    if g.json {
        println!("{value}");
    } else {
        println!("{}", text());
    }
}

pub fn carve(g: &Global, a: &CarveArgs) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let grid = scene.grid(a.resolution)?;
    let views = scene.carve_views()?;
    let opts = CarveOptions {
        dilation_radius_px: a.dilation,
        alpha_threshold: a.alpha_threshold,
        keep_unobserved: a.keep_unobserved,
    };
    let voxels = carve_volume(&views, grid, &opts).map_err(nvol::Error::from)?;
    let flut = Flut::init_random(voxels.len(), a.sh_degree, a.channels, grid.cell_size(), a.seed)
        .map_err(nvol::Error::from)?;
    let asset = Asset::new(voxels, flut, None)?;
    write_asset(&a.out, &asset)?;
    let total = (a.resolution as f64).powi(3);
    emit(
        g,
        json!({"command": "carve", "views": views.len(), "resolution": a.resolution, "voxels": asset.len(), "occupancy": asset.len() as f64 / total, "out": a.out}),
        || {
            format!(
                "carved {} of {} cells ({:.2}%) from {} views -> {}",
                asset.len(),
                total as u64,
                100.0 * asset.len() as f64 / total,
                views.len(),
                a.out.display()
            )
        },
    );
    Ok(())
}

pub fn bake(g: &Global, a: &BakeArgs) -> Result<(), CliError> {
    let asset = read_asset(&a.asset)?;
    let mesh = load_mesh(&a.mesh, a.weights.as_deref())?;
    let skeleton = load_skeleton(&a.skeleton)?;
    let sign = match a.blend_sign {
        BlendSignArg::Nearer => BlendSign::Nearer,
        BlendSignArg::Farther => BlendSign::Farther,
    };
    let weights = bake_skinning_weights(&asset.voxels, &mesh, a.neighbors, sign).map_err(nvol::Error::from)?;
    let joints = skeleton.len();
    let asset = Asset::new(asset.voxels, asset.flut, Some(Rig { skeleton, weights }))?;
    write_asset(&a.out, &asset)?;
    emit(
        g,
        json!({"command": "bake", "voxels": asset.len(), "joints": joints, "mesh_vertices": mesh.vertices.len(), "out": a.out}),
        || format!("baked weights for {} voxels over {} joints -> {}", asset.len(), joints, a.out.display()),
    );
    Ok(())
}

pub fn fit(g: &Global, a: &FitArgs) -> Result<(), CliError> {
    let scene = load_scene(&a.scene)?;
    let dataset = scene.fit_dataset()?;
    let asset = read_asset(&a.asset)?;
    let config = FitConfig {
        iterations: a.iterations,
        rays_per_batch: a.rays_per_batch,
        learning_rate: a.lr,
        density_learning_rate: a.density_lr,
        lambda_vrt: a.lambda_vrt,
        seed: a.seed,
        probe_every: a.probe_every,
        pose_sampling: match a.pose_sampling {
            PoseSamplingArg::Random => PoseSampling::Random,
            PoseSamplingArg::Cycle => PoseSampling::Cycle,
        },
        reduction: if g.fast { Reduction::Fast } else { Reduction::Deterministic },
        ..FitConfig::default()
    };
    let log_path = a.log.clone().unwrap_or_else(|| a.out.with_extension("fit.jsonl"));
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| CliError::new(ErrorCategory::Io, format!("{}: {e}", log_path.display())))?);
    let mut log_err = None;
    let start = Instant::now();
    let outcome = nvol::fit::fit(&dataset, asset, &config, &mut |r| {
        let line = serde_json::to_string(r).expect("reports serialize");
        if let Err(e) = writeln!(log, "{line}") {
            log_err.get_or_insert(e);
        }
        if r.probe_psnr.is_some() || (a.probe_every == 0 && r.iteration + 1 == a.iterations) {
            if g.json {
                println!("{line}");
            } else {
                let psnr = r.probe_psnr.map_or("-".to_string(), |p| format!("{p:.2} dB"));
                println!(
                    "iter {:>6}  l_rgba {:.5}  l_vrt {:.5}  probe {}  {:.0} rays/s",
                    r.iteration, r.l_rgba, r.l_vrt, psnr, r.rays_per_sec
                );
            }
        }
    })?;
    log.flush()?;
    if let Some(e) = log_err {
        return Err(e.into());
    }
    write_asset(&a.out, &outcome.asset)?;
    let psnr = outcome.final_probe_psnr();
    emit(
        g,
        json!({"command": "fit", "iterations": a.iterations, "seconds": start.elapsed().as_secs_f64(), "probe_psnr": psnr, "out": a.out, "log": log_path}),
        || {
            format!(
                "fit {} iterations in {:.1}s, probe PSNR {} -> {}",
                a.iterations,
                start.elapsed().as_secs_f64(),
                psnr.map_or("n/a".into(), |p| format!("{p:.2} dB")),
                a.out.display()
            )
        },
    );
    Ok(())
}

fn build_camera(c: &CameraArgs, asset: &Asset) -> Result<Camera, CliError> {
    if let Some(scene) = &c.scene {
        let m = load_scene(scene)?;
        let cam = m.cameras.get(c.camera).ok_or_else(|| {
            CliError::invalid(format!("camera {} of {} in {}", c.camera, m.cameras.len(), scene.display()))
        })?;
        return Ok(match (c.width, c.height) {
            (None, None) => cam.clone(),
            (w, h) => cam.resized(w.unwrap_or(cam.width), h.unwrap_or(cam.height)),
        });
    }
    let mut o = default_orbit(asset);
    o.azimuth = c.azimuth.unwrap_or(o.azimuth);
    o.elevation = c.elevation.unwrap_or(o.elevation);
    o.radius = c.radius.unwrap_or(o.radius);
    if let Some(t) = c.target {
        o.target = t;
    }
    Ok(orbit_camera(
        &o,
        c.fov,
        c.width.unwrap_or(nvol_service::DEFAULT_SIZE),
        c.height.unwrap_or(nvol_service::DEFAULT_SIZE),
    )?)
}

fn render_options(o: &RenderOptionArgs) -> RenderOptions {
    RenderOptions {
        lambda_th: o.lambda_th,
        early_stop: !o.no_early_stop,
        background: o.background,
        ..RenderOptions::default()
    }
}

fn clip_pose(clip: &PoseClip, frame: usize) -> Result<Pose, CliError> {
    clip.frames
        .get(frame)
        .cloned()
        .ok_or_else(|| CliError::invalid(format!("frame {frame} of a {}-frame clip", clip.frames.len())))
}

pub fn render(g: &Global, a: &RenderArgs) -> Result<(), CliError> {
    let asset = read_asset(&a.asset)?;
    let pose = match &a.clip {
        Some(p) => Some(clip_pose(&load_clip(p)?, a.frame)?),
        None => None,
    };
    let req = FrameRequest {
        pose,
        camera: build_camera(&a.camera, &asset)?,
        options: render_options(&a.options),
        scale: a.options.scale,
    };
    let (png, fb, t) = render_png(&asset, &req)?;
    nvol::assetio::write_file(&a.out, &png)?;
    if let Some(d) = &a.depth {
        write_depth(d, fb.width, fb.height, &fb.depth)?;
    }
    emit(
        g,
        json!({"command": "render", "out": a.out, "width": fb.width, "height": fb.height, "ms": {"warp": ms(t.warp), "build_octree": ms(t.build_octree), "volume_render": ms(t.volume_render), "total": ms(t.total())}}),
        || format!("rendered {}x{} in {:.2} ms -> {}", fb.width, fb.height, ms(t.total()), a.out.display()),
    );
    Ok(())
}

pub fn animate(g: &Global, a: &AnimateArgs) -> Result<(), CliError> {
    let asset = read_asset(&a.asset)?;
    let clip = load_clip(&a.clip)?;
    let camera = build_camera(&a.camera, &asset)?;
    let options = render_options(&a.options);
    std::fs::create_dir_all(&a.out_dir)?;
    let request = |i: usize| FrameRequest {
        pose: Some(clip.frames[i % clip.frames.len()].clone()),
        camera: camera.clone(),
        options: options.clone(),
        scale: a.options.scale,
    };
    for i in 0..clip.frames.len() {
        let (png, _, _) = render_png(&asset, &request(i))?;
        nvol::assetio::write_file(&a.out_dir.join(format!("frame_{i:04}.png")), &png)?;
    }
    for i in 0..a.warmup {
        render_request(&asset, &request(i))?;
    }
    let mut timings = Vec::with_capacity(a.timed_frames);
    for i in 0..a.timed_frames {
        timings.push(render_request(&asset, &request(i))?.1);
    }
    let med = StageMedians::from_timings(&timings);
    if a.timed_frames < 20 {
        log::warn!("medians over {} frames; at least 20 are recommended", a.timed_frames);
    }
    emit(
        g,
        json!({"command": "animate", "frames_written": clip.frames.len(), "out_dir": a.out_dir, "timing": med.to_json()}),
        || format!("wrote {} frames to {}\n{}", clip.frames.len(), a.out_dir.display(), med.table()),
    );
    Ok(())
}

pub fn bench(g: &Global, a: &BenchArgs) -> Result<(), CliError> {
    if a.repeats == 0 || a.threads_list.is_empty() || a.threads_list.contains(&0) {
        return Err(CliError::invalid("repeats and thread counts must be positive"));
    }
    let asset = random_asset(&RandomAssetSpec {
        resolution: a.resolution,
        voxels: a.voxels,
        sh_degree: 2,
        channels: 3,
        joints: a.joints.max(1),
        seed: a.seed,
    })?;
    let cells = asset.voxels.cells();
    let idx: Vec<u32> = (0..cells.len() as u32).collect();

    // Octree build sweep.
    let mut sweep = Vec::new();
    for &t in &a.threads_list {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::new(ErrorCategory::Io, e.to_string()))?;
        let mut times: Vec<f64> = pool.install(|| {
            (0..a.repeats)
                .map(|_| {
                    let s = Instant::now();
                    let o = build_octree(asset.grid(), cells, &idx).expect("random cells are valid");
                    std::hint::black_box(o);
                    s.elapsed().as_secs_f64()
                })
                .collect::<Vec<_>>()
        });
        let secs = median(&mut times);
        sweep.push((t, secs, cells.len() as f64 / secs));
    }
    let base = sweep[0].2;

    // Per-frame stages with random poses.
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x5eed);
    let camera = orbit_camera(&default_orbit(&asset), nvol_service::DEFAULT_FOV_Y, a.render_size, a.render_size)?;
    let joints = asset.joint_count();
    let frame = |rng: &mut ChaCha8Rng| -> Result<nvol::render::StageTimings, CliError> {
        let mut r = || Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        let pose = Pose::new((0..joints).map(|_| r()).collect(), Vec3::zeros(), Vec3::zeros())?;
        Ok(render_request(&asset, &FrameRequest::new(Some(pose), camera.clone()))?.1)
    };
    frame(&mut rng)?;
    let timings = (0..a.repeats).map(|_| frame(&mut rng)).collect::<Result<Vec<_>, _>>()?;
    let med = StageMedians::from_timings(&timings);
    let rays_per_sec = (a.render_size as f64).powi(2) / (med.volume_render / 1e3);

    if g.json {
        println!(
            "{}",
            json!({
                "command": "bench",
                "voxels": cells.len(),
                "octree_build": sweep.iter().map(|(t, s, r)| json!({"threads": t, "median_ms": s * 1e3, "voxels_per_sec": r, "speedup": r / base})).collect::<Vec<_>>(),
                "frame": med.to_json(),
                "render_rays_per_sec": rays_per_sec,
                "gpu_reference_ms": {"build_octree": 7.990, "total": 27.43},
            })
        );
    } else {
        println!("octree build, {} voxels (median of {} runs)", cells.len(), a.repeats);
        println!("threads    median ms    voxels/s      speedup");
        for (t, s, r) in &sweep {
            println!("{t:>7} {:>12.3} {:>12.3e} {:>10.2}x", s * 1e3, r, r / base);
        }
        println!();
        println!("per-frame stages, {0}x{0} frame, random poses", a.render_size);
        println!("{}", med.table());
        println!("render throughput {rays_per_sec:.3e} rays/s");
        println!("GPU reference (RTX-class, not comparable): build-octree 7.990 ms, total 27.43 ms");
    }
    Ok(())
}

pub fn serve(g: &Global, a: &ServeArgs) -> Result<(), CliError> {
    let app = Arc::new(AppState::load(&a.asset, g.threads)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.bind).await?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        serve_on(listener, app, a.ui_dir.clone(), async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok::<(), CliError>(())
    })
}

fn capsule_poses(n: usize) -> Result<Vec<Pose>, CliError> {
    (0..n)
        .map(|i| {
            let bend = 0.5 * (i + 1) as f64;
            Ok(Pose::new(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, bend)], Vec3::zeros(), Vec3::zeros())?)
        })
        .collect()
}

pub fn synth(g: &Global, a: &SynthArgs) -> Result<(), CliError> {
    let mut spec = match a.kind {
        SynthKind::Sphere => SynthSpec::sphere(a.resolution, a.image_size, a.views),
        SynthKind::Capsule => SynthSpec::capsule(a.resolution, a.image_size, a.views, capsule_poses(a.poses)?),
    };
    spec.holdout = a.holdout;
    spec.step_divisor = a.step_divisor;
    let start = Instant::now();
    let scene = make_synthetic_scene(&spec)?;
    let path = scene.write(&a.out_dir, &a.stem)?;
    emit(
        g,
        json!({"command": "synth", "scene": path, "frames": scene.frames.len(), "views": a.views, "seconds": start.elapsed().as_secs_f64()}),
        || format!("wrote {} ({} frames x {} views)", path.display(), scene.frames.len(), a.views),
    );
    Ok(())
}

