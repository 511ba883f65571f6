//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p nvol-suite --test acceptance`. Set
//! `NVOL_ACCEPT=name,name` to run a subset.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use nvol::assetio::{encode_depth, load_asset, save_asset};
use nvol::fit::{backward, fit, loss_vrt, psnr, FitConfig, GradBuffer, PoseSampling, RayGradient, Reduction};
use nvol::geometry::{Camera, Ray, Vec3, SH_C0};
use nvol::render::{integrate_ray, render_frame, render_png, FrameRequest, IntegrationTrace, LiveVolume, RenderOptions};
use nvol::rigging::{bake_skinning_weights, warp_voxels, BlendSign, Pose, SkinnedMesh};
use nvol::synth::{
    march_image, march_ray, make_synthetic_scene, random_asset, random_cells, Field, FuzzySphere, RandomAssetSpec,
    SynthSpec, SyntheticScene, VoxelGridField,
};
use nvol::volume::{build_octree, carve_volume, CarveOptions, Flut, GridSpec, VoxelSet};
use nvol::{Asset, Rig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn unit_ray(rng: &mut ChaCha8Rng, reach: f64) -> Ray {
    let o = Vec3::new(rng.gen_range(-reach..reach), rng.gen_range(-reach..reach), rng.gen_range(-reach..reach));
    let o = o.normalize() * reach;
    let target = Vec3::new(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
    Ray::through(o, target - o).unwrap()
}

fn random_flut(rng: &mut ChaCha8Rng, len: usize, degree: u8, channels: u8, sigma: (f64, f64)) -> Flut<f64> {
    let coeffs = (degree as usize + 1).pow(2) * channels as usize;
    let data = (0..len)
        .flat_map(|_| {
            let mut e: Vec<f64> = (0..coeffs).map(|_| rng.gen_range(-1.0..1.0)).collect();
            e.push(rng.gen_range(sigma.0..sigma.1));
            e
        })
        .collect();
    Flut::from_data(degree, channels, data).unwrap()
}

fn no_early_stop() -> RenderOptions {
    RenderOptions {
        early_stop: false,
        ..RenderOptions::default()
    }
}

// ---------------------------------------------------------------- gradients

/// `sum_r g_r . (F_r, A_r)` for a fixed set of upstream gradients.
fn objective(live: &LiveVolume, flut: &Flut<f64>, rays: &[Ray], grads: &[RayGradient<f64>]) -> f64 {
    rays.iter()
        .zip(grads)
        .map(|(r, g)| {
            let s = integrate_ray(live, flut, r, &no_early_stop(), None);
            s.color.iter().zip(&g.color).map(|(a, b)| a * b).sum::<f64>() + s.alpha * g.alpha
        })
        .sum()
}

fn analytic<S: nvol::Real>(live: &LiveVolume, flut: &Flut<S>, rays: &[Ray], grads: &[RayGradient<S>]) -> Vec<f64> {
    let traces: Vec<_> = rays
        .iter()
        .map(|r| {
            let mut t = IntegrationTrace::default();
            integrate_ray(live, flut, r, &no_early_stop(), Some(&mut t));
            t
        })
        .collect();
    let mut g = GradBuffer::for_flut(flut);
    backward(flut, Some(live), rays, &traces, grads, Reduction::Deterministic, &mut g);
    g.data().iter().map(|v| v.to_f64().unwrap()).collect()
}

fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    let err: f64 = got.iter().zip(want).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = want.iter().map(|b| b * b).sum();
    (err / norm).sqrt()
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let (mut worst64, mut worst32) = (0.0f64, 0.0f64);
    let mut params = 0;
    for scene in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + scene);
        let grid = GridSpec::cube(4, [0.0; 3], 2.0).unwrap();
        let p = rng.gen_range(0.2..0.8);
        let mut cells: Vec<[u32; 3]> = VoxelSet::full(grid).cells().iter().copied().filter(|_| rng.gen_bool(p)).collect();
        if cells.is_empty() {
            cells.push([1, 2, 1]);
        }
        let voxels = VoxelSet::new(grid, cells).unwrap();
        let live = LiveVolume::canonical(&voxels).unwrap();
        let degree = (scene % 3) as u8;
        let flut = random_flut(&mut rng, voxels.len(), degree, 3, (0.1, 3.0));
        let rays: Vec<Ray> = (0..12).map(|_| unit_ray(&mut rng, 3.0)).collect();
        let grads: Vec<RayGradient<f64>> = rays
            .iter()
            .map(|_| RayGradient {
                color: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                alpha: rng.gen_range(-1.0..1.0),
            })
            .collect();

        let h = 1e-5;
        let fd: Vec<f64> = (0..flut.data().len())
            .map(|k| {
                let mut a = flut.clone();
                let mut b = flut.clone();
                a.data_mut()[k] += h;
                b.data_mut()[k] -= h;
                (objective(&live, &a, &rays, &grads) - objective(&live, &b, &rays, &grads)) / (2.0 * h)
            })
            .collect();
        params += fd.len();
        if fd.iter().all(|v| *v == 0.0) {
            continue;
        }
        worst64 = worst64.max(relative_error(&analytic(&live, &flut, &rays, &grads), &fd));
        let flut32 = flut.cast::<f32>();
        let grads32: Vec<RayGradient<f32>> = grads
            .iter()
            .map(|g| RayGradient {
                color: g.color.iter().map(|v| *v as f32).collect(),
                alpha: g.alpha as f32,
            })
            .collect();
        worst32 = worst32.max(relative_error(&analytic(&live, &flut32, &rays, &grads32), &fd));
    }
    let t = start.elapsed();
    outcome(
        worst64 <= 1e-6 && worst32 <= 1e-3 && t <= Duration::from_secs(120),
        format!(
            "100 scenes, {params} parameters; worst relative error f64 {worst64:.2e} (<= 1e-6), f32 {worst32:.2e} (<= 1e-3); {}",
            secs(t)
        ),
    )
}

// ---------------------------------------------------------------- traversal

/// Cell-by-cell walk of a uniform grid, visiting every cell the ray enters
/// in order. Returns occupied cells with their `[t_in, t_out)` spans.
fn dda_walk(grid: &GridSpec, occupied: &HashMap<[u32; 3], u32>, ray: &Ray) -> Vec<(u32, f64, f64)> {
    let n = grid.resolution() as i64;
    let min = grid.min();
    let max = grid.max();
    let h = grid.cell_size_vec();
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for a in 0..3 {
        let d = ray.direction[a];
        if d == 0.0 {
            if ray.origin[a] < min[a] || ray.origin[a] >= max[a] {
                return Vec::new();
            }
            continue;
        }
        let ta = (min[a] - ray.origin[a]) / d;
        let tb = (max[a] - ray.origin[a]) / d;
        t0 = t0.max(ta.min(tb));
        t1 = t1.min(ta.max(tb));
    }
    if t0 >= t1 {
        return Vec::new();
    }
    let p = ray.at(t0 + 1e-12 * (t1 - t0));
    let mut cell = [0i64; 3];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        cell[a] = (((p[a] - min[a]) / h[a]).floor() as i64).clamp(0, n - 1);
        let d = ray.direction[a];
        if d > 0.0 {
            step[a] = 1;
            t_max[a] = (min[a] + (cell[a] + 1) as f64 * h[a] - ray.origin[a]) / d;
            t_delta[a] = h[a] / d;
        } else if d < 0.0 {
            step[a] = -1;
            t_max[a] = (min[a] + cell[a] as f64 * h[a] - ray.origin[a]) / d;
            t_delta[a] = -h[a] / d;
        }
    }
    let mut out = Vec::new();
    let mut t = t0;
    loop {
        let a = (0..3).min_by(|&x, &y| t_max[x].total_cmp(&t_max[y])).unwrap();
        let exit = t_max[a].min(t1);
        let key = [cell[0] as u32, cell[1] as u32, cell[2] as u32];
        if let Some(&i) = occupied.get(&key) {
            out.push((i, t, exit));
        }
        if t_max[a] >= t1 {
            break;
        }
        t = t_max[a];
        cell[a] += step[a];
        if cell[a] < 0 || cell[a] >= n {
            break;
        }
        t_max[a] += t_delta[a];
    }
    out
}

fn traversal_oracle() -> Outcome {
    let start = Instant::now();
    let mut mismatched = 0;
    let mut worst = 0.0f64;
    let mut hits = 0usize;
    for occ in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + occ);
        let size = rng.gen_range(0.5..4.0);
        let center = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let grid = GridSpec::cube(32, center, size).unwrap();
        let p = [0.02, 0.1, 0.3, 0.6][occ as usize % 4];
        let cells: Vec<[u32; 3]> = VoxelSet::full(grid).cells().iter().copied().filter(|_| rng.gen_bool(p)).collect();
        let voxels = VoxelSet::new(grid, cells).unwrap();
        let occupied: HashMap<[u32; 3], u32> =
            voxels.cells().iter().enumerate().map(|(i, c)| (*c, i as u32)).collect();
        let live = LiveVolume::canonical(&voxels).unwrap();
        let c = grid.center();
        for r in 0..100 {
            let ray = if r % 5 == 0 {
                // Starts inside the grid.
                let o = c + Vec3::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)) * size;
                let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                Ray::through(o, d).unwrap()
            } else {
                let mut u = unit_ray(&mut rng, 1.0);
                u.origin = c + u.origin * (1.5 * size);
                let target = c + Vec3::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)) * size;
                Ray::through(u.origin, target - u.origin).unwrap()
            };
            let got = live.octree.traverse_ray(&ray, 0.0, f64::INFINITY);
            let want = dda_walk(&grid, &occupied, &ray);
            hits += want.len();
            let same = got.len() == want.len() && got.iter().zip(&want).all(|(g, w)| g.flut_index == w.0);
            if !same {
                mismatched += 1;
                continue;
            }
            let sg: f64 = got.iter().map(|s| s.length()).sum();
            let sw: f64 = want.iter().map(|w| w.2 - w.1).sum();
            worst = worst.max((sg - sw).abs());
        }
    }
    let t = start.elapsed();
    outcome(
        mismatched == 0 && worst <= 1e-5 && t <= Duration::from_secs(30),
        format!(
            "1000 rays, {hits} occupied crossings; {mismatched} sequence mismatches; worst |sum delta| error {worst:.2e} (<= 1e-5); {}",
            secs(t)
        ),
    )
}

// -------------------------------------------------------------- integration

fn integration_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_early = 0.0f64;
    let mut stopped = 0;
    let mut rays_done = 0;
    for scene in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + scene);
        let grid = GridSpec::cube(16, [0.0; 3], 2.0).unwrap();
        let p = rng.gen_range(0.2..0.6);
        let cells: Vec<[u32; 3]> = VoxelSet::full(grid).cells().iter().copied().filter(|_| rng.gen_bool(p)).collect();
        let voxels = VoxelSet::new(grid, cells).unwrap();
        let flut = random_flut(&mut rng, voxels.len(), (scene % 3) as u8, 3, (0.0, 12.0));
        let field = VoxelGridField::new(&voxels, &flut);
        let live = LiveVolume::canonical(&voxels).unwrap();
        let rays: Vec<Ray> = (0..100).map(|_| unit_ray(&mut rng, 3.0)).collect();
        let marched: Vec<_> = {
            use rayon::prelude::*;
            rays.par_iter().map(|r| march_ray(&field, &r.origin, &r.direction, 1e-5)).collect()
        };
        for (ray, m) in rays.iter().zip(&marched) {
            let full = integrate_ray(&live, &flut, ray, &no_early_stop(), None);
            for c in 0..3 {
                worst = worst.max((full.color[c] - m.color[c]).abs());
            }
            worst = worst.max((full.alpha - m.alpha).abs());
            let mut trace = IntegrationTrace::default();
            let early = integrate_ray(&live, &flut, ray, &RenderOptions::default(), Some(&mut trace));
            let mut all = IntegrationTrace::default();
            integrate_ray(&live, &flut, ray, &no_early_stop(), Some(&mut all));
            if trace.hits.len() < all.hits.len() {
                stopped += 1;
            }
            worst_early = worst_early.max((early.alpha - full.alpha).abs());
            rays_done += 1;
        }
    }
    let lambda = RenderOptions::default().lambda_th;
    outcome(
        worst <= 1e-3 && worst_early <= 0.01 && lambda == 0.01,
        format!(
            "{rays_done} rays vs dense marcher: worst per-channel error {worst:.2e} (<= 1e-3); early stop at lambda_th {lambda} ended {stopped} rays early, worst alpha deviation {worst_early:.2e} (<= 0.01); {}",
            secs(start.elapsed())
        ),
    )
}

// ------------------------------------------------------------ synthetic fit

/// PSNR of the analytic sphere voxelized onto the scene grid (cell-mean
/// density from 4^3 subsamples, cell-center color) and rendered by the
/// dense marcher, against the held-out ground truth. Frozen on first run.
const VOXELIZED_ORACLE_PSNR: f64 = 44.474;

fn voxelized_sphere(grid: &GridSpec) -> (VoxelSet, Flut<f64>) {
    let sphere = FuzzySphere::default();
    let h = grid.cell_size();
    let mut cells = Vec::new();
    let mut data = Vec::new();
    for cell in VoxelSet::full(*grid).cells() {
        let c = grid.cell_center(*cell);
        let mut sum = 0.0;
        for s in 0..64 {
            let o = Vec3::new((s % 4) as f64, ((s / 4) % 4) as f64, (s / 16) as f64);
            sum += sphere.density(&(c + (o.add_scalar(0.5) / 4.0).add_scalar(-0.5) * h));
        }
        if sum > 0.0 {
            cells.push(*cell);
            let col = sphere.color(&c, &Vec3::z());
            data.extend(col.iter().map(|v| v / SH_C0));
            data.push(sum / 64.0);
        }
    }
    (VoxelSet::new(*grid, cells).unwrap(), Flut::from_data(0, 3, data).unwrap())
}

fn synthetic_fit() -> Outcome {
    let start = Instant::now();
    let mut spec = SynthSpec::sphere(64, 128, 24);
    spec.holdout = 4;
    let scene = make_synthetic_scene(&spec).unwrap();

    let (voxels, flut) = voxelized_sphere(&scene.grid);
    let field = VoxelGridField::new(&voxels, &flut);
    let step = scene.grid.cell_size() / 16.0;
    let baseline = scene
        .holdout_cameras
        .iter()
        .map(|&i| psnr(&march_image(&field, &scene.cameras[i], step).data, &scene.frames[0].images[i].data))
        .sum::<f64>()
        / scene.holdout_cameras.len() as f64;

    let carved = carve_volume(&scene.carve_views(), scene.grid, &CarveOptions::default()).unwrap();
    let flut = Flut::init_random(carved.len(), 0, 3, scene.grid.cell_size(), 1).unwrap();
    let asset = Asset::new(carved, flut, None).unwrap();
    let voxel_count = asset.len();
    let config = FitConfig {
        iterations: 2000,
        probe_every: 0,
        ..FitConfig::default()
    };
    let out = fit(&scene.fit_dataset(), asset, &config, &mut |_| {}).unwrap();
    let held_out = out.final_probe_psnr().unwrap();
    let t = start.elapsed();
    let frozen = (baseline - VOXELIZED_ORACLE_PSNR).abs() < 0.01;
    outcome(
        held_out >= 28.0 && frozen && t <= Duration::from_secs(900),
        format!(
            "64^3 grid, {voxel_count} carved voxels, 20 train / 4 held-out at 128^2, 2000 iterations: held-out PSNR {held_out:.2} dB (>= 28); voxelized-field oracle {baseline:.3} dB (frozen {VOXELIZED_ORACLE_PSNR:.3}); {}",
            secs(t)
        ),
    )
}

// ------------------------------------------------------------ VRT ablation

fn fold_pose() -> Pose {
    Pose::new(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 2.8)], Vec3::zeros(), Vec3::zeros()).unwrap()
}

/// Carves the scene's canonical views and skins the voxels from its mesh.
fn rig_carved(scene: &SyntheticScene, sh_degree: u8) -> Asset {
    let voxels = carve_volume(&scene.carve_views(), scene.grid, &CarveOptions::default()).unwrap();
    let mesh_file = scene.mesh.clone().unwrap();
    let mesh = SkinnedMesh::new(mesh_file.vertices.iter().map(|v| Vec3::from(*v)).collect(), mesh_file.weights).unwrap();
    let weights = bake_skinning_weights(&voxels, &mesh, 4, BlendSign::Nearer).unwrap();
    let flut = Flut::init_random(voxels.len(), sh_degree, 3, scene.grid.cell_size(), 5).unwrap();
    let rig = Rig {
        skeleton: scene.skeleton.clone().unwrap(),
        weights,
    };
    Asset::new(voxels, flut, Some(rig)).unwrap()
}

fn vrt_ablation() -> Outcome {
    let start = Instant::now();
    let scene = make_synthetic_scene(&SynthSpec::capsule(32, 64, 16, vec![fold_pose()])).unwrap();
    let asset = rig_carved(&scene, 1);
    let dataset = scene.fit_dataset();
    let mut l1 = Vec::new();
    let mut pairs = 0;
    for lambda_vrt in [0.0, 0.01] {
        let config = FitConfig {
            iterations: 400,
            lambda_vrt,
            pose_sampling: PoseSampling::Cycle,
            probe_every: 0,
            ..FitConfig::default()
        };
        let out = fit(&dataset, asset.clone(), &config, &mut |_| {}).unwrap();
        let (live, _) = nvol::render::pose_asset(&out.asset, Some(&fold_pose())).unwrap();
        pairs = live.collision_pairs.len();
        l1.push(loss_vrt(&live.collision_pairs, &out.asset.flut) as f64);
    }
    outcome(
        pairs > 0 && l1[1] < l1[0],
        format!(
            "fold-over capsule, {} voxels, {pairs} collision pairs: mean pair feature L1 {:.5} with lambda_vrt 0.01 vs {:.5} without; {}",
            asset.len(),
            l1[1],
            l1[0],
            secs(start.elapsed())
        ),
    )
}

// ----------------------------------------------------------------- rigging

fn rigging_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let mut worst_identity = 0.0f64;
    let mut worst_distance = 0.0f64;
    for k in 0..10u64 {
        let asset = random_asset(&RandomAssetSpec {
            resolution: 32,
            voxels: 3000,
            sh_degree: 1,
            channels: 3,
            joints: 1 + k as usize % 6,
            seed: 4100 + k,
        })
        .unwrap();
        let rig = asset.rig.as_ref().unwrap();
        let h = asset.grid().cell_size();
        let j = rig.skeleton.len();
        let identity = Pose::new(vec![Vec3::zeros(); j], Vec3::zeros(), Vec3::zeros()).unwrap();
        let w = warp_voxels(&asset.voxels, &rig.weights, &rig.skeleton, &identity).unwrap();
        for (i, p) in w.positions.iter().enumerate() {
            worst_identity = worst_identity.max((p - asset.voxels.position(i)).norm() / h);
        }
        let rot = Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let trans = Vec3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        let rigid = Pose::new(vec![Vec3::zeros(); j], rot, trans).unwrap();
        let w = warp_voxels(&asset.voxels, &rig.weights, &rig.skeleton, &rigid).unwrap();
        for _ in 0..2000 {
            let a = rng.gen_range(0..asset.len());
            let b = rng.gen_range(0..asset.len());
            let before = (asset.voxels.position(a) - asset.voxels.position(b)).norm();
            let after = (w.positions[a] - w.positions[b]).norm();
            worst_distance = worst_distance.max((after - before).abs());
        }
    }

    // Grid-aligned rigid motions moved together with the camera. Cells stay
    // away from the border so every motion keeps them inside the grid.
    let grid = GridSpec::cube(16, [0.0; 3], 2.0).unwrap();
    let cells: Vec<[u32; 3]> = VoxelSet::full(grid)
        .cells()
        .iter()
        .copied()
        .filter(|c| c.iter().all(|v| (4..12).contains(v)) && rng.gen_bool(0.4))
        .collect();
    let voxels = VoxelSet::new(grid, cells).unwrap();
    let flut = random_flut(&mut rng, voxels.len(), 2, 3, (0.5, 6.0)).cast::<f32>();
    let asset = Asset::new(voxels, flut, None).unwrap();
    let h = asset.grid().cell_size();
    let cam = Camera::look_at(Vec3::new(2.3, -2.9, 1.4), Vec3::new(0.03, -0.02, 0.05), Vec3::z(), 0.9, 64, 48).unwrap();
    let opts = RenderOptions::default();
    let (reference, _) = render_frame(&asset, None, &cam, &opts).unwrap();
    use std::f64::consts::{FRAC_PI_2, PI};
    let motions = [
        (Vec3::new(0.0, 0.0, FRAC_PI_2), Vec3::new(h, 0.0, 0.0)),
        (Vec3::new(PI, 0.0, 0.0), Vec3::new(2.0 * h, -h, 3.0 * h)),
        (Vec3::new(0.0, -FRAC_PI_2, PI), Vec3::new(0.0, 4.0 * h, -h)),
    ];
    let covered = reference.alpha.iter().filter(|a| **a > 0.5).count();
    let mut worst_render = 0.0f32;
    for (rot, trans) in motions {
        let pose = Pose::rigid(1, rot, trans);
        let (fb, _) = render_frame(&asset, Some(&pose), &cam.followed_by(&pose.global_transform()), &opts).unwrap();
        for (a, b) in fb.color.iter().zip(&reference.color).chain(fb.alpha.iter().zip(&reference.alpha)) {
            worst_render = worst_render.max((a - b).abs());
        }
    }
    outcome(
        worst_identity < 1e-6 && worst_distance <= 1e-5 && worst_render <= 1e-3 && covered > 0,
        format!(
            "identity warp max displacement {worst_identity:.1e} cells (< 1e-6); rigid warp pairwise distance error {worst_distance:.1e} (<= 1e-5); equivariant render error {worst_render:.1e} (<= 1e-3) over {covered} covered pixels; {}",
            secs(start.elapsed())
        ),
    )
}

// ------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let start = Instant::now();
    let poses = vec![
        Pose::new(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 0.6)], Vec3::zeros(), Vec3::zeros()).unwrap(),
        fold_pose(),
    ];
    let mut spec = SynthSpec::capsule(32, 48, 10, poses.clone());
    spec.holdout = 2;
    spec.step_divisor = 8.0;
    let scene = make_synthetic_scene(&spec).unwrap();
    let asset = rig_carved(&scene, 0);
    let dataset = scene.fit_dataset();
    let camera = Camera::orbit(0.4, 0.3, 3.0, Vec3::zeros(), 0.7, 96, 80).unwrap();
    let config = FitConfig {
        iterations: 30,
        rays_per_batch: 2048,
        reduction: Reduction::Deterministic,
        probe_every: 10,
        ..FitConfig::default()
    };
    let mut fits = Vec::new();
    let mut renders = Vec::new();
    for threads in [2, 2, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let (fitted, frame) = pool.install(|| {
            let out = fit(&dataset, asset.clone(), &config, &mut |_| {}).unwrap();
            let req = FrameRequest::new(Some(poses[0].clone()), camera.clone());
            let (png, fb, _) = render_png(&out.asset, &req).unwrap();
            let depth = encode_depth(fb.width, fb.height, &fb.depth).unwrap();
            (save_asset(&out.asset).unwrap(), (png, depth))
        });
        fits.push(fitted);
        renders.push(frame);
    }
    let f = fits.iter().filter(|x| **x != fits[0]).count();
    let r = renders.iter().filter(|x| **x != renders[0]).count();
    outcome(
        f == 0 && r == 0,
        format!(
            "fit ({} voxels, 30 iterations) and render at 2 (twice), 4 and 8 threads: {f} differing saved assets, {r} differing PNG/depth outputs; {}",
            asset.len(),
            secs(start.elapsed())
        ),
    )
}

// ------------------------------------------------------------------ octree

fn median_build(pool: &rayon::ThreadPool, grid: &GridSpec, cells: &[[u32; 3]], idx: &[u32], repeats: usize) -> f64 {
    let mut times: Vec<f64> = pool.install(|| {
        (0..repeats)
            .map(|_| {
                let s = Instant::now();
                let o = build_octree(grid, cells, idx).unwrap();
                std::hint::black_box(&o);
                s.elapsed().as_secs_f64()
            })
            .collect()
    });
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn octree_throughput() -> Outcome {
    let grid = GridSpec::cube(256, [0.0; 3], 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let cells = random_cells(&mut rng, 256, 1_000_000);
    let idx: Vec<u32> = (0..cells.len() as u32).collect();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let t1 = median_build(&pool(1), &grid, &cells, &idx, 7);
    let t8 = median_build(&pool(8), &grid, &cells, &idx, 7);
    let rate = cells.len() as f64 / t8;
    let scaling = t1 / t8;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        rate >= 1e6 && scaling >= 3.0,
        format!(
            "1M voxels at 256^3: 8 threads {:.1} ms ({rate:.2e} voxels/s, >= 1e6); 1 -> 8 thread scaling {scaling:.2}x (>= 3) on a host with {cores} hardware thread(s); GPU reference figure ~10 ms for millions of voxels, not comparable",
            t8 * 1e3
        ),
    )
}

// --------------------------------------------------------------- round trip

fn asset_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6000);
    let mut failures = 0;
    let mut bytes_total = 0;
    for k in 0..100u64 {
        let spec = RandomAssetSpec {
            resolution: 1 << rng.gen_range(1..7),
            voxels: rng.gen_range(1..3000),
            sh_degree: rng.gen_range(0..=4),
            channels: rng.gen_range(1..=4),
            joints: rng.gen_range(0..10),
            seed: 6100 + k,
        };
        let a = random_asset(&spec).unwrap();
        let bytes = save_asset(&a).unwrap();
        bytes_total += bytes.len();
        let ok = match load_asset(&bytes) {
            Ok(b) => {
                a.voxels == b.voxels
                    && a.flut.sh_degree() == b.flut.sh_degree()
                    && a.flut.channels() == b.flut.channels()
                    && a.flut.data().iter().zip(b.flut.data()).all(|(x, y)| x.to_bits() == y.to_bits())
                    && a.flut.data().len() == b.flut.data().len()
                    && a.rig == b.rig
                    && save_asset(&b).unwrap() == bytes
            }
            Err(_) => false,
        };
        failures += usize::from(!ok);
    }
    outcome(
        failures == 0,
        format!("100 random assets ({bytes_total} bytes total): {failures} not bit-exact after load(save(x))"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("gradient-oracle", gradient_oracle),
        ("traversal-oracle", traversal_oracle),
        ("integration-oracle", integration_oracle),
        ("synthetic-fit", synthetic_fit),
        ("vrt-ablation", vrt_ablation),
        ("rigging-invariants", rigging_invariants),
        ("determinism", determinism),
        ("octree-throughput", octree_throughput),
        ("asset-round-trip", asset_round_trip),
    ];
    let only: Option<Vec<String>> =
        std::env::var("NVOL_ACCEPT").ok().map(|v| v.split(',').map(|s| s.trim().to_string()).collect());
    if std::env::args().any(|a| a == "--list") {
        for (name, _) in criteria {
            println!("{name}: test");
        }
        return;
    }
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    println!();
    for (name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|n| n == name)) || (!args.is_empty() && !args.iter().any(|a| name.contains(a.as_str()))) {
            continue;
        }
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!("{} {name:<20} {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        if !result.pass {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        println!("\n{} criterion(s) failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
