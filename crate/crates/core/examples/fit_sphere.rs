//! Carves and fits the fuzzy-sphere synthetic scene, printing progress.
//!
//! cargo run --release -p nvol-core --example fit_sphere -- [iterations] [resolution] [image size]

use std::time::Instant;

use nvol::fit::{fit, FitConfig};
use nvol::synth::{make_synthetic_scene, SynthSpec};
use nvol::volume::{carve_volume, CarveOptions, Flut};
use nvol::Asset;

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let iterations = args.first().copied().unwrap_or(2000);
    let resolution = args.get(1).copied().unwrap_or(64) as u32;
    let size = args.get(2).copied().unwrap_or(128) as u32;

    let t = Instant::now();
    let mut spec = SynthSpec::sphere(resolution, size, 24);
    spec.holdout = 4;
    let scene = make_synthetic_scene(&spec).expect("scene");
    println!("ground truth: {:.1}s", t.elapsed().as_secs_f64());

    let voxels = carve_volume(&scene.carve_views(), scene.grid, &CarveOptions::default()).expect("carve");
    let flut = Flut::init_random(voxels.len(), 0, 3, scene.grid.cell_size(), 1).expect("flut");
    let asset = Asset::new(voxels, flut, None).expect("asset");
    println!("carved {} voxels", asset.len());

    let config = FitConfig {
        iterations,
        ..FitConfig::default()
    };
    let t = Instant::now();
    let out = fit(&scene.fit_dataset(), asset, &config, &mut |r| {
        if let Some(p) = r.probe_psnr {
            println!("it {:5}  loss {:.5}  probe {:.2} dB  {:.0} rays/s", r.iteration, r.total, p, r.rays_per_sec);
        }
    })
    .expect("fit");
    println!(
        "fit: {:.1}s, final probe PSNR {:.2} dB",
        t.elapsed().as_secs_f64(),
        out.final_probe_psnr().unwrap_or(f64::NAN)
    );
}
