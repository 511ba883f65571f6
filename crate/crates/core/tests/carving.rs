use nvol::synth::{make_synthetic_scene, SynthSpec};
use nvol::volume::{carve_volume, CarveOptions, VoxelSet};

#[test]
fn carved_sphere_keeps_the_interior_and_trims_the_corners() {
    let mut spec = SynthSpec::sphere(32, 64, 30);
    spec.step_divisor = 8.0;
    let scene = make_synthetic_scene(&spec).unwrap();
    let carved = carve_volume(&scene.carve_views(), scene.grid, &CarveOptions::default()).unwrap();
    let full = VoxelSet::full(scene.grid);
    let kept: std::collections::HashSet<[u32; 3]> = carved.cells().iter().copied().collect();
    let core = 0.5;
    for (i, c) in full.cells().iter().enumerate() {
        let r = full.position(i).norm();
        if r < core {
            assert!(kept.contains(c), "interior cell {c:?} carved away");
        }
        if r > 1.25 {
            assert!(!kept.contains(c), "far cell {c:?} kept");
        }
    }
    assert!(carved.len() < full.len() / 2);
}
