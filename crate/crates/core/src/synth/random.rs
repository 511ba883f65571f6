//! Randomized assets for benchmarks and round-trip checks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asset::{Asset, Rig};
use crate::geometry::{RigidTransform, Vec3};
use crate::rigging::{Joint, SkinWeights, Skeleton};
use crate::volume::{Flut, GridSpec, VoxelSet};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomAssetSpec {
    pub resolution: u32,
    pub voxels: usize,
    pub sh_degree: u8,
    pub channels: u8,
    /// 0 gives an unrigged asset.
    pub joints: usize,
    pub seed: u64,
}

/// `count` distinct random cells of an `n^3` grid, in random order.
pub fn random_cells(rng: &mut impl Rng, n: u32, count: usize) -> Vec<[u32; 3]> {
    let total = (n as usize).pow(3);
    let n = n as usize;
    sample(rng, total, count.min(total))
        .into_iter()
        .map(|i| [(i % n) as u32, ((i / n) % n) as u32, (i / (n * n)) as u32])
        .collect()
}

pub fn random_skeleton(rng: &mut impl Rng, joints: usize) -> Result<Skeleton, Error> {
    let joints = (0..joints)
        .map(|j| {
            let q = nalgebra::UnitQuaternion::from_euler_angles(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-3.0..3.0),
            );
            let t = Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            Joint {
                name: format!("joint_{j}"),
                parent: (j > 0).then(|| rng.gen_range(0..j)),
                bind_local: RigidTransform::new(q, t),
            }
        })
        .collect();
    Ok(Skeleton::new(joints)?)
}

/// Up to four random joints per voxel with weights normalized in f32.
pub fn random_weights(rng: &mut impl Rng, voxels: usize, joints: usize) -> Result<SkinWeights, Error> {
    let lists = (0..voxels)
        .map(|_| {
            let k = rng.gen_range(1..=joints.min(4));
            let js = sample(rng, joints, k);
            let raw: Vec<f32> = (0..k).map(|_| rng.gen_range(0.05f32..1.0)).collect();
            let sum: f32 = raw.iter().sum();
            js.into_iter().zip(raw).map(|(j, w)| (j as u16, w / sum)).collect()
        })
        .collect();
    Ok(SkinWeights::from_lists(lists)?)
}

pub fn random_asset(spec: &RandomAssetSpec) -> Result<Asset, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let grid = GridSpec::cube(spec.resolution, [0.0; 3], 2.0)?;
    let voxels = VoxelSet::new(grid, random_cells(&mut rng, spec.resolution, spec.voxels))?;
    let mut flut = Flut::<f32>::zeros(voxels.len(), spec.sh_degree, spec.channels)?;
    for v in flut.data_mut().iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    for i in 0..voxels.len() {
        flut.set_density(i, rng.gen_range(0.0..10.0));
    }
    let rig = if spec.joints > 0 {
        Some(Rig {
            skeleton: random_skeleton(&mut rng, spec.joints)?,
            weights: random_weights(&mut rng, voxels.len(), spec.joints)?,
        })
    } else {
        None
    };
    Asset::new(voxels, flut, rig)
}
