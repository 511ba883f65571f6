//! Analytic density and color fields used to render ground truth.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{eval_sh_into, RigidTransform, Vec3, MAX_SH_COEFFS};
use crate::volume::{Flut, GridSpec, VoxelSet};

/// A participating medium: density, straight (non-premultiplied) color,
/// and a bounding sphere outside which the density vanishes.
pub trait Field: Sync {
    fn density(&self, p: &Vec3) -> f64;
    fn color(&self, p: &Vec3, dir: &Vec3) -> [f64; 3];
    fn support(&self) -> (Vec3, f64);
}

/// Sphere with a constant-density core and a Gaussian falloff shell.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzySphere {
    pub center: Vec3,
    pub core_radius: f64,
    /// Gaussian width of the shell; 0 gives a hard surface.
    pub shell_width: f64,
    pub core_density: f64,
}

impl Default for FuzzySphere {
    fn default() -> Self {
        Self {
            center: Vec3::zeros(),
            core_radius: 0.5,
            shell_width: 0.08,
            core_density: 30.0,
        }
    }
}

impl FuzzySphere {
    fn shell_extent(&self) -> f64 {
        3.5 * self.shell_width
    }
}

/// Smooth color field shared by the synthetic subjects.
fn smooth_color(p: &Vec3) -> [f64; 3] {
    [
        0.5 + 0.35 * (2.3 * p.x + 0.4).sin(),
        0.5 + 0.35 * (2.1 * p.y - 0.7).cos(),
        0.5 + 0.3 * (1.9 * p.z + 1.3 * p.x).sin(),
    ]
}

impl Field for FuzzySphere {
    fn density(&self, p: &Vec3) -> f64 {
        let r = (p - self.center).norm();
        if r <= self.core_radius {
            self.core_density
        } else if self.shell_width > 0.0 && r < self.core_radius + self.shell_extent() {
            let u = (r - self.core_radius) / self.shell_width;
            self.core_density * (-u * u).exp()
        } else {
            0.0
        }
    }

    fn color(&self, p: &Vec3, _dir: &Vec3) -> [f64; 3] {
        smooth_color(&(p - self.center))
    }

    fn support(&self) -> (Vec3, f64) {
        (self.center, self.core_radius + self.shell_extent())
    }
}

/// Capsule along x from `-half_length` to `half_length`, split at x = 0
/// into two rigid bones, with fur-like high-frequency density noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Capsule {
    pub half_length: f64,
    pub radius: f64,
    pub falloff: f64,
    pub density: f64,
    pub noise_amplitude: f64,
    waves: Vec<(Vec3, f64)>,
}

impl Capsule {
    pub fn new(half_length: f64, radius: f64, falloff: f64, density: f64, noise_amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = (0..8)
            .map(|_| {
                let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let f = rng.gen_range(25.0..45.0);
                (d.normalize() * f, rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Self {
            half_length,
            radius,
            falloff,
            density,
            noise_amplitude,
            waves,
        }
    }

    fn extent(&self) -> f64 {
        self.radius + 3.5 * self.falloff
    }

    /// Density in the canonical pose.
    pub fn canonical_density(&self, p: &Vec3) -> f64 {
        let x = p.x.clamp(-self.half_length, self.half_length);
        let d = (p - Vec3::new(x, 0.0, 0.0)).norm();
        let base = if d <= self.radius {
            self.density
        } else if d < self.extent() {
            let u = (d - self.radius) / self.falloff;
            self.density * (-u * u).exp()
        } else {
            return 0.0;
        };
        let n: f64 = self.waves.iter().map(|(k, ph)| (k.dot(p) + ph).sin()).sum::<f64>() / self.waves.len() as f64;
        (base * (1.0 + self.noise_amplitude * n)).max(0.0)
    }

    pub fn canonical_color(&self, p: &Vec3) -> [f64; 3] {
        smooth_color(p)
    }

    /// Radius around the joint (canonical origin) that bounds the support.
    pub fn support_radius(&self) -> f64 {
        self.half_length + self.extent()
    }
}

/// Capsule posed by moving each half rigidly: `live_from_canonical[j]`
/// maps bone `j`'s canonical points to live space.
#[derive(Clone, Debug)]
pub struct PosedCapsule<'a> {
    pub capsule: &'a Capsule,
    canonical_from_live: [RigidTransform; 2],
    joint_live: Vec3,
}

impl<'a> PosedCapsule<'a> {
    pub fn new(capsule: &'a Capsule, live_from_canonical: [RigidTransform; 2]) -> Self {
        Self {
            capsule,
            canonical_from_live: [live_from_canonical[0].inverse(), live_from_canonical[1].inverse()],
            joint_live: live_from_canonical[0].transform_point(&Vec3::zeros()),
        }
    }

    fn samples(&self, p: &Vec3) -> [(f64, Vec3); 2] {
        let a = self.canonical_from_live[0].transform_point(p);
        let b = self.canonical_from_live[1].transform_point(p);
        let da = if a.x <= 0.0 { self.capsule.canonical_density(&a) } else { 0.0 };
        let db = if b.x > 0.0 { self.capsule.canonical_density(&b) } else { 0.0 };
        [(da, a), (db, b)]
    }
}

impl Field for PosedCapsule<'_> {
    fn density(&self, p: &Vec3) -> f64 {
        let s = self.samples(p);
        s[0].0 + s[1].0
    }

    fn color(&self, p: &Vec3, _dir: &Vec3) -> [f64; 3] {
        let s = self.samples(p);
        let total = s[0].0 + s[1].0;
        if total <= 0.0 {
            return self.capsule.canonical_color(&s[0].1);
        }
        let ca = self.capsule.canonical_color(&s[0].1);
        let cb = self.capsule.canonical_color(&s[1].1);
        std::array::from_fn(|c| (s[0].0 * ca[c] + s[1].0 * cb[c]) / total)
    }

    fn support(&self) -> (Vec3, f64) {
        (self.joint_live, self.capsule.support_radius())
    }
}

/// Piecewise-constant field of a voxel set and its feature table, looked
/// up cell by cell; colors are the first three SH-decoded channels.
pub struct VoxelGridField<'a> {
    grid: GridSpec,
    cells: HashMap<[u32; 3], usize>,
    flut: &'a Flut<f64>,
}

impl<'a> VoxelGridField<'a> {
    pub fn new(voxels: &VoxelSet, flut: &'a Flut<f64>) -> Self {
        Self {
            grid: *voxels.grid(),
            cells: voxels.cells().iter().enumerate().map(|(i, c)| (*c, i)).collect(),
            flut,
        }
    }

    fn lookup(&self, p: &Vec3) -> Option<usize> {
        let min = self.grid.min();
        let h = self.grid.cell_size();
        let n = self.grid.resolution() as f64;
        let mut c = [0u32; 3];
        for a in 0..3 {
            let g = ((p[a] - min[a]) / h).floor();
            if !(g >= 0.0 && g < n) {
                return None;
            }
            c[a] = g as u32;
        }
        self.cells.get(&c).copied()
    }
}

impl Field for VoxelGridField<'_> {
    fn density(&self, p: &Vec3) -> f64 {
        self.lookup(p).map_or(0.0, |i| self.flut.density(i))
    }

    fn color(&self, p: &Vec3, dir: &Vec3) -> [f64; 3] {
        let Some(i) = self.lookup(p) else { return [0.0; 3] };
        let mut y = [0.0; MAX_SH_COEFFS];
        eval_sh_into(dir, self.flut.sh_degree(), &mut y);
        let ch = self.flut.channels();
        let k = self.flut.coeffs(i);
        std::array::from_fn(|c| {
            if c >= ch {
                return 0.0;
            }
            (0..self.flut.sh_coeff_count()).map(|h| k[h * ch + c] * y[h]).sum()
        })
    }

    fn support(&self) -> (Vec3, f64) {
        let half = 0.5 * self.grid.cell_size() * self.grid.resolution() as f64;
        (self.grid.center(), half * 3f64.sqrt())
    }
}
