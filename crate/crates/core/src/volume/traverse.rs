//! Front-to-back ray traversal of occupied octree leaves.
//!
//! The ray is expressed in cell units, where every cell boundary is an
//! integer plane. Each node splits its parametric interval at the crossings
//! of its three mid planes, and children are visited in interval order;
//! empty subtrees are skipped by their (empty) leaf ranges.

use nalgebra::Vector3;

use super::morton::morton_encode_unchecked;
use super::VoxelOctree;
use crate::geometry::{Ray, Vec3};

/// One occupied cell pierced by a ray over `[t_enter, t_exit)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySegment {
    pub flut_index: u32,
    pub t_enter: f64,
    pub t_exit: f64,
}

impl RaySegment {
    #[inline]
    pub fn length(&self) -> f64 {
        self.t_exit - self.t_enter
    }
}

struct GridRay {
    origin: Vec3,
    dir: Vec3,
}

impl GridRay {
    #[inline]
    fn plane_t(&self, axis: usize, plane: f64) -> f64 {
        if self.dir[axis] == 0.0 {
            f64::INFINITY
        } else {
            (plane - self.origin[axis]) / self.dir[axis]
        }
    }
}

/// Parametric interval of `ray` inside `[0, n]^3`, in cell units.
fn clip_to_cube(ray: &GridRay, n: f64) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for a in 0..3 {
        if ray.dir[a] == 0.0 {
            if !(ray.origin[a] >= 0.0 && ray.origin[a] < n) {
                return None;
            }
        } else {
            let t0 = ray.plane_t(a, 0.0);
            let t1 = ray.plane_t(a, n);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    (lo < hi).then_some((lo, hi))
}

impl VoxelOctree {
    /// Occupied leaves pierced by `ray` within `[t_min, t_max]`, ordered by
    /// entry distance. Distances are in world units along the unit ray.
    pub fn traverse_ray(&self, ray: &Ray, t_min: f64, t_max: f64) -> Vec<RaySegment> {
        let mut out = Vec::new();
        self.traverse_ray_into(ray, t_min, t_max, &mut out);
        out
    }

    /// As [`VoxelOctree::traverse_ray`], appending to `out` after clearing it.
    pub fn traverse_ray_into(&self, ray: &Ray, t_min: f64, t_max: f64, out: &mut Vec<RaySegment>) {
        out.clear();
        if !(t_min < t_max) {
            return;
        }
        let grid = self.grid();
        let cs = grid.cell_size_vec();
        let gray = GridRay {
            origin: grid.to_grid(&ray.origin),
            dir: Vector3::new(
                ray.direction.x / cs.x,
                ray.direction.y / cs.y,
                ray.direction.z / cs.z,
            ),
        };
        let n = grid.resolution() as f64;
        let Some((lo, hi)) = clip_to_cube(&gray, n) else {
            return;
        };
        let (t0, t1) = (lo.max(t_min), hi.min(t_max));
        if !(t0 < t1) {
            return;
        }
        let walker = Walker {
            tree: self,
            ray: &gray,
        };
        walker.visit(grid.depth(), [0, 0, 0], 0, self.leaves().len(), t0, t1, out);
    }
}

struct Walker<'a> {
    tree: &'a VoxelOctree,
    ray: &'a GridRay,
}

impl Walker<'_> {
    #[allow(clippy::too_many_arguments)]
    fn visit(
        &self,
        level: u32,
        coord: [u32; 3],
        lo: usize,
        hi: usize,
        t0: f64,
        t1: f64,
        out: &mut Vec<RaySegment>,
    ) {
        if lo == hi {
            return;
        }
        let leaves = self.tree.leaves();
        if level == 0 {
            if t1 > t0 {
                out.push(RaySegment {
                    flut_index: leaves[lo].flut_index,
                    t_enter: t0,
                    t_exit: t1,
                });
            }
            return;
        }

        // Leaf ranges of the eight children, in child-index (Morton) order.
        let child_shift = 3 * (level - 1);
        let base = morton_encode_unchecked(coord) << 3;
        let mut bounds = [lo; 9];
        bounds[8] = hi;
        for c in 1..8u64 {
            let key = (base | c) << child_shift;
            let slice = &leaves[bounds[c as usize - 1]..hi];
            bounds[c as usize] = bounds[c as usize - 1] + slice.partition_point(|l| l.morton < key);
        }

        let half = 1u64 << (level - 1);
        let mid = [0, 1, 2].map(|a| ((coord[a] as u64) << level | half) as f64);
        let tm = [0, 1, 2].map(|a| self.ray.plane_t(a, mid[a]));
        let mut cuts = [t0, t1, t1, t1, t1];
        let mut ncut = 1;
        for &t in &tm {
            if t > t0 && t < t1 {
                cuts[ncut] = t;
                ncut += 1;
            }
        }
        cuts[ncut] = t1;
        cuts[1..ncut].sort_unstable_by(|a, b| a.total_cmp(b));

        for s in 0..ncut {
            let (a, b) = (cuts[s], cuts[s + 1]);
            if !(b > a) {
                continue;
            }
            let tmid = 0.5 * (a + b);
            let mut child = 0usize;
            let mut child_coord = [0u32; 3];
            for axis in 0..3 {
                let d = self.ray.dir[axis];
                let upper = if d > 0.0 {
                    tmid > tm[axis]
                } else if d < 0.0 {
                    tmid < tm[axis]
                } else {
                    self.ray.origin[axis] >= mid[axis]
                };
                child |= (upper as usize) << axis;
                child_coord[axis] = coord[axis] * 2 + upper as u32;
            }
            self.visit(
                level - 1,
                child_coord,
                bounds[child],
                bounds[child + 1],
                a,
                b,
                out,
            );
        }
    }
}
