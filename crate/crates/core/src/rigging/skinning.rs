//! Per-voxel skinning weights baked from a skinned mesh.

use rayon::prelude::*;
use smallvec::SmallVec;

use super::RigError;
use crate::geometry::Vec3;
use crate::volume::VoxelSet;

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-5;

/// Mesh vertices in the canonical pose with sparse per-vertex joint weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SkinnedMesh {
    pub vertices: Vec<Vec3>,
    pub weights: Vec<Vec<(u16, f64)>>,
}

impl SkinnedMesh {
    pub fn new(vertices: Vec<Vec3>, weights: Vec<Vec<(u16, f64)>>) -> Result<Self, RigError> {
        if vertices.is_empty() {
            return Err(RigError::InvalidMesh("mesh has no vertices".into()));
        }
        if vertices.len() != weights.len() {
            return Err(RigError::InvalidMesh(format!(
                "{} vertices but {} weight lists",
                vertices.len(),
                weights.len()
            )));
        }
        for (i, w) in weights.iter().enumerate() {
            let sum: f64 = w.iter().map(|(_, v)| v).sum();
            if w.iter().any(|(_, v)| !(*v >= 0.0)) || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(RigError::InvalidMesh(format!(
                    "vertex {i} weights must be non-negative and sum to 1 (sum {sum})"
                )));
            }
        }
        Ok(Self { vertices, weights })
    }

    pub fn max_joint(&self) -> Option<u16> {
        self.weights.iter().flatten().map(|(j, _)| *j).max()
    }
}

/// Sparse per-voxel joint weights in compressed rows.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SkinWeights {
    offsets: Vec<u32>,
    joints: Vec<u16>,
    weights: Vec<f32>,
}

impl SkinWeights {
    /// Validates and packs per-voxel lists. Each list must be non-empty with
    /// non-negative weights summing to one.
    pub fn from_lists(lists: Vec<Vec<(u16, f32)>>) -> Result<Self, RigError> {
        let mut out = SkinWeights {
            offsets: Vec::with_capacity(lists.len() + 1),
            joints: Vec::new(),
            weights: Vec::new(),
        };
        out.offsets.push(0);
        for (i, list) in lists.into_iter().enumerate() {
            if list.is_empty() || list.len() > u8::MAX as usize {
                return Err(RigError::InvalidWeights(format!(
                    "voxel {i} has {} weights (1..=255 allowed)",
                    list.len()
                )));
            }
            let sum: f64 = list.iter().map(|(_, w)| *w as f64).sum();
            if list.iter().any(|(_, w)| !(*w >= 0.0)) || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(RigError::InvalidWeights(format!(
                    "voxel {i} weights must be non-negative and sum to 1 (sum {sum})"
                )));
            }
            for (j, w) in list {
                out.joints.push(j);
                out.weights.push(w);
            }
            out.offsets.push(out.joints.len() as u32);
        }
        Ok(out)
    }

    /// Every voxel bound fully to `joint`.
    pub fn rigid(voxel_count: usize, joint: u16) -> Self {
        Self {
            offsets: (0..=voxel_count as u32).collect(),
            joints: vec![joint; voxel_count],
            weights: vec![1.0; voxel_count],
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voxel(&self, i: usize) -> impl Iterator<Item = (u16, f32)> + '_ {
        let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
        self.joints[a..b].iter().copied().zip(self.weights[a..b].iter().copied())
    }

    pub fn voxel_len(&self, i: usize) -> usize {
        (self.offsets[i + 1] - self.offsets[i]) as usize
    }

    /// Joint with the largest weight; ties go to the lowest joint index.
    pub fn dominant_joint(&self, i: usize) -> u16 {
        let mut best = (0u16, f32::NEG_INFINITY);
        for (j, w) in self.voxel(i) {
            if w > best.1 || (w == best.1 && j < best.0) {
                best = (j, w);
            }
        }
        best.0
    }

    pub fn max_joint(&self) -> Option<u16> {
        self.joints.iter().copied().max()
    }
}

/// Sign of the distance exponent in the nearest-vertex blend.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlendSign {
    /// `alpha_j ~ exp(-delta_j)`: closer vertices dominate.
    #[default]
    Nearer,
    /// `alpha_j ~ exp(+delta_j)`: farther vertices dominate.
    Farther,
}

/// Uniform bucket grid over mesh vertices for k-nearest queries.
struct VertexGrid<'a> {
    points: &'a [Vec3],
    min: Vec3,
    cell: f64,
    dims: [i64; 3],
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> VertexGrid<'a> {
    fn new(points: &'a [Vec3]) -> Self {
        let mut min = points[0];
        let mut max = points[0];
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        let ext = (max - min).map(|e| e.max(1e-9));
        let volume = ext.x * ext.y * ext.z;
        let target = (points.len() as f64 / 4.0).max(1.0);
        let mut cell = (volume / target).cbrt().max(ext.max() / 128.0);
        if !(cell.is_finite() && cell > 0.0) {
            cell = 1.0;
        }
        let dims = [0, 1, 2].map(|a| ((ext[a] / cell).floor() as i64 + 1).clamp(1, 256));
        let ncell = (dims[0] * dims[1] * dims[2]) as usize;
        let mut grid = VertexGrid {
            points,
            min,
            cell,
            dims,
            starts: vec![0; ncell + 1],
            items: vec![0; points.len()],
        };
        let ids: Vec<usize> = points.iter().map(|p| grid.flat(grid.cell_of(p))).collect();
        for &c in &ids {
            grid.starts[c + 1] += 1;
        }
        for c in 0..ncell {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in ids.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn cell_of(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|a| (((p[a] - self.min[a]) / self.cell).floor() as i64).clamp(0, self.dims[a] - 1))
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        ((c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]) as usize
    }

    /// The `k` nearest vertices as `(squared distance, index)`, ascending,
    /// ties by index.
    fn nearest(&self, p: &Vec3, k: usize) -> SmallVec<[(f64, u32); 16]> {
        let center = self.cell_of(p);
        let mut best: SmallVec<[(f64, u32); 16]> = SmallVec::new();
        let push = |d2: f64, i: u32, best: &mut SmallVec<[(f64, u32); 16]>| {
            if best.len() == k && (d2, i) >= best[k - 1] {
                return;
            }
            let pos = best.partition_point(|e| *e < (d2, i));
            best.insert(pos, (d2, i));
            if best.len() > k {
                best.pop();
            }
        };
        let max_ring = self.dims.iter().copied().max().unwrap();
        for r in 0..=max_ring {
            let lo = center.map(|c| c - r);
            let hi = center.map(|c| c + r);
            for z in lo[2].max(0)..=hi[2].min(self.dims[2] - 1) {
                for y in lo[1].max(0)..=hi[1].min(self.dims[1] - 1) {
                    for x in lo[0].max(0)..=hi[0].min(self.dims[0] - 1) {
                        let on_shell = x == lo[0]
                            || x == hi[0]
                            || y == lo[1]
                            || y == hi[1]
                            || z == lo[2]
                            || z == hi[2];
                        if !on_shell {
                            continue;
                        }
                        let c = self.flat([x, y, z]);
                        for &i in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                            let d2 = (self.points[i as usize] - p).norm_squared();
                            push(d2, i, &mut best);
                        }
                    }
                }
            }
            // Distance from p to the nearest face of the searched box that
            // still has unsearched cells behind it.
            let mut bound = f64::INFINITY;
            for a in 0..3 {
                if lo[a] > 0 {
                    let face = self.min[a] + lo[a] as f64 * self.cell;
                    bound = bound.min((p[a] - face).max(0.0));
                }
                if hi[a] < self.dims[a] - 1 {
                    let face = self.min[a] + (hi[a] + 1) as f64 * self.cell;
                    bound = bound.min((face - p[a]).max(0.0));
                }
            }
            if best.len() == k && best[k - 1].0 <= bound * bound {
                break;
            }
            if bound.is_infinite() {
                break;
            }
        }
        best
    }
}

/// Blends the weights of the `m` nearest mesh vertices into each voxel:
/// `w(p) = sum_j alpha_j w_j` with `alpha_j` a softmax of `-delta_j` (or
/// `+delta_j`, see [`BlendSign`]) and `delta_j = d_j - min_k d_k`.
pub fn bake_skinning_weights(
    voxels: &VoxelSet,
    mesh: &SkinnedMesh,
    m: usize,
    sign: BlendSign,
) -> Result<SkinWeights, RigError> {
    if m == 0 {
        return Err(RigError::InvalidParameter("m must be at least 1".into()));
    }
    let m = if m > mesh.vertices.len() {
        log::warn!(
            "m = {m} exceeds the mesh vertex count {}; clamping",
            mesh.vertices.len()
        );
        mesh.vertices.len()
    } else {
        m
    };
    let grid = VertexGrid::new(&mesh.vertices);
    let lists: Vec<Vec<(u16, f32)>> = (0..voxels.len())
        .into_par_iter()
        .map(|i| {
            let p = voxels.position(i);
            let near = grid.nearest(&p, m);
            blend_nearest(&near, mesh, sign)
        })
        .collect();
    SkinWeights::from_lists(lists)
}

fn blend_nearest(near: &[(f64, u32)], mesh: &SkinnedMesh, sign: BlendSign) -> Vec<(u16, f32)> {
    let d: SmallVec<[f64; 16]> = near.iter().map(|(d2, _)| d2.sqrt()).collect();
    let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
    let s = match sign {
        BlendSign::Nearer => -1.0,
        BlendSign::Farther => 1.0,
    };
    let e: SmallVec<[f64; 16]> = d.iter().map(|dj| (s * (dj - dmin)).exp()).collect();
    let z: f64 = e.iter().sum();
    let mut acc: SmallVec<[(u16, f64); 16]> = SmallVec::new();
    for ((_, vi), ej) in near.iter().zip(&e) {
        let alpha = ej / z;
        for &(joint, w) in &mesh.weights[*vi as usize] {
            match acc.iter_mut().find(|(j, _)| *j == joint) {
                Some(slot) => slot.1 += alpha * w,
                None => acc.push((joint, alpha * w)),
            }
        }
    }
    acc.retain(|(_, w)| *w > 0.0);
    acc.sort_by_key(|(j, _)| *j);
    let total: f64 = acc.iter().map(|(_, w)| w).sum();
    acc.iter().map(|(j, w)| (*j, (w / total) as f32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mesh(n: usize, joints: u16, seed: u64) -> SkinnedMesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut verts = Vec::new();
        let mut weights = Vec::new();
        for _ in 0..n {
            verts.push(Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ));
            let a = rng.gen_range(0..joints);
            let b = (a + 1) % joints;
            let w: f64 = rng.gen_range(0.0..1.0);
            weights.push(vec![(a, w), (b, 1.0 - w)]);
        }
        SkinnedMesh::new(verts, weights).unwrap()
    }

    fn as_dense(list: &[(u16, f32)], joints: usize) -> Vec<f64> {
        let mut out = vec![0.0; joints];
        for (j, w) in list {
            out[*j as usize] += *w as f64;
        }
        out
    }

    #[test]
    fn single_neighbor_copies_vertex_weights() {
        let mesh = random_mesh(50, 4, 1);
        let grid = GridSpec::cube(8, [0.0; 3], 2.0).unwrap();
        let voxels = VoxelSet::full(grid);
        let w = bake_skinning_weights(&voxels, &mesh, 1, BlendSign::Nearer).unwrap();
        for i in 0..voxels.len() {
            let p = voxels.position(i);
            let nearest = (0..mesh.vertices.len())
                .min_by(|a, b| {
                    let da = (mesh.vertices[*a] - p).norm_squared();
                    let db = (mesh.vertices[*b] - p).norm_squared();
                    da.total_cmp(&db).then(a.cmp(b))
                })
                .unwrap();
            let got: Vec<(u16, f32)> = w.voxel(i).collect();
            let mut expected: Vec<(u16, f32)> = mesh.weights[nearest]
                .iter()
                .filter(|(_, v)| *v > 0.0)
                .map(|(j, v)| (*j, *v as f32))
                .collect();
            expected.sort_by_key(|e| e.0);
            let a = as_dense(&got, 4);
            let b = as_dense(&expected, 4);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn equidistant_pair_averages() {
        let mesh = SkinnedMesh::new(
            vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(9.0, 9.0, 9.0)],
            vec![vec![(0, 1.0)], vec![(1, 0.5), (2, 0.5)], vec![(3, 1.0)]],
        )
        .unwrap();
        // One cell centered at the origin, equidistant from the first two.
        let grid = GridSpec::cube(1, [0.0, 0.0, 0.0], 0.5).unwrap();
        let centered = VoxelSet::new(grid, vec![[0, 0, 0]]).unwrap();
        let w = bake_skinning_weights(&centered, &mesh, 2, BlendSign::Nearer).unwrap();
        let got = as_dense(&w.voxel(0).collect::<Vec<_>>(), 4);
        let expected = [0.5, 0.25, 0.25, 0.0];
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn matches_brute_force_blend() {
        let mesh = random_mesh(100, 6, 9);
        let grid = GridSpec::cube(8, [0.1, -0.2, 0.0], 3.0).unwrap();
        let voxels = VoxelSet::full(grid);
        for sign in [BlendSign::Nearer, BlendSign::Farther] {
            let w = bake_skinning_weights(&voxels, &mesh, 4, sign).unwrap();
            for i in (0..voxels.len()).step_by(7) {
                let p = voxels.position(i);
                let mut all: Vec<(f64, usize)> = mesh
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(k, v)| ((v - p).norm(), k))
                    .collect();
                all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let near = &all[..4];
                let dmin = near[0].0;
                let s = if sign == BlendSign::Nearer { -1.0 } else { 1.0 };
                let z: f64 = near.iter().map(|(d, _)| (s * (d - dmin)).exp()).sum();
                let mut expected = vec![0.0; 6];
                for (d, k) in near {
                    for (j, wj) in &mesh.weights[*k] {
                        expected[*j as usize] += (s * (d - dmin)).exp() / z * wj;
                    }
                }
                let got = as_dense(&w.voxel(i).collect::<Vec<_>>(), 6);
                for (a, b) in got.iter().zip(&expected) {
                    assert!((a - b).abs() < 1e-6, "voxel {i}: {got:?} vs {expected:?}");
                }
            }
        }
    }

    #[test]
    fn weights_are_normalized_for_any_m() {
        let mesh = random_mesh(60, 5, 2);
        let grid = GridSpec::cube(4, [0.0; 3], 2.5).unwrap();
        let voxels = VoxelSet::full(grid);
        for m in [1, 2, 5, 17, 1000] {
            let w = bake_skinning_weights(&voxels, &mesh, m, BlendSign::Nearer).unwrap();
            for i in 0..voxels.len() {
                let sum: f64 = w.voxel(i).map(|(_, v)| v as f64).sum();
                assert!((sum - 1.0).abs() < 1e-5);
                assert!(w.voxel(i).all(|(_, v)| v >= 0.0));
            }
        }
    }

    #[test]
    fn dominant_joint_breaks_ties_low() {
        let w = SkinWeights::from_lists(vec![vec![(3, 0.5), (1, 0.5)], vec![(2, 0.25), (0, 0.75)]]).unwrap();
        assert_eq!(w.dominant_joint(0), 1);
        assert_eq!(w.dominant_joint(1), 0);
        assert!(SkinWeights::from_lists(vec![vec![(0, 0.5)]]).is_err());
        assert!(SkinWeights::from_lists(vec![vec![]]).is_err());
    }
}
