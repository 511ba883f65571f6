//! Sparse voxel octree over Morton-sorted leaves.
//!
//! Construction is encode, parallel sort and a binary radix tree linked in
//! parallel (Karras 2012): every internal node is computed independently
//! from the sorted codes, so the output does not depend on thread count.

use rayon::prelude::*;

use super::morton::{morton_decode, morton_encode_unchecked};
use super::{GridSpec, VolumeError, VoxelSet};
use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Leaf {
    pub morton: u64,
    pub flut_index: u32,
}

impl Leaf {
    pub fn cell(&self) -> [u32; 3] {
        morton_decode(self.morton)
    }
}

const LEAF_BIT: u32 = 1 << 31;

/// Child reference: either a leaf index or an internal node index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeRef(u32);

impl NodeRef {
    fn leaf(i: u32) -> Self {
        NodeRef(i | LEAF_BIT)
    }

    fn internal(i: u32) -> Self {
        NodeRef(i)
    }

    pub fn is_leaf(self) -> bool {
        self.0 & LEAF_BIT != 0
    }

    pub fn index(self) -> usize {
        (self.0 & !LEAF_BIT) as usize
    }
}

/// Internal node of the radix tree. It covers leaves `first..=last`, which
/// share their leading `prefix_len` code bits; the left child holds the
/// codes whose next bit is zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RadixNode {
    pub left: NodeRef,
    pub right: NodeRef,
    pub first: u32,
    pub last: u32,
    pub prefix_len: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelOctree {
    grid: GridSpec,
    leaves: Vec<Leaf>,
    nodes: Vec<RadixNode>,
}

/// Builds the octree for `cells`, where `flut_indices[i]` is stored in the
/// leaf of `cells[i]`. Cells must be unique.
pub fn build_octree(
    grid: &GridSpec,
    cells: &[[u32; 3]],
    flut_indices: &[u32],
) -> Result<VoxelOctree, VolumeError> {
    if cells.is_empty() {
        return Err(VolumeError::EmptyVoxelSet);
    }
    if cells.len() != flut_indices.len() {
        return Err(VolumeError::InvalidParameter(format!(
            "{} cells but {} FLUT indices",
            cells.len(),
            flut_indices.len()
        )));
    }
    if cells.len() as u64 >= LEAF_BIT as u64 {
        return Err(VolumeError::InvalidParameter("too many cells".into()));
    }
    if let Some(c) = cells.par_iter().find_first(|c| !grid.contains_cell(**c)) {
        return Err(VolumeError::CoordinateOutOfRange(*c));
    }
    let mut leaves: Vec<Leaf> = cells
        .par_iter()
        .zip(flut_indices.par_iter())
        .map(|(c, &f)| Leaf {
            morton: morton_encode_unchecked(*c),
            flut_index: f,
        })
        .collect();
    leaves.par_sort_unstable_by_key(|l| l.morton);
    if let Some(i) = (1..leaves.len())
        .into_par_iter()
        .find_first(|&i| leaves[i - 1].morton == leaves[i].morton)
    {
        return Err(VolumeError::DuplicateCell(leaves[i].cell()));
    }
    let nodes = link_radix_nodes(&leaves);
    Ok(VoxelOctree {
        grid: *grid,
        leaves,
        nodes,
    })
}

fn link_radix_nodes(leaves: &[Leaf]) -> Vec<RadixNode> {
    let n = leaves.len() as i64;
    if n < 2 {
        return Vec::new();
    }
    let delta = |i: i64, j: i64| -> i32 {
        if j < 0 || j >= n {
            -1
        } else {
            (leaves[i as usize].morton ^ leaves[j as usize].morton).leading_zeros() as i32
        }
    };
    (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let d: i64 = if delta(i, i + 1) > delta(i, i - 1) { 1 } else { -1 };
            let delta_min = delta(i, i - d);
            let mut lmax = 2;
            while delta(i, i + lmax * d) > delta_min {
                lmax *= 2;
            }
            let mut l = 0;
            let mut t = lmax / 2;
            while t >= 1 {
                if delta(i, i + (l + t) * d) > delta_min {
                    l += t;
                }
                t /= 2;
            }
            let j = i + l * d;
            let delta_node = delta(i, j);
            let mut s = 0;
            let mut div = 2;
            loop {
                let t = (l + div - 1) / div;
                if delta(i, i + (s + t) * d) > delta_node {
                    s += t;
                }
                if t <= 1 {
                    break;
                }
                div *= 2;
            }
            let gamma = i + s * d + d.min(0);
            let (first, last) = (i.min(j), i.max(j));
            let left = if first == gamma {
                NodeRef::leaf(gamma as u32)
            } else {
                NodeRef::internal(gamma as u32)
            };
            let right = if last == gamma + 1 {
                NodeRef::leaf(gamma as u32 + 1)
            } else {
                NodeRef::internal(gamma as u32 + 1)
            };
            RadixNode {
                left,
                right,
                first: first as u32,
                last: last as u32,
                prefix_len: delta_node as u32,
            }
        })
        .collect()
}

impl VoxelOctree {
    /// Octree over a voxel set with FLUT entry `i` for `cells[i]`.
    pub fn from_voxels(voxels: &VoxelSet) -> Result<Self, VolumeError> {
        let idx: Vec<u32> = (0..voxels.len() as u32).collect();
        build_octree(voxels.grid(), voxels.cells(), &idx)
    }

    /// Reassembles an octree from an already sorted leaf table.
    pub fn from_sorted_leaves(grid: GridSpec, leaves: Vec<Leaf>) -> Result<Self, VolumeError> {
        if leaves.is_empty() {
            return Err(VolumeError::EmptyVoxelSet);
        }
        for w in leaves.windows(2) {
            if w[0].morton >= w[1].morton {
                return Err(VolumeError::UnsortedLeaves);
            }
        }
        if let Some(l) = leaves.iter().find(|l| !grid.contains_cell(l.cell())) {
            return Err(VolumeError::CoordinateOutOfRange(l.cell()));
        }
        let nodes = link_radix_nodes(&leaves);
        Ok(Self { grid, leaves, nodes })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn nodes(&self) -> &[RadixNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    /// FLUT index of the leaf at `cell`, by descending the radix tree.
    pub fn query_cell(&self, cell: [u32; 3]) -> Option<u32> {
        if !self.grid.contains_cell(cell) {
            return None;
        }
        let code = morton_encode_unchecked(cell);
        if self.nodes.is_empty() {
            let leaf = self.leaves[0];
            return (leaf.morton == code).then_some(leaf.flut_index);
        }
        let mut node = &self.nodes[0];
        loop {
            let shared = (code ^ self.leaves[node.first as usize].morton).leading_zeros();
            if shared < node.prefix_len {
                return None;
            }
            let bit = (code >> (63 - node.prefix_len)) & 1;
            let child = if bit == 0 { node.left } else { node.right };
            if child.is_leaf() {
                let leaf = self.leaves[child.index()];
                return (leaf.morton == code).then_some(leaf.flut_index);
            }
            node = &self.nodes[child.index()];
        }
    }

    /// FLUT index of the leaf containing world point `p`.
    pub fn query_point(&self, p: &Vec3) -> Option<u32> {
        self.grid.cell_of(p).and_then(|c| self.query_cell(c))
    }

    /// Maximum root-to-leaf path length in the radix tree.
    pub fn radix_depth(&self) -> usize {
        if self.nodes.is_empty() {
            return 0;
        }
        let mut best = 0;
        let mut stack = vec![(0usize, 1usize)];
        while let Some((i, d)) = stack.pop() {
            best = best.max(d);
            for c in [self.nodes[i].left, self.nodes[i].right] {
                if !c.is_leaf() {
                    stack.push((c.index(), d + 1));
                }
            }
        }
        best
    }
}
