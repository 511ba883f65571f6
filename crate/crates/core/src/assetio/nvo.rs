//! Binary `.nvo` asset: header, sorted leaf table, FLUT block and an
//! optional rig block. Little-endian throughout.
//!
//! ```text
//! header   magic "NVO1" | version u32 | resolution u32 | voxel count u64
//!          | sh degree u8 | channels u8 | bounds min xyz, max xyz 6 x f32
//!          | rig offset u64 (0 = no rig)
//! leaves   count x (morton u64, flut index u32), strictly sorted
//! flut     count x stride x f32, coefficients then density
//! rig      joint count u32, per joint: name len u16, utf-8 name,
//!          parent i32 (-1 = root), rotation wxyz 4 x f64, translation 3 x f64;
//!          then per voxel: count u8, count x (joint u16, weight f32)
//! ```

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::{AssetError, ByteReader};
use crate::asset::{Asset, Rig};
use crate::geometry::RigidTransform;
use crate::rigging::{Joint, SkinWeights, Skeleton};
use crate::volume::{morton_decode, morton_encode_unchecked, Flut, GridSpec, VoxelSet};

pub const NVO_MAGIC: [u8; 4] = *b"NVO1";
pub const NVO_VERSION: u32 = 1;
pub const NVO_HEADER_LEN: usize = 54;

/// Serializes an asset.
pub fn save_asset(asset: &Asset) -> Result<Vec<u8>, AssetError> {
    let n = asset.len();
    if n == 0 {
        return Err(AssetError::Invalid("carved-empty: asset has no voxels".into()));
    }
    if asset.flut.len() != n {
        return Err(AssetError::CountMismatch(format!(
            "{} FLUT entries for {n} voxels",
            asset.flut.len()
        )));
    }
    let grid = asset.grid();
    let stride = asset.flut.stride();
    let mut out = Vec::with_capacity(NVO_HEADER_LEN + n * (12 + 4 * stride));
    out.extend_from_slice(&NVO_MAGIC);
    out.extend_from_slice(&NVO_VERSION.to_le_bytes());
    out.extend_from_slice(&grid.resolution().to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.push(asset.flut.sh_degree());
    out.push(asset.flut.channels() as u8);
    for v in grid.min_f32().iter().chain(grid.max_f32().iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let rig_offset_pos = out.len();
    out.extend_from_slice(&0u64.to_le_bytes());

    let mut leaves: Vec<(u64, u32)> = asset
        .voxels
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| (morton_encode_unchecked(*c), i as u32))
        .collect();
    leaves.sort_unstable();
    for (m, i) in leaves {
        out.extend_from_slice(&m.to_le_bytes());
        out.extend_from_slice(&i.to_le_bytes());
    }
    for v in asset.flut.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }

    if let Some(rig) = &asset.rig {
        let offset = out.len() as u64;
        out[rig_offset_pos..rig_offset_pos + 8].copy_from_slice(&offset.to_le_bytes());
        write_rig(rig, n, &mut out)?;
    }
    Ok(out)
}

fn write_rig(rig: &Rig, voxels: usize, out: &mut Vec<u8>) -> Result<(), AssetError> {
    let joints = rig.skeleton.joints();
    out.extend_from_slice(&(joints.len() as u32).to_le_bytes());
    for j in joints {
        let name = j.name.as_bytes();
        if name.len() > u16::MAX as usize {
            return Err(AssetError::Invalid(format!("joint name of {} bytes", name.len())));
        }
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        let parent = j.parent.map_or(-1i32, |p| p as i32);
        out.extend_from_slice(&parent.to_le_bytes());
        let q = j.bind_local.rotation.quaternion();
        for v in [q.w, q.i, q.j, q.k] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in j.bind_local.translation.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    if rig.weights.len() != voxels {
        return Err(AssetError::CountMismatch(format!(
            "{} weight records for {voxels} voxels",
            rig.weights.len()
        )));
    }
    for i in 0..voxels {
        out.push(rig.weights.voxel_len(i) as u8);
        for (j, w) in rig.weights.voxel(i) {
            out.extend_from_slice(&j.to_le_bytes());
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    Ok(())
}

/// Parses an asset, rejecting foreign magic, unknown versions, truncation,
/// inconsistent counts and trailing bytes.
pub fn load_asset(bytes: &[u8]) -> Result<Asset, AssetError> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4, "header")?;
    if magic != NVO_MAGIC {
        return Err(AssetError::BadMagic {
            expected: NVO_MAGIC,
            found: magic.try_into().unwrap(),
        });
    }
    let version = r.u32("header")?;
    if version != NVO_VERSION {
        return Err(AssetError::UnsupportedVersion(version));
    }
    let resolution = r.u32("header")?;
    let count = r.u64("header")?;
    let sh_degree = r.u8("header")?;
    let channels = r.u8("header")?;
    let mut bounds = [0f32; 6];
    for b in &mut bounds {
        *b = r.f32("header")?;
    }
    let rig_offset = r.u64("header")?;
    let grid = GridSpec::from_f32(
        resolution,
        [bounds[0], bounds[1], bounds[2]],
        [bounds[3], bounds[4], bounds[5]],
    )
    .map_err(|e| AssetError::Invalid(e.to_string()))?;
    if count == 0 {
        return Err(AssetError::CountMismatch("voxel count is zero".into()));
    }
    let flut_probe = Flut::<f32>::zeros(0, sh_degree, channels).map_err(|e| AssetError::Invalid(e.to_string()))?;
    let stride = flut_probe.stride();
    let n = usize::try_from(count).map_err(|_| AssetError::CountMismatch(format!("voxel count {count}")))?;
    let body = n
        .checked_mul(12 + 4 * stride)
        .ok_or_else(|| AssetError::CountMismatch(format!("voxel count {count}")))?;
    r.require(body, "leaf table and FLUT")?;

    let mut cells = vec![[0u32; 3]; n];
    let mut seen = vec![false; n];
    let mut prev: Option<u64> = None;
    for _ in 0..n {
        let m = r.u64("leaf table")?;
        let idx = r.u32("leaf table")? as usize;
        if prev.is_some_and(|p| p >= m) {
            return Err(AssetError::Invalid("leaf table is not strictly sorted".into()));
        }
        prev = Some(m);
        if idx >= n || seen[idx] {
            return Err(AssetError::CountMismatch(format!(
                "leaf table references FLUT entry {idx} of {n} more than once or out of range"
            )));
        }
        seen[idx] = true;
        let c = morton_decode(m);
        if !grid.contains_cell(c) || morton_encode_unchecked(c) != m {
            return Err(AssetError::Invalid(format!("leaf {m:#x} outside the grid")));
        }
        cells[idx] = c;
    }
    let mut data = Vec::with_capacity(n * stride);
    for _ in 0..n * stride {
        data.push(r.f32("FLUT")?);
    }
    let flut = Flut::from_data(sh_degree, channels, data).map_err(|e| AssetError::Invalid(e.to_string()))?;
    let voxels = VoxelSet::new(grid, cells).map_err(|e| AssetError::Invalid(e.to_string()))?;

    let rig = if rig_offset == 0 {
        None
    } else {
        if rig_offset != r.position() as u64 {
            return Err(AssetError::CountMismatch(format!(
                "rig offset {rig_offset} but the FLUT block ends at {}",
                r.position()
            )));
        }
        Some(read_rig(&mut r, n)?)
    };
    if r.remaining() > 0 {
        return Err(AssetError::TrailingBytes(r.remaining()));
    }
    Asset::new(voxels, flut, rig).map_err(|e| AssetError::Invalid(e.to_string()))
}

fn read_rig(r: &mut ByteReader, voxels: usize) -> Result<Rig, AssetError> {
    let jc = r.u32("skeleton")? as usize;
    if jc == 0 || jc > u16::MAX as usize {
        return Err(AssetError::CountMismatch(format!("{jc} joints")));
    }
    let mut joints = Vec::with_capacity(jc.min(4096));
    for _ in 0..jc {
        let len = r.u16("skeleton")? as usize;
        let name = std::str::from_utf8(r.take(len, "skeleton")?)
            .map_err(|_| AssetError::Invalid("joint name is not UTF-8".into()))?
            .to_string();
        let parent = r.i32("skeleton")?;
        let mut q = [0f64; 4];
        for v in &mut q {
            *v = r.f64("skeleton")?;
        }
        let mut t = [0f64; 3];
        for v in &mut t {
            *v = r.f64("skeleton")?;
        }
        let parent = match parent {
            -1 => None,
            p if p >= 0 => Some(p as usize),
            p => return Err(AssetError::Invalid(format!("parent index {p}"))),
        };
        // Stored unit quaternions are kept verbatim so that re-saving is
        // bit-exact; the skeleton constructor checks normalization.
        let rotation = UnitQuaternion::new_unchecked(Quaternion::new(q[0], q[1], q[2], q[3]));
        joints.push(Joint {
            name,
            parent,
            bind_local: RigidTransform::new(rotation, Vector3::from(t)),
        });
    }
    let skeleton = Skeleton::new(joints).map_err(|e| AssetError::Invalid(e.to_string()))?;
    let mut lists = Vec::with_capacity(voxels);
    for _ in 0..voxels {
        let k = r.u8("weights")? as usize;
        let mut l = Vec::with_capacity(k);
        for _ in 0..k {
            let j = r.u16("weights")?;
            let w = r.f32("weights")?;
            l.push((j, w));
        }
        lists.push(l);
    }
    let weights = SkinWeights::from_lists(lists).map_err(|e| AssetError::Invalid(e.to_string()))?;
    Ok(Rig { skeleton, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn tiny() -> Asset {
        let g = GridSpec::cube(4, [0.5, -0.25, 1.0], 2.0).unwrap();
        let v = VoxelSet::new(g, vec![[1, 2, 3]]).unwrap();
        let flut = Flut::from_data(0, 3, vec![0.1, 0.2, 0.3, 4.0]).unwrap();
        Asset::new(v, flut, None).unwrap()
    }

    #[test]
    fn one_voxel_round_trip() {
        let a = tiny();
        let bytes = save_asset(&a).unwrap();
        assert_eq!(bytes.len(), NVO_HEADER_LEN + 12 + 16);
        let b = load_asset(&bytes).unwrap();
        assert_eq!(a, b);
        assert_eq!(save_asset(&b).unwrap(), bytes);
    }

    #[test]
    fn rigged_round_trip() {
        let mut a = tiny();
        let skeleton = Skeleton::new(vec![
            Joint {
                name: "root".into(),
                parent: None,
                bind_local: RigidTransform::identity(),
            },
            Joint {
                name: "tail".into(),
                parent: Some(0),
                bind_local: RigidTransform::new(
                    RigidTransform::from_euler_xyz(Vec3::new(0.1, 0.2, 0.3)),
                    Vec3::new(0.0, 1.0, 0.0),
                ),
            },
        ])
        .unwrap();
        let weights = SkinWeights::from_lists(vec![vec![(0, 0.25), (1, 0.75)]]).unwrap();
        a.rig = Some(Rig { skeleton, weights });
        let bytes = save_asset(&a).unwrap();
        let b = load_asset(&bytes).unwrap();
        assert_eq!(a, b);
        assert_eq!(save_asset(&b).unwrap(), bytes);
    }

    #[test]
    fn distinct_errors() {
        let bytes = save_asset(&tiny()).unwrap();
        assert!(matches!(load_asset(&bytes[..10]), Err(AssetError::Truncated { .. })));
        assert!(matches!(load_asset(&bytes[..bytes.len() - 1]), Err(AssetError::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(load_asset(&bad), Err(AssetError::BadMagic { .. })));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(load_asset(&bad), Err(AssetError::UnsupportedVersion(9))));
        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(load_asset(&bad), Err(AssetError::TrailingBytes(1))));
        let mut bad = bytes.clone();
        bad[12..20].copy_from_slice(&2u64.to_le_bytes());
        assert!(matches!(load_asset(&bad), Err(AssetError::Truncated { .. })));
        let mut bad = bytes;
        bad[12..20].copy_from_slice(&0u64.to_le_bytes());
        assert!(matches!(load_asset(&bad), Err(AssetError::CountMismatch(_))));
    }
}
