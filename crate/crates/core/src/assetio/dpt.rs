//! `.dpt` depth raster: 16-byte header (magic "DPT1", width u32, height
//! u32, reserved u32 = 0) followed by row-major little-endian f32 depths.
//! Infinity marks pixels with no dense voxel.

use std::path::Path;

use super::{read_file, write_file, AssetError, ByteReader};

pub const DPT_MAGIC: [u8; 4] = *b"DPT1";

#[derive(Clone, Debug, PartialEq)]
pub struct DepthRaster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

pub fn encode_depth(width: u32, height: u32, data: &[f32]) -> Result<Vec<u8>, AssetError> {
    if data.len() != width as usize * height as usize {
        return Err(AssetError::CountMismatch(format!(
            "{} depths for {width}x{height}",
            data.len()
        )));
    }
    let mut out = Vec::with_capacity(16 + 4 * data.len());
    out.extend_from_slice(&DPT_MAGIC);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for d in data {
        out.extend_from_slice(&d.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_depth(bytes: &[u8]) -> Result<DepthRaster, AssetError> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4, "depth header")?;
    if magic != DPT_MAGIC {
        return Err(AssetError::BadMagic {
            expected: DPT_MAGIC,
            found: magic.try_into().unwrap(),
        });
    }
    let width = r.u32("depth header")?;
    let height = r.u32("depth header")?;
    let _reserved = r.u32("depth header")?;
    let n = width as usize * height as usize;
    r.require(n * 4, "depth data")?;
    let data = (0..n).map(|_| r.f32("depth data")).collect::<Result<Vec<_>, _>>()?;
    if r.remaining() > 0 {
        return Err(AssetError::TrailingBytes(r.remaining()));
    }
    Ok(DepthRaster { width, height, data })
}

pub fn write_depth(path: &Path, width: u32, height: u32, data: &[f32]) -> Result<(), AssetError> {
    write_file(path, &encode_depth(width, height, data)?)
}

pub fn read_depth(path: &Path) -> Result<DepthRaster, AssetError> {
    decode_depth(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_infinity() {
        let d = [1.5, f32::INFINITY, 0.0, 7.25, 3.0, f32::INFINITY];
        let bytes = encode_depth(3, 2, &d).unwrap();
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(&bytes[..4], b"DPT1");
        let r = decode_depth(&bytes).unwrap();
        assert_eq!((r.width, r.height), (3, 2));
        assert_eq!(r.data, d);
        assert!(matches!(decode_depth(&bytes[..20]), Err(AssetError::Truncated { .. })));
        let mut long = bytes.clone();
        long.extend_from_slice(&[0; 4]);
        assert!(matches!(decode_depth(&long), Err(AssetError::TrailingBytes(4))));
        assert!(encode_depth(2, 2, &d).is_err());
    }
}
