//! Persistent formats: `.nvo` assets, `.dpt` depth rasters, PNG images,
//! and JSON skeletons, pose clips, skinning meshes and scene manifests.

mod dpt;
mod json;
mod nvo;
mod png;
mod scene;

pub use dpt::{decode_depth, encode_depth, read_depth, write_depth, DepthRaster, DPT_MAGIC};
pub use json::{
    load_clip, load_mesh, load_obj_vertices, load_skeleton, load_weights_json, parse_clip, parse_mesh_json,
    parse_obj_vertices, parse_skeleton, parse_weights_json, save_clip, save_mesh, save_skeleton, ClipFile,
    ClipFrame, JointEntry, MeshFile, PoseClip, SkeletonFile,
};
pub use nvo::{load_asset, save_asset, NVO_HEADER_LEN, NVO_MAGIC, NVO_VERSION};
pub use png::{decode_png, encode_png, read_png, read_png_rgba, write_png};
pub use scene::{
    load_scene, BoundsEntry, CameraEntry, FrameEntry, SceneFile, SceneFrame, SceneManifest, TransformEntry,
};

use std::path::{Path, PathBuf};

use crate::asset::Asset;

#[derive(Debug, thiserror::Error)]
pub enum AssetError {
    #[error("truncated {section}: needed {needed} more bytes, {available} available")]
    Truncated {
        section: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("count mismatch: {0}")]
    CountMismatch(String),
    #[error("{0} trailing bytes after the last block")]
    TrailingBytes(usize),
    #[error("invalid content: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("image: {0}")]
    Image(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AssetError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AssetError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, AssetError> {
    std::fs::read(path).map_err(|e| AssetError::io(path, e))
}

/// Writes through a sibling temporary file and renames it into place, so
/// readers never observe a partial file.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AssetError> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes).map_err(|e| AssetError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| AssetError::io(path, e))
}

pub fn read_asset(path: &Path) -> Result<Asset, AssetError> {
    load_asset(&read_file(path)?)
}

pub fn write_asset(path: &Path, asset: &Asset) -> Result<(), AssetError> {
    write_file(path, &save_asset(asset)?)
}

/// Cursor over little-endian binary data that reports truncation per
/// section.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

macro_rules! read_le {
    ($name:ident, $t:ty) => {
        pub fn $name(&mut self, section: &'static str) -> Result<$t, AssetError> {
            let b = self.take(std::mem::size_of::<$t>(), section)?;
            Ok(<$t>::from_le_bytes(b.try_into().unwrap()))
        }
    };
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn require(&self, n: usize, section: &'static str) -> Result<(), AssetError> {
        if self.remaining() < n {
            return Err(AssetError::Truncated {
                section,
                needed: n,
                available: self.remaining(),
            });
        }
        Ok(())
    }

    pub fn take(&mut self, n: usize, section: &'static str) -> Result<&'a [u8], AssetError> {
        self.require(n, section)?;
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    read_le!(u16, u16);
    read_le!(u32, u32);
    read_le!(i32, i32);
    read_le!(u64, u64);
    read_le!(f32, f32);
    read_le!(f64, f64);

    pub fn u8(&mut self, section: &'static str) -> Result<u8, AssetError> {
        Ok(self.take(1, section)?[0])
    }
}
