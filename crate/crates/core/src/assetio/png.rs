use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbaImage as PngBuffer};

use super::{read_file, write_file, AssetError};
use crate::render::RgbaImage;

/// Encodes straight 8-bit RGBA as PNG.
pub fn encode_png(width: u32, height: u32, rgba: &[u8]) -> Result<Vec<u8>, AssetError> {
    let buf = PngBuffer::from_raw(width, height, rgba.to_vec())
        .ok_or_else(|| AssetError::Image(format!("{} bytes for {width}x{height} RGBA", rgba.len())))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| AssetError::Image(e.to_string()))?;
    Ok(out.into_inner())
}

/// Decodes a PNG to straight 8-bit RGBA.
pub fn decode_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), AssetError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| AssetError::Image(e.to_string()))?
        .to_rgba8();
    Ok((img.width(), img.height(), img.into_raw()))
}

pub fn write_png(path: &Path, width: u32, height: u32, rgba: &[u8]) -> Result<(), AssetError> {
    write_file(path, &encode_png(width, height, rgba)?)
}

pub fn read_png(path: &Path) -> Result<(u32, u32, Vec<u8>), AssetError> {
    decode_png(&read_file(path)?).map_err(|e| match e {
        AssetError::Image(m) => AssetError::Image(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Loads a straight-alpha PNG as a premultiplied image.
pub fn read_png_rgba(path: &Path) -> Result<RgbaImage, AssetError> {
    let (w, h, px) = read_png(path)?;
    RgbaImage::from_straight_rgba8(w, h, &px).map_err(|e| AssetError::Image(e.to_string()))
}
