use super::FrameBuffers;
use crate::Error;

/// RGBA image with color premultiplied by alpha, values nominally in
/// `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbaImage {
    pub width: u32,
    pub height: u32,
    /// Four values per pixel, row-major.
    pub data: Vec<f32>,
}

impl RgbaImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, Error> {
        if data.len() != width as usize * height as usize * 4 {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} RGBA image",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Premultiplies straight 8-bit RGBA.
    pub fn from_straight_rgba8(width: u32, height: u32, bytes: &[u8]) -> Result<Self, Error> {
        if bytes.len() != width as usize * height as usize * 4 {
            return Err(Error::DimensionMismatch(format!(
                "{} bytes for a {width}x{height} RGBA image",
                bytes.len()
            )));
        }
        let mut data = Vec::with_capacity(bytes.len());
        for px in bytes.chunks_exact(4) {
            let a = px[3] as f32 / 255.0;
            for &c in &px[..3] {
                data.push(c as f32 / 255.0 * a);
            }
            data.push(a);
        }
        Ok(Self { width, height, data })
    }

    /// First three feature channels and alpha of a rendered frame.
    pub fn from_frame(fb: &FrameBuffers) -> Self {
        let mut data = Vec::with_capacity(fb.pixel_count() * 4);
        for p in 0..fb.pixel_count() {
            let f = fb.pixel_color(p);
            for c in 0..3 {
                data.push(f.get(c).copied().unwrap_or(0.0));
            }
            data.push(fb.alpha[p]);
        }
        Self {
            width: fb.width,
            height: fb.height,
            data,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn pixel(&self, index: usize) -> [f32; 4] {
        let p = &self.data[index * 4..index * 4 + 4];
        [p[0], p[1], p[2], p[3]]
    }

    /// Straight 8-bit RGBA; fully transparent pixels come out black.
    pub fn to_straight_rgba8(&self) -> Vec<u8> {
        let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let mut out = Vec::with_capacity(self.data.len());
        for px in self.data.chunks_exact(4) {
            let a = px[3].clamp(0.0, 1.0);
            for &c in &px[..3] {
                out.push(if a > 0.0 { q(c / a) } else { 0 });
            }
            out.push(q(a));
        }
        out
    }

    pub fn alpha_mask(&self) -> Vec<f32> {
        self.data.chunks_exact(4).map(|p| p[3]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn premultiplies_on_load() {
        let img = RgbaImage::from_straight_rgba8(1, 1, &[255, 0, 51, 128]).unwrap();
        let a = 128.0 / 255.0;
        assert!((img.data[0] - a).abs() < 1e-7);
        assert!((img.data[2] - 0.2 * a).abs() < 1e-7);
        assert_eq!(img.to_straight_rgba8(), vec![255, 0, 51, 128]);
        assert!(RgbaImage::from_straight_rgba8(2, 1, &[0; 4]).is_err());
    }
}
