use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VolumeError;
use crate::geometry::{sh_count, MAX_SH_DEGREE};
use crate::Real;

pub const MAX_CHANNELS: u8 = 16;

/// Features look-up table: one record per voxel holding `H x C` SH
/// coefficients (coefficient-major, `k[h * C + c]`) followed by a density.
#[derive(Clone, Debug, PartialEq)]
pub struct Flut<S = f32> {
    sh_degree: u8,
    channels: u8,
    data: Vec<S>,
}

impl<S: Real> Flut<S> {
    pub fn zeros(len: usize, sh_degree: u8, channels: u8) -> Result<Self, VolumeError> {
        check_layout(sh_degree, channels)?;
        let stride = sh_count(sh_degree) * channels as usize + 1;
        Ok(Self {
            sh_degree,
            channels,
            data: vec![S::zero(); len * stride],
        })
    }

    pub fn from_data(sh_degree: u8, channels: u8, data: Vec<S>) -> Result<Self, VolumeError> {
        check_layout(sh_degree, channels)?;
        let stride = sh_count(sh_degree) * channels as usize + 1;
        if data.len() % stride != 0 {
            return Err(VolumeError::InvalidParameter(format!(
                "FLUT data length {} is not a multiple of entry size {stride}",
                data.len()
            )));
        }
        Ok(Self {
            sh_degree,
            channels,
            data,
        })
    }

    /// Random initialization: small uniform coefficients in (-0.01, 0.01),
    /// band-0 color set to mid gray and density `0.1 / cell_size`.
    pub fn init_random(
        len: usize,
        sh_degree: u8,
        channels: u8,
        cell_size: f64,
        seed: u64,
    ) -> Result<Self, VolumeError> {
        let mut flut = Self::zeros(len, sh_degree, channels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = channels as usize;
        let gray = 0.5 / crate::geometry::SH_C0;
        let sigma = S::from_f64(0.1 / cell_size).unwrap();
        for i in 0..len {
            let e = flut.entry_mut(i);
            let (coeffs, density) = e.split_at_mut(e.len() - 1);
            for (k, v) in coeffs.iter_mut().enumerate() {
                let jitter = rng.gen_range(-0.01..0.01);
                let base = if k < c { gray } else { 0.0 };
                *v = S::from_f64(base + jitter).unwrap();
            }
            density[0] = sigma;
        }
        Ok(flut)
    }

    pub fn sh_degree(&self) -> u8 {
        self.sh_degree
    }

    pub fn channels(&self) -> usize {
        self.channels as usize
    }

    pub fn sh_coeff_count(&self) -> usize {
        sh_count(self.sh_degree)
    }

    /// Values per entry: `H * C + 1`.
    pub fn stride(&self) -> usize {
        self.sh_coeff_count() * self.channels as usize + 1
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.stride()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    pub fn entry(&self, i: usize) -> &[S] {
        let s = self.stride();
        &self.data[i * s..(i + 1) * s]
    }

    #[inline]
    pub fn entry_mut(&mut self, i: usize) -> &mut [S] {
        let s = self.stride();
        &mut self.data[i * s..(i + 1) * s]
    }

    #[inline]
    pub fn coeffs(&self, i: usize) -> &[S] {
        let e = self.entry(i);
        &e[..e.len() - 1]
    }

    #[inline]
    pub fn density(&self, i: usize) -> S {
        let s = self.stride();
        self.data[(i + 1) * s - 1]
    }

    pub fn set_density(&mut self, i: usize, sigma: S) {
        let s = self.stride();
        self.data[(i + 1) * s - 1] = sigma;
    }

    /// Clamps every density to be non-negative.
    pub fn clamp_densities(&mut self) {
        let s = self.stride();
        for d in self.data.iter_mut().skip(s - 1).step_by(s) {
            if !(*d >= S::zero()) {
                *d = S::zero();
            }
        }
    }

    /// View-dependent feature of entry `i`: `out[c] = sum_h k[h][c] * Y_h`.
    #[inline]
    pub fn eval_into(&self, i: usize, basis: &[S], out: &mut [S]) {
        let c = self.channels as usize;
        let coeffs = self.coeffs(i);
        out[..c].iter_mut().for_each(|o| *o = S::zero());
        for (h, y) in basis.iter().enumerate().take(self.sh_coeff_count()) {
            let k = &coeffs[h * c..(h + 1) * c];
            for (o, kv) in out.iter_mut().zip(k) {
                *o = *o + *kv * *y;
            }
        }
    }

    pub fn cast<T: Real>(&self) -> Flut<T> {
        Flut {
            sh_degree: self.sh_degree,
            channels: self.channels,
            data: self
                .data
                .iter()
                .map(|v| T::from_f64(v.to_f64().unwrap()).unwrap())
                .collect(),
        }
    }
}

fn check_layout(sh_degree: u8, channels: u8) -> Result<(), VolumeError> {
    if sh_degree > MAX_SH_DEGREE {
        return Err(VolumeError::InvalidParameter(format!(
            "SH degree {sh_degree} exceeds {MAX_SH_DEGREE}"
        )));
    }
    if channels == 0 || channels > MAX_CHANNELS {
        return Err(VolumeError::InvalidParameter(format!(
            "channel count {channels} outside 1..={MAX_CHANNELS}"
        )));
    }
    Ok(())
}
