use rayon::prelude::*;

use super::RayGradient;
use crate::geometry::{Ray, MAX_SH_COEFFS};
use crate::render::{basis_for, IntegrationTrace, LiveVolume};
use crate::volume::{Flut, MAX_CHANNELS};
use crate::Real;

/// Dense gradient congruent to a FLUT, tracking which entries a batch
/// touched so clearing and the optimizer step stay sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct GradBuffer<S> {
    stride: usize,
    data: Vec<S>,
    touched: Vec<bool>,
    touched_list: Vec<u32>,
}

impl<S: Real> GradBuffer<S> {
    pub fn new(len: usize, stride: usize) -> Self {
        Self {
            stride,
            data: vec![S::zero(); len * stride],
            touched: vec![false; len],
            touched_list: Vec::new(),
        }
    }

    pub fn for_flut(flut: &Flut<S>) -> Self {
        Self::new(flut.len(), flut.stride())
    }

    pub fn len(&self) -> usize {
        self.touched.len()
    }

    pub fn is_empty(&self) -> bool {
        self.touched.is_empty()
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn entry(&self, i: u32) -> &[S] {
        let s = self.stride;
        &self.data[i as usize * s..(i as usize + 1) * s]
    }

    /// Touched entries in first-touch order.
    pub fn touched(&self) -> &[u32] {
        &self.touched_list
    }

    pub fn is_touched(&self, i: u32) -> bool {
        self.touched[i as usize]
    }

    #[inline]
    pub fn add(&mut self, i: u32, block: &[S]) {
        let s = self.stride;
        if !self.touched[i as usize] {
            self.touched[i as usize] = true;
            self.touched_list.push(i);
        }
        for (d, v) in self.data[i as usize * s..(i as usize + 1) * s].iter_mut().zip(block) {
            *d = *d + *v;
        }
    }

    /// Zeroes touched entries only.
    pub fn clear(&mut self) {
        let s = self.stride;
        for &i in &self.touched_list {
            self.data[i as usize * s..(i as usize + 1) * s].fill(S::zero());
            self.touched[i as usize] = false;
        }
        self.touched_list.clear();
    }

    /// Adds every touched entry of `other`.
    pub fn merge(&mut self, other: &GradBuffer<S>) {
        for &i in &other.touched_list {
            self.add(i, other.entry(i));
        }
    }
}

/// How per-ray gradients are summed into the shared buffer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    /// Fixed ray order; bit-identical for any thread count.
    #[default]
    Deterministic,
    /// Per-thread partial buffers merged in scheduling order; the last bits
    /// may vary between runs.
    Fast,
}

/// Gradient of `g_color . F + g_alpha * A` for one traced ray, emitted per
/// hit as a block laid out like a FLUT entry.
///
/// With `e_i = g_color . S_i + g_alpha`, the density term is
/// `delta_i * (T_{i+1} e_i - sum_{j>i} alpha_j e_j)` and coefficient
/// `k[h][c]` gets `g_color[c] * alpha_i * Y_h`.
pub fn backward_ray<S: Real>(
    flut: &Flut<S>,
    live: Option<&LiveVolume>,
    ray: &Ray,
    trace: &IntegrationTrace<S>,
    grad: &RayGradient<S>,
    mut emit: impl FnMut(u32, &[S]),
) {
    let hits = &trace.hits;
    if hits.is_empty() || grad.is_zero() {
        return;
    }
    let channels = flut.channels();
    let degree = flut.sh_degree();
    let n_coeffs = flut.sh_coeff_count();
    let per_voxel = live.is_some_and(|l| l.has_rotations());
    let shared = basis_for::<S>(&ray.direction, degree);
    let basis_of = |i: u32| -> [S; MAX_SH_COEFFS] {
        if per_voxel {
            basis_for::<S>(&live.unwrap().canonical_direction(i, &ray.direction), degree)
        } else {
            shared
        }
    };

    // e_i for every hit.
    let mut feature = [S::zero(); MAX_CHANNELS as usize];
    let e: Vec<S> = hits
        .iter()
        .map(|h| {
            flut.eval_into(h.flut_index as usize, &basis_of(h.flut_index), &mut feature);
            let dot: S = feature[..channels].iter().zip(&grad.color).map(|(f, g)| *f * *g).sum();
            dot + grad.alpha
        })
        .collect();

    let mut block = vec![S::zero(); flut.stride()];
    let mut suffix = S::zero();
    let mut dsigma = vec![S::zero(); hits.len()];
    for (k, h) in hits.iter().enumerate().rev() {
        let sigma = flut.density(h.flut_index as usize);
        let t_next = h.transmittance * (-(sigma * h.delta)).exp();
        dsigma[k] = h.delta * (t_next * e[k] - suffix);
        suffix = suffix + h.alpha * e[k];
    }
    for (k, h) in hits.iter().enumerate() {
        let basis = basis_of(h.flut_index);
        for (hh, y) in basis.iter().enumerate().take(n_coeffs) {
            let w = h.alpha * *y;
            for c in 0..channels {
                block[hh * channels + c] = grad.color[c] * w;
            }
        }
        *block.last_mut().unwrap() = dsigma[k];
        emit(h.flut_index, &block);
    }
}

/// Accumulates the gradients of a batch of traced rays into `out`.
pub fn backward<S: Real>(
    flut: &Flut<S>,
    live: Option<&LiveVolume>,
    rays: &[Ray],
    traces: &[IntegrationTrace<S>],
    grads: &[RayGradient<S>],
    reduction: Reduction,
    out: &mut GradBuffer<S>,
) {
    assert!(rays.len() == traces.len() && rays.len() == grads.len());
    match reduction {
        Reduction::Deterministic => {
            const CHUNK: usize = 1024;
            let stride = flut.stride();
            for start in (0..rays.len()).step_by(CHUNK) {
                let end = (start + CHUNK).min(rays.len());
                let per_ray: Vec<(Vec<u32>, Vec<S>)> = (start..end)
                    .into_par_iter()
                    .map(|r| {
                        let mut idx = Vec::with_capacity(traces[r].hits.len());
                        let mut vals = Vec::with_capacity(traces[r].hits.len() * stride);
                        backward_ray(flut, live, &rays[r], &traces[r], &grads[r], |i, b| {
                            idx.push(i);
                            vals.extend_from_slice(b);
                        });
                        (idx, vals)
                    })
                    .collect();
                for (idx, vals) in &per_ray {
                    for (k, &i) in idx.iter().enumerate() {
                        out.add(i, &vals[k * stride..(k + 1) * stride]);
                    }
                }
            }
        }
        Reduction::Fast => {
            let (len, stride) = (out.len(), out.stride());
            let partial = (0..rays.len())
                .into_par_iter()
                .fold(
                    || GradBuffer::new(len, stride),
                    |mut buf, r| {
                        backward_ray(flut, live, &rays[r], &traces[r], &grads[r], |i, b| buf.add(i, b));
                        buf
                    },
                )
                .reduce(
                    || GradBuffer::new(len, stride),
                    |mut a, b| {
                        a.merge(&b);
                        a
                    },
                );
            out.merge(&partial);
        }
    }
}
