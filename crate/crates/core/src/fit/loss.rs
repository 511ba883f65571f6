use smallvec::SmallVec;

use super::GradBuffer;
use crate::render::RaySample;
use crate::volume::{Flut, MAX_CHANNELS};
use crate::Real;

/// Ground truth for one ray, color premultiplied by alpha.
#[derive(Clone, Debug, PartialEq)]
pub struct RayTarget<S> {
    pub color: SmallVec<[S; MAX_CHANNELS as usize]>,
    pub alpha: S,
}

/// Upstream gradient of the loss with respect to one ray's outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RayGradient<S> {
    pub color: SmallVec<[S; MAX_CHANNELS as usize]>,
    pub alpha: S,
}

impl<S: Real> RayGradient<S> {
    pub fn zeros(channels: usize) -> Self {
        Self {
            color: SmallVec::from_elem(S::zero(), channels),
            alpha: S::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.alpha == S::zero() && self.color.iter().all(|v| *v == S::zero())
    }
}

/// Sign with `sign(0) = 0`, the L1 subgradient used throughout.
#[inline]
pub fn l1_sign<S: Real>(x: S) -> S {
    if x > S::zero() {
        S::one()
    } else if x < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

/// Mean over rays of the color L1 plus the alpha L1.
pub fn loss_rgba<S: Real>(pred: &[RaySample<S>], gt: &[RayTarget<S>]) -> S {
    loss_rgba_with_grad(pred, gt).0
}

/// [`loss_rgba`] and its gradient with respect to every ray's outputs.
pub fn loss_rgba_with_grad<S: Real>(pred: &[RaySample<S>], gt: &[RayTarget<S>]) -> (S, Vec<RayGradient<S>>) {
    assert_eq!(pred.len(), gt.len(), "prediction and target counts differ");
    if pred.is_empty() {
        return (S::zero(), Vec::new());
    }
    let inv_n = S::one() / S::from_usize(pred.len()).unwrap();
    let mut total = S::zero();
    let mut grads = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(gt) {
        let mut g = RayGradient::zeros(p.color.len());
        let mut l = S::zero();
        for ((pc, tc), gc) in p.color.iter().zip(&t.color).zip(g.color.iter_mut()) {
            let r = *pc - *tc;
            l = l + r.abs();
            *gc = l1_sign(r) * inv_n;
        }
        let ra = p.alpha - t.alpha;
        l = l + ra.abs();
        g.alpha = l1_sign(ra) * inv_n;
        total = total + l;
        grads.push(g);
    }
    (total * inv_n, grads)
}

/// Mean over collision pairs of the per-component L1 distance between the
/// two entries' full feature blocks. Empty pairs give zero.
pub fn loss_vrt<S: Real>(pairs: &[(u32, u32)], flut: &Flut<S>) -> S {
    if pairs.is_empty() {
        return S::zero();
    }
    let b = S::from_usize(flut.stride()).unwrap();
    let mut total = S::zero();
    for &(w, l) in pairs {
        let d: S = flut
            .entry(w as usize)
            .iter()
            .zip(flut.entry(l as usize))
            .map(|(a, c)| (*a - *c).abs())
            .sum();
        total = total + d / b;
    }
    total / S::from_usize(pairs.len()).unwrap()
}

/// Adds `weight * d loss_vrt / d flut` into `grad`. Both entries of a pair
/// receive gradient.
pub fn vrt_backward<S: Real>(pairs: &[(u32, u32)], flut: &Flut<S>, weight: S, grad: &mut GradBuffer<S>) {
    if pairs.is_empty() || weight == S::zero() {
        return;
    }
    let stride = flut.stride();
    let scale = weight / (S::from_usize(pairs.len() * stride).unwrap());
    let mut gw = vec![S::zero(); stride];
    let mut gl = vec![S::zero(); stride];
    for &(w, l) in pairs {
        for (k, (a, c)) in flut.entry(w as usize).iter().zip(flut.entry(l as usize)).enumerate() {
            let s = l1_sign(*a - *c) * scale;
            gw[k] = s;
            gl[k] = -s;
        }
        grad.add(w, &gw);
        grad.add(l, &gl);
    }
}

/// Peak signal-to-noise ratio over premultiplied RGBA values in `[0, 1]`.
pub fn psnr(pred: &[f32], gt: &[f32]) -> f64 {
    assert_eq!(pred.len(), gt.len());
    let mse = pred
        .iter()
        .zip(gt)
        .map(|(a, b)| {
            let d = *a as f64 - *b as f64;
            d * d
        })
        .sum::<f64>()
        / pred.len().max(1) as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    }
}
