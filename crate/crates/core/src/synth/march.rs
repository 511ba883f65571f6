//! Fixed-step dense ray marcher used as the ground-truth renderer for
//! synthetic scenes. It samples the field at step midpoints and shares no
//! code with the octree integrator.

use rayon::prelude::*;

use super::Field;
use crate::geometry::{Camera, Vec3};
use crate::render::RgbaImage;

/// Marching stops once transmittance falls below this.
const MIN_TRANSMITTANCE: f64 = 1e-9;

/// Premultiplied color and alpha along one ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Marched {
    pub color: [f64; 3],
    pub alpha: f64,
}

/// Parametric span of a unit ray inside a sphere, clamped to `t >= 0`.
fn sphere_span(origin: &Vec3, dir: &Vec3, center: &Vec3, radius: f64) -> Option<(f64, f64)> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.dot(&oc) - radius * radius;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let (t0, t1) = ((-b - s).max(0.0), -b + s);
    (t1 > t0).then_some((t0, t1))
}

/// Marches a unit-direction ray with step `step`.
pub fn march_ray(field: &dyn Field, origin: &Vec3, dir: &Vec3, step: f64) -> Marched {
    let mut out = Marched {
        color: [0.0; 3],
        alpha: 0.0,
    };
    let (center, radius) = field.support();
    let Some((t0, t1)) = sphere_span(origin, dir, &center, radius) else {
        return out;
    };
    let steps = ((t1 - t0) / step).ceil() as usize;
    let mut transmittance = 1.0;
    for k in 0..steps {
        let a = t0 + k as f64 * step;
        let b = (a + step).min(t1);
        let p = origin + dir * (0.5 * (a + b));
        let sigma = field.density(&p);
        if sigma <= 0.0 {
            continue;
        }
        let absorbed = 1.0 - (-sigma * (b - a)).exp();
        let w = transmittance * absorbed;
        let c = field.color(&p, dir);
        for i in 0..3 {
            out.color[i] += w * c[i];
        }
        out.alpha += w;
        transmittance *= 1.0 - absorbed;
        if transmittance < MIN_TRANSMITTANCE {
            break;
        }
    }
    out
}

/// Renders every pixel center of `camera`.
pub fn march_image(field: &dyn Field, camera: &Camera, step: f64) -> RgbaImage {
    let w = camera.width as usize;
    let mut data = vec![0f32; camera.pixel_count() * 4];
    data.par_chunks_mut(w * 4).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let ray = camera.ray_from_pixel([x as f64, y as f64]);
            let m = march_ray(field, &ray.origin, &ray.direction, step);
            for c in 0..3 {
                row[x * 4 + c] = m.color[c] as f32;
            }
            row[x * 4 + 3] = m.alpha as f32;
        }
    });
    RgbaImage {
        width: camera.width,
        height: camera.height,
        data,
    }
}
