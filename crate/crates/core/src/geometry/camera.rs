use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

use super::{GeometryError, RigidTransform, Vec3};

/// A ray `o + t d` with unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    pub const UNIT_TOLERANCE: f64 = 1e-6;

    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        let norm = direction.norm();
        if !((norm - 1.0).abs() <= Self::UNIT_TOLERANCE) {
            return Err(GeometryError::NonUnitDirection(norm));
        }
        Ok(Self { origin, direction })
    }

    /// Normalizes `direction`; fails only for zero or non-finite input.
    pub fn through(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        let norm = direction.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GeometryError::NonUnitDirection(norm));
        }
        Ok(Self {
            origin,
            direction: direction / norm,
        })
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Pinhole camera. Camera space looks down +z with +x right and +y down;
/// `world_to_camera` maps world points into that frame.
///
/// Pixel `(i, j)` covers the image-plane square `[i, i+1) x [j, j+1)` and
/// its center sits at `(i + 0.5, j + 0.5)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub world_to_camera: RigidTransform,
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        world_to_camera: RigidTransform,
    ) -> Result<Self, GeometryError> {
        let ok = fx > 0.0
            && fy > 0.0
            && width > 0
            && height > 0
            && (0.0..width as f64).contains(&cx)
            && (0.0..height as f64).contains(&cy);
        if !ok {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "fx={fx} fy={fy} cx={cx} cy={cy} size={width}x{height}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            world_to_camera,
        })
    }

    /// Camera at `eye` looking at `target`, with `up` roughly opposite to
    /// image +y. The principal point is the image center.
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        vertical_fov: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::Degenerate("eye coincides with target".into()))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| GeometryError::Degenerate("up is parallel to view axis".into()))?;
        let down = forward.cross(&right);
        let cam_to_world = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[
            right, down, forward,
        ]));
        let rotation = UnitQuaternion::from_rotation_matrix(&cam_to_world);
        let camera_to_world = RigidTransform::new(rotation, eye);
        let f = 0.5 * height as f64 / (0.5 * vertical_fov).tan();
        Self::new(
            f,
            f,
            width as f64 * 0.5,
            height as f64 * 0.5,
            width,
            height,
            camera_to_world.inverse(),
        )
    }

    /// Camera on a sphere around `target` with world +z up. Azimuth is
    /// measured from +x towards +y, elevation from the xy plane (radians).
    #[allow(clippy::too_many_arguments)]
    pub fn orbit(
        azimuth: f64,
        elevation: f64,
        radius: f64,
        target: Vec3,
        vertical_fov: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::Degenerate(format!("orbit radius {radius}")));
        }
        let eye = target
            + Vec3::new(
                elevation.cos() * azimuth.cos(),
                elevation.cos() * azimuth.sin(),
                elevation.sin(),
            ) * radius;
        Self::look_at(eye, target, Vec3::z(), vertical_fov, width, height)
    }

    pub fn camera_to_world(&self) -> RigidTransform {
        self.world_to_camera.inverse()
    }

    pub fn center(&self) -> Vec3 {
        self.camera_to_world().translation
    }

    pub fn forward(&self) -> Vec3 {
        self.world_to_camera.rotation.inverse() * Vector3::z()
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Ray through the center of pixel `px`; `px = (i, j)` for integer
    /// pixel indices.
    pub fn ray_from_pixel(&self, px: [f64; 2]) -> Ray {
        let x = (px[0] + 0.5 - self.cx) / self.fx;
        let y = (px[1] + 0.5 - self.cy) / self.fy;
        let inv_rot = self.world_to_camera.rotation.inverse();
        let dir = inv_rot * Vector3::new(x, y, 1.0).normalize();
        Ray {
            origin: self.center(),
            direction: dir,
        }
    }

    /// Continuous image-plane coordinates `(u, v)` of a world point, or
    /// `None` if it lies on or behind the camera plane. Pixel index is
    /// `floor(u), floor(v)`.
    pub fn project_image_plane(&self, p: &Vec3) -> Option<(f64, f64)> {
        let c = self.world_to_camera.transform_point(p);
        if c.z <= 0.0 {
            return None;
        }
        Some((self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy))
    }

    /// Inverse of [`Camera::ray_from_pixel`]: returns the `px` whose ray
    /// passes through `p`.
    pub fn project(&self, p: &Vec3) -> Option<[f64; 2]> {
        self.project_image_plane(p).map(|(u, v)| [u - 0.5, v - 0.5])
    }

    /// Integer pixel containing the projection of `p`, if inside the image.
    pub fn project_to_pixel(&self, p: &Vec3) -> Option<(u32, u32)> {
        let (u, v) = self.project_image_plane(p)?;
        if u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64 {
            Some((u as u32, v as u32))
        } else {
            None
        }
    }

    /// Returns this camera expressed in a frame where the world was
    /// transformed by `world_motion`. Rendering the moved scene with the
    /// returned camera reproduces the original image.
    pub fn followed_by(&self, world_motion: &RigidTransform) -> Camera {
        Camera {
            world_to_camera: self.world_to_camera.compose(&world_motion.inverse()),
            ..self.clone()
        }
    }

    /// Same view with the image resampled to a new size.
    pub fn resized(&self, width: u32, height: u32) -> Camera {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Camera {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
            world_to_camera: self.world_to_camera,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_camera() -> Camera {
        Camera::new(100.0, 100.0, 50.0, 50.0, 100, 100, RigidTransform::identity()).unwrap()
    }

    #[test]
    fn principal_point_maps_to_optical_axis() {
        let cam = Camera::look_at(
            Vector3::new(3.0, -2.0, 1.0),
            Vector3::zeros(),
            Vector3::z(),
            0.8,
            64,
            48,
        )
        .unwrap();
        let ray = cam.ray_from_pixel([cam.cx - 0.5, cam.cy - 0.5]);
        assert!((ray.direction - cam.forward()).norm() < 1e-12);
        let expected = (Vector3::zeros() - Vector3::new(3.0, -2.0, 1.0)).normalize();
        assert!((ray.direction - expected).norm() < 1e-12);
    }

    #[test]
    fn hand_back_projection() {
        let ray = identity_camera().ray_from_pixel([99.5, 49.5]);
        let expected = Vector3::new(0.5, 0.0, 1.0).normalize();
        assert!((ray.direction - expected).norm() < 1e-12);
        assert_eq!(ray.origin, Vector3::zeros());
    }

    #[test]
    fn projection_round_trip() {
        let cam = Camera::look_at(
            Vector3::new(0.0, -4.0, 0.5),
            Vector3::new(0.1, 0.0, 0.0),
            Vector3::z(),
            0.9,
            120,
            80,
        )
        .unwrap();
        for &px in &[[0.0, 0.0], [13.0, 71.0], [119.0, 79.0], [60.25, 40.75]] {
            let ray = cam.ray_from_pixel(px);
            let back = cam.project(&ray.at(1.0)).unwrap();
            assert!((back[0] - px[0]).abs() < 1e-4 && (back[1] - px[1]).abs() < 1e-4);
        }
    }

    #[test]
    fn all_pixel_rays_are_unit() {
        let cam = Camera::look_at(
            Vector3::new(2.0, 2.0, 2.0),
            Vector3::zeros(),
            Vector3::z(),
            1.2,
            37,
            23,
        )
        .unwrap();
        for j in 0..cam.height {
            for i in 0..cam.width {
                let d = cam.ray_from_pixel([i as f64, j as f64]).direction;
                assert!((d.norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn look_at_image_axes() {
        let cam = Camera::look_at(
            Vector3::new(0.0, -5.0, 0.0),
            Vector3::zeros(),
            Vector3::z(),
            0.7,
            64,
            64,
        )
        .unwrap();
        // World +x appears to the right, world +z appears up (smaller v).
        let (u_right, _) = cam.project_image_plane(&Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let (_, v_up) = cam.project_image_plane(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert!(u_right > cam.cx);
        assert!(v_up < cam.cy);
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(Camera::new(0.0, 1.0, 1.0, 1.0, 4, 4, RigidTransform::identity()).is_err());
        assert!(Camera::new(1.0, 1.0, 4.0, 1.0, 4, 4, RigidTransform::identity()).is_err());
        assert!(Ray::new(Vector3::zeros(), Vector3::new(0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn followed_by_preserves_view() {
        let cam = Camera::look_at(
            Vector3::new(1.0, -4.0, 1.0),
            Vector3::zeros(),
            Vector3::z(),
            0.7,
            16,
            16,
        )
        .unwrap();
        let motion = RigidTransform::new(
            RigidTransform::from_euler_xyz(Vector3::new(0.2, 0.4, -1.0)),
            Vector3::new(0.5, 1.0, -2.0),
        );
        let moved = cam.followed_by(&motion);
        let p = Vector3::new(0.3, 0.2, -0.1);
        let a = cam.project(&p).unwrap();
        let b = moved.project(&motion.transform_point(&p)).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
    }
}
