//! Vectors, rigid transforms, pinhole cameras, rays and the real SH basis.

mod camera;
mod sh;
mod transform;

pub use camera::{Camera, Ray};
pub use sh::{eval_sh_into, SH_C0, sh_basis, sh_count, ShBasis, MAX_SH_COEFFS, MAX_SH_DEGREE};
pub use transform::RigidTransform;

pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("direction is not unit length (norm {0})")]
    NonUnitDirection(f64),
    #[error("SH degree {0} unsupported (max 4)")]
    UnsupportedShDegree(u8),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
}
