//! Animatable sparse voxel volumes.
//!
//! A character is carved into a sparse voxel set from multi-view alpha
//! mattes, each voxel carries spherical-harmonic color coefficients and a
//! density in a features look-up table ([`volume::Flut`]), voxels follow a
//! skeleton through linear blend skinning ([`rigging`]), and frames are
//! produced by exact per-segment volume integration over a rebuilt octree
//! ([`render`]). The table is fitted to RGBA images by gradient descent
//! through the same renderer ([`fit`]).

pub mod asset;
pub mod assetio;
pub mod fit;
pub mod geometry;
pub mod render;
pub mod rigging;
pub mod synth;
pub mod volume;

mod error;

pub use asset::{Asset, Rig};
pub use error::{Error, ErrorCategory};

/// Floating-point type the renderer and fitter are generic over.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Default
    + Send
    + Sync
    + std::fmt::Debug
    + std::iter::Sum
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}
