//! Analytic synthetic subjects, a dense reference ray marcher, and
//! multi-view scene generation.

mod field;
mod march;
mod random;
mod scene;

pub use field::{Capsule, Field, FuzzySphere, PosedCapsule, VoxelGridField};
pub use march::{march_image, march_ray, Marched};
pub use random::{random_asset, random_cells, random_skeleton, random_weights, RandomAssetSpec};
pub use scene::{
    capsule_bone_transforms, capsule_mesh, capsule_skeleton, default_capsule, make_synthetic_scene, ring_cameras,
    sphere_cameras, Subject, SynthFrame, SynthSpec, SyntheticScene, SCENE_HALF_EXTENT,
};
