//! JSON text messages of the `/session` socket. Every frame response is a
//! `frame_meta` text message followed by one binary message holding the
//! PNG.

use serde::{Deserialize, Deserializer, Serialize};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orbit {
    /// Radians from +x towards +y.
    pub azimuth: f64,
    /// Radians above the xy plane.
    pub elevation: f64,
    pub radius: f64,
    #[serde(default)]
    pub target: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extrinsics {
    /// `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

fn present<'de, D, T>(d: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(d).map(Some)
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    SetPose {
        /// Per-joint local XYZ Euler angles.
        rotations: Vec<[f64; 3]>,
        #[serde(default)]
        root_rotation: [f64; 3],
        #[serde(default)]
        root_translation: [f64; 3],
    },
    SetCamera {
        #[serde(default)]
        orbit: Option<Orbit>,
        /// Raw extrinsics; takes precedence over `orbit`.
        #[serde(default)]
        world_to_camera: Option<Extrinsics>,
        #[serde(default)]
        width: Option<u32>,
        #[serde(default)]
        height: Option<u32>,
        /// Vertical field of view in radians.
        #[serde(default)]
        fov_y: Option<f64>,
    },
    SetOptions {
        #[serde(default)]
        lambda_th: Option<f64>,
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        early_stop: Option<bool>,
        /// `null` clears the background.
        #[serde(default, deserialize_with = "present")]
        background: Option<Option<[f32; 3]>>,
    },
    RequestFrame {
        seq: u64,
    },
    GetSkeleton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageMillis {
    pub warp: f64,
    pub build_octree: f64,
    pub volume_render: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointInfo {
    pub name: String,
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    FrameMeta {
        seq: u64,
        render_ms: f64,
        width: u32,
        height: u32,
        stages: StageMillis,
    },
    Superseded {
        seq: u64,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
        category: String,
        message: String,
    },
    Skeleton {
        asset_id: String,
        voxels: usize,
        joints: Vec<JointInfo>,
    },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}
