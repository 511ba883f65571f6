//! `.scene.json` manifests: cameras, per-frame image paths and pose
//! references, and world bounds. Paths are relative to the manifest.
//!
//! ```json
//! {
//!   "bounds": {"min": [-1, -1, -1], "max": [1, 1, 1]},
//!   "cameras": [{"name": "c0", "fx": 120, "fy": 120, "cx": 64, "cy": 64,
//!                "width": 128, "height": 128,
//!                "world_to_camera": {"rotation": [1, 0, 0, 0], "translation": [0, 0, 3]}}],
//!   "skeleton": "rig.skel.json",
//!   "pose_clip": "poses.clip.json",
//!   "frames": [{"pose": null, "images": ["c0_f0.png"]}],
//!   "holdout_cameras": []
//! }
//! ```
//!
//! A frame's `pose` indexes the clip; `null` is the canonical pose. Image
//! lists are parallel to `cameras`, with `null` for missing views.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::json::unit_quaternion;
use super::{load_clip, load_skeleton, read_file, read_png_rgba, write_file, AssetError, PoseClip};
use crate::fit::{FitDataset, ProbeView, TrainFrame, TrainView};
use crate::geometry::{Camera, RigidTransform, Vec3};
use crate::rigging::{Pose, Skeleton};
use crate::volume::{AlphaMask, GridSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsEntry {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformEntry {
    /// `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for TransformEntry {
    fn from(t: &RigidTransform) -> Self {
        Self {
            rotation: t.rotation_wxyz(),
            translation: t.translation.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub world_to_camera: TransformEntry,
}

impl From<&Camera> for CameraEntry {
    fn from(c: &Camera) -> Self {
        Self {
            name: None,
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            world_to_camera: (&c.world_to_camera).into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub pose: Option<usize>,
    pub images: Vec<Option<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub bounds: BoundsEntry,
    pub cameras: Vec<CameraEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose_clip: Option<String>,
    pub frames: Vec<FrameEntry>,
    #[serde(default)]
    pub holdout_cameras: Vec<usize>,
}

impl SceneFile {
    pub fn save(&self, path: &Path) -> Result<(), AssetError> {
        write_file(path, serde_json::to_string_pretty(self).unwrap().as_bytes())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneFrame {
    pub pose: Option<usize>,
    pub images: Vec<Option<PathBuf>>,
}

/// A validated scene with resolved paths.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneManifest {
    pub bounds_min: Vec3,
    pub bounds_max: Vec3,
    pub cameras: Vec<Camera>,
    pub skeleton: Option<Skeleton>,
    pub clip: Option<PoseClip>,
    pub frames: Vec<SceneFrame>,
    pub holdout_cameras: Vec<usize>,
}

pub fn load_scene(path: &Path) -> Result<SceneManifest, AssetError> {
    let text = String::from_utf8(read_file(path)?).map_err(|_| AssetError::Json {
        path: path.to_path_buf(),
        message: "not UTF-8".into(),
    })?;
    let f: SceneFile = serde_json::from_str(&text).map_err(|e| AssetError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    SceneManifest::from_file(f, path.parent().unwrap_or(Path::new(".")), path)
}

impl SceneManifest {
    pub fn from_file(f: SceneFile, dir: &Path, path: &Path) -> Result<Self, AssetError> {
        let bad = |m: String| AssetError::Json {
            path: path.to_path_buf(),
            message: m,
        };
        if f.cameras.is_empty() {
            return Err(bad("scene has no cameras".into()));
        }
        let cameras = f
            .cameras
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w2c = RigidTransform::new(
                    unit_quaternion(c.world_to_camera.rotation, path)?,
                    Vec3::from(c.world_to_camera.translation),
                );
                Camera::new(c.fx, c.fy, c.cx, c.cy, c.width, c.height, w2c)
                    .map_err(|e| bad(format!("camera {i}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (bmin, bmax) = (Vec3::from(f.bounds.min), Vec3::from(f.bounds.max));
        if (0..3).any(|a| !(bmax[a] > bmin[a])) {
            return Err(bad("bounds are empty".into()));
        }
        let skeleton = f.skeleton.as_ref().map(|s| load_skeleton(&dir.join(s))).transpose()?;
        let clip = f.pose_clip.as_ref().map(|s| load_clip(&dir.join(s))).transpose()?;
        if let (Some(s), Some(c)) = (&skeleton, &clip) {
            if c.joint_count() != s.len() {
                return Err(bad(format!(
                    "clip has {} joints, skeleton has {}",
                    c.joint_count(),
                    s.len()
                )));
            }
        }
        let mut frames = Vec::with_capacity(f.frames.len());
        for (fi, fr) in f.frames.into_iter().enumerate() {
            if let Some(p) = fr.pose {
                let n = clip.as_ref().map_or(0, |c| c.frames.len());
                if p >= n {
                    return Err(bad(format!("frame {fi} references pose {p} of {n}")));
                }
            }
            if fr.images.len() != cameras.len() {
                return Err(bad(format!(
                    "frame {fi} lists {} images for {} cameras",
                    fr.images.len(),
                    cameras.len()
                )));
            }
            let images = fr
                .images
                .into_iter()
                .map(|i| {
                    i.map(|rel| {
                        let p = dir.join(rel);
                        if p.is_file() {
                            Ok(p)
                        } else {
                            Err(AssetError::io(
                                &p,
                                std::io::Error::new(std::io::ErrorKind::NotFound, "referenced image missing"),
                            ))
                        }
                    })
                    .transpose()
                })
                .collect::<Result<Vec<_>, _>>()?;
            frames.push(SceneFrame { pose: fr.pose, images });
        }
        if let Some(h) = f.holdout_cameras.iter().find(|h| **h >= cameras.len()) {
            return Err(bad(format!("holdout camera {h} does not exist")));
        }
        Ok(Self {
            bounds_min: bmin,
            bounds_max: bmax,
            cameras,
            skeleton,
            clip,
            frames,
            holdout_cameras: f.holdout_cameras,
        })
    }

    /// Cubic grid enclosing the bounds.
    pub fn grid(&self, resolution: u32) -> Result<GridSpec, crate::Error> {
        let c = (self.bounds_min + self.bounds_max) * 0.5;
        let size = (self.bounds_max - self.bounds_min).max();
        Ok(GridSpec::cube(resolution, c.into(), size)?)
    }

    pub fn pose(&self, frame: usize) -> Option<Pose> {
        let p = self.frames[frame].pose?;
        self.clip.as_ref().map(|c| c.frames[p].clone())
    }

    fn is_canonical(&self, frame: usize) -> bool {
        match self.pose(frame) {
            None => true,
            Some(p) => p.is_canonical(),
        }
    }

    /// Alpha mattes of every canonical-pose image, for carving.
    pub fn carve_views(&self) -> Result<Vec<(Camera, AlphaMask)>, crate::Error> {
        let mut views = Vec::new();
        for fi in (0..self.frames.len()).filter(|&f| self.is_canonical(f)) {
            for (ci, img) in self.frames[fi].images.iter().enumerate() {
                if let Some(path) = img {
                    let im = read_png_rgba(path)?;
                    let mask = AlphaMask::new(im.width, im.height, im.alpha_mask())?;
                    views.push((self.cameras[ci].clone(), mask));
                }
            }
        }
        Ok(views)
    }

    /// Training frames from non-holdout cameras and probe views from the
    /// holdout ones. Images are premultiplied on load.
    pub fn fit_dataset(&self) -> Result<FitDataset, AssetError> {
        let mut ds = FitDataset::default();
        for fi in 0..self.frames.len() {
            let pose = self.pose(fi);
            let mut views = Vec::new();
            for (ci, img) in self.frames[fi].images.iter().enumerate() {
                let Some(path) = img else { continue };
                let image = read_png_rgba(path)?;
                let camera = self.cameras[ci].clone();
                if self.holdout_cameras.contains(&ci) {
                    ds.probes.push(ProbeView {
                        pose: pose.clone(),
                        camera,
                        image,
                    });
                } else {
                    views.push(TrainView { camera, image });
                }
            }
            ds.frames.push(TrainFrame { pose, views });
        }
        Ok(ds)
    }
}
