//! Synthetic multi-view scenes: camera rigs around an analytic subject,
//! ground-truth images from the dense marcher, and the files the command
//! line tools consume.

use std::path::{Path, PathBuf};

use super::{march_image, Capsule, Field, FuzzySphere, PosedCapsule};
use crate::assetio::{
    encode_png, save_clip, save_mesh, save_skeleton, write_file, AssetError, BoundsEntry, CameraEntry, FrameEntry,
    MeshFile, PoseClip, SceneFile,
};
use crate::fit::{FitDataset, ProbeView, TrainFrame, TrainView};
use crate::geometry::{Camera, RigidTransform, Vec3};
use crate::render::RgbaImage;
use crate::rigging::{forward_kinematics, Joint, Pose, Skeleton};
use crate::volume::{AlphaMask, GridSpec};
use crate::Error;

/// Scenes live in the cube `[-SCENE_HALF_EXTENT, SCENE_HALF_EXTENT]^3`.
pub const SCENE_HALF_EXTENT: f64 = 1.0;
const CAMERA_DISTANCE: f64 = 3.2;

#[derive(Clone, Debug, PartialEq)]
pub enum Subject {
    Sphere(FuzzySphere),
    Capsule(Capsule),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub subject: Subject,
    /// Grid resolution the scene is meant for; sets the marcher step.
    pub resolution: u32,
    pub image_size: u32,
    pub views: usize,
    /// Number of the views held out as probes.
    pub holdout: usize,
    /// Extra posed frames (capsule only); frame 0 is always canonical.
    pub poses: Vec<Pose>,
    /// Marcher step is `cell_size / step_divisor`.
    pub step_divisor: f64,
}

impl SynthSpec {
    pub fn sphere(resolution: u32, image_size: u32, views: usize) -> Self {
        Self {
            subject: Subject::Sphere(FuzzySphere::default()),
            resolution,
            image_size,
            views,
            holdout: 0,
            poses: Vec::new(),
            step_divisor: 64.0,
        }
    }

    pub fn capsule(resolution: u32, image_size: u32, views: usize, poses: Vec<Pose>) -> Self {
        Self {
            subject: Subject::Capsule(default_capsule()),
            resolution,
            image_size,
            views,
            holdout: 0,
            poses,
            step_divisor: 64.0,
        }
    }
}

pub fn default_capsule() -> Capsule {
    Capsule::new(0.5, 0.17, 0.04, 40.0, 0.35, 7)
}

#[derive(Clone, Debug)]
pub struct SynthFrame {
    pub pose: Option<usize>,
    pub images: Vec<RgbaImage>,
}

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub grid: GridSpec,
    pub cameras: Vec<Camera>,
    pub holdout_cameras: Vec<usize>,
    pub skeleton: Option<Skeleton>,
    pub clip: Option<PoseClip>,
    pub mesh: Option<MeshFile>,
    pub frames: Vec<SynthFrame>,
}

/// `n` cameras on a Fibonacci sphere looking at the origin.
pub fn sphere_cameras(n: usize, distance: f64, image_size: u32) -> Result<Vec<Camera>, Error> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let fov = 2.0 * (1.15 * SCENE_HALF_EXTENT / distance).atan();
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let eye = Vec3::new(r * phi.cos(), r * phi.sin(), z) * distance;
            let up = if z.abs() > 0.95 { Vec3::y() } else { Vec3::z() };
            Ok(Camera::look_at(eye, Vec3::zeros(), up, fov, image_size, image_size)?)
        })
        .collect()
}

/// `n` cameras evenly spaced on a horizontal circle looking at the origin.
pub fn ring_cameras(n: usize, distance: f64, elevation: f64, image_size: u32) -> Result<Vec<Camera>, Error> {
    let fov = 2.0 * (1.15 * SCENE_HALF_EXTENT / distance).atan();
    (0..n)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            let eye = Vec3::new(a.cos() * elevation.cos(), a.sin() * elevation.cos(), elevation.sin()) * distance;
            Ok(Camera::look_at(eye, Vec3::zeros(), Vec3::z(), fov, image_size, image_size)?)
        })
        .collect()
}

/// Two-joint chain: root at the left end, elbow at the capsule middle.
pub fn capsule_skeleton(capsule: &Capsule) -> Skeleton {
    let l = capsule.half_length;
    Skeleton::new(vec![
        Joint {
            name: "root".into(),
            parent: None,
            bind_local: RigidTransform::from_translation(Vec3::new(-l, 0.0, 0.0)),
        },
        Joint {
            name: "elbow".into(),
            parent: Some(0),
            bind_local: RigidTransform::from_translation(Vec3::new(l, 0.0, 0.0)),
        },
    ])
    .expect("static skeleton is valid")
}

/// Surface samples of the capsule with weights blending linearly across
/// a narrow band around the elbow.
pub fn capsule_mesh(capsule: &Capsule) -> MeshFile {
    let (l, r) = (capsule.half_length, capsule.radius + capsule.falloff);
    let band = 0.05;
    let mut vertices = Vec::new();
    let rings = 24;
    let around = 12;
    for i in 0..=rings {
        let x = -l + 2.0 * l * i as f64 / rings as f64;
        for k in 0..around {
            let a = std::f64::consts::TAU * k as f64 / around as f64;
            vertices.push([x, r * a.cos(), r * a.sin()]);
        }
    }
    for s in [-1.0, 1.0] {
        vertices.push([s * (l + r), 0.0, 0.0]);
    }
    let weights = vertices
        .iter()
        .map(|v| {
            let t = ((v[0] + band) / (2.0 * band)).clamp(0.0, 1.0);
            if t <= 0.0 {
                vec![(0, 1.0)]
            } else if t >= 1.0 {
                vec![(1, 1.0)]
            } else {
                vec![(0, 1.0 - t), (1, t)]
            }
        })
        .collect();
    MeshFile { vertices, weights }
}

/// Rigid per-bone transforms of a posed capsule, canonical to live.
pub fn capsule_bone_transforms(skeleton: &Skeleton, pose: &Pose) -> Result<[RigidTransform; 2], Error> {
    let live = forward_kinematics(skeleton, pose)?;
    let canon = skeleton.canonical_transforms();
    Ok(std::array::from_fn(|j| live[j].compose(&canon[j].inverse())))
}

pub fn make_synthetic_scene(spec: &SynthSpec) -> Result<SyntheticScene, Error> {
    if spec.views == 0 || spec.holdout >= spec.views {
        return Err(Error::InvalidArgument(format!(
            "need at least one training view ({} views, {} held out)",
            spec.views, spec.holdout
        )));
    }
    if !(spec.step_divisor >= 1.0) {
        return Err(Error::InvalidArgument("step divisor must be >= 1".into()));
    }
    let grid = GridSpec::cube(spec.resolution, [0.0; 3], 2.0 * SCENE_HALF_EXTENT)?;
    let step = grid.cell_size() / spec.step_divisor;
    let cameras = sphere_cameras(spec.views, CAMERA_DISTANCE, spec.image_size)?;
    let holdout_cameras = (0..spec.holdout).map(|i| i * spec.views / spec.holdout.max(1)).collect();
    let render_all = |field: &dyn Field| cameras.iter().map(|c| march_image(field, c, step)).collect::<Vec<_>>();

    match &spec.subject {
        Subject::Sphere(s) => {
            if !spec.poses.is_empty() {
                return Err(Error::InvalidArgument("the sphere subject has no rig".into()));
            }
            Ok(SyntheticScene {
                grid,
                holdout_cameras,
                skeleton: None,
                clip: None,
                mesh: None,
                frames: vec![SynthFrame {
                    pose: None,
                    images: render_all(s),
                }],
                cameras,
            })
        }
        Subject::Capsule(c) => {
            let skeleton = capsule_skeleton(c);
            let mut frames = vec![SynthFrame {
                pose: None,
                images: render_all(&PosedCapsule::new(c, [RigidTransform::identity(); 2])),
            }];
            for (i, pose) in spec.poses.iter().enumerate() {
                let field = PosedCapsule::new(c, capsule_bone_transforms(&skeleton, pose)?);
                frames.push(SynthFrame {
                    pose: Some(i),
                    images: render_all(&field),
                });
            }
            let clip = (!spec.poses.is_empty()).then(|| PoseClip {
                fps: 24.0,
                frames: spec.poses.clone(),
            });
            Ok(SyntheticScene {
                grid,
                holdout_cameras,
                mesh: Some(capsule_mesh(c)),
                skeleton: Some(skeleton),
                clip,
                frames,
                cameras,
            })
        }
    }
}

impl SyntheticScene {
    fn pose(&self, frame: &SynthFrame) -> Option<Pose> {
        frame.pose.map(|p| self.clip.as_ref().expect("posed frame without clip").frames[p].clone())
    }

    /// Alpha mattes of the canonical frame's training views.
    pub fn carve_views(&self) -> Vec<(Camera, AlphaMask)> {
        let f = &self.frames[0];
        (0..self.cameras.len())
            .filter(|i| !self.holdout_cameras.contains(i))
            .map(|i| {
                let im = &f.images[i];
                (
                    self.cameras[i].clone(),
                    AlphaMask::new(im.width, im.height, im.alpha_mask()).expect("sizes match"),
                )
            })
            .collect()
    }

    pub fn fit_dataset(&self) -> FitDataset {
        let mut ds = FitDataset::default();
        for f in &self.frames {
            let pose = self.pose(f);
            let mut views = Vec::new();
            for (ci, image) in f.images.iter().enumerate() {
                if self.holdout_cameras.contains(&ci) {
                    ds.probes.push(ProbeView {
                        pose: pose.clone(),
                        camera: self.cameras[ci].clone(),
                        image: image.clone(),
                    });
                } else {
                    views.push(TrainView {
                        camera: self.cameras[ci].clone(),
                        image: image.clone(),
                    });
                }
            }
            ds.frames.push(TrainFrame { pose, views });
        }
        ds
    }

    /// Writes `<stem>.scene.json` plus images and rig files into `dir`
    /// and returns the manifest path.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf, AssetError> {
        std::fs::create_dir_all(dir).map_err(|e| AssetError::io(dir, e))?;
        let mut scene = SceneFile {
            bounds: BoundsEntry {
                min: self.grid.min().into(),
                max: self.grid.max().into(),
            },
            cameras: self
                .cameras
                .iter()
                .enumerate()
                .map(|(i, c)| CameraEntry {
                    name: Some(format!("cam{i:03}")),
                    ..CameraEntry::from(c)
                })
                .collect(),
            skeleton: None,
            pose_clip: None,
            frames: Vec::new(),
            holdout_cameras: self.holdout_cameras.clone(),
        };
        if let Some(s) = &self.skeleton {
            let name = format!("{stem}.skel.json");
            save_skeleton(&dir.join(&name), s)?;
            scene.skeleton = Some(name);
        }
        if let Some(c) = &self.clip {
            let name = format!("{stem}.clip.json");
            save_clip(&dir.join(&name), c)?;
            scene.pose_clip = Some(name);
        }
        if let Some(m) = &self.mesh {
            save_mesh(&dir.join(format!("{stem}.mesh.json")), m)?;
        }
        for (fi, f) in self.frames.iter().enumerate() {
            let mut images = Vec::with_capacity(f.images.len());
            for (ci, im) in f.images.iter().enumerate() {
                let name = format!("{stem}_f{fi:03}_c{ci:03}.png");
                write_file(&dir.join(&name), &encode_png(im.width, im.height, &im.to_straight_rgba8())?)?;
                images.push(Some(name));
            }
            scene.frames.push(FrameEntry { pose: f.pose, images });
        }
        let path = dir.join(format!("{stem}.scene.json"));
        scene.save(&path)?;
        Ok(path)
    }
}
