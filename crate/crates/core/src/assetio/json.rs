//! JSON skeletons (`.skel.json`), pose clips (`.clip.json`) and skinning
//! meshes (`.mesh.json`, or an OBJ vertex list plus a weights file).

use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{read_file, write_file, AssetError};
use crate::geometry::{RigidTransform, Vec3};
use crate::rigging::{Joint, Pose, SkinnedMesh, Skeleton};

fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, AssetError> {
    serde_json::from_str(text).map_err(|e| AssetError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_text(path: &Path) -> Result<String, AssetError> {
    String::from_utf8(read_file(path)?).map_err(|_| AssetError::Json {
        path: path.to_path_buf(),
        message: "not UTF-8".into(),
    })
}

fn invalid(path: &Path, message: impl Into<String>) -> AssetError {
    AssetError::Json {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Unit quaternion from `[w, x, y, z]`, rejecting anything far from unit
/// length.
pub(crate) fn unit_quaternion(q: [f64; 4], path: &Path) -> Result<UnitQuaternion<f64>, AssetError> {
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    let n = raw.norm();
    if !((n - 1.0).abs() <= 1e-4) {
        return Err(invalid(path, format!("rotation {q:?} is not a unit quaternion")));
    }
    Ok(UnitQuaternion::from_quaternion(raw))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub name: String,
    /// Parent joint index; `null` for the root.
    pub parent: Option<usize>,
    /// Bind rotation relative to the parent, `[w, x, y, z]`.
    pub rotation: [f64; 4],
    /// Bind translation relative to the parent.
    pub translation: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonFile {
    pub joints: Vec<JointEntry>,
}

pub fn parse_skeleton(text: &str, path: &Path) -> Result<Skeleton, AssetError> {
    let f: SkeletonFile = parse(text, path)?;
    let joints = f
        .joints
        .into_iter()
        .map(|j| {
            Ok(Joint {
                name: j.name,
                parent: j.parent,
                bind_local: RigidTransform::new(unit_quaternion(j.rotation, path)?, Vec3::from(j.translation)),
            })
        })
        .collect::<Result<Vec<_>, AssetError>>()?;
    Skeleton::new(joints).map_err(|e| invalid(path, e.to_string()))
}

pub fn load_skeleton(path: &Path) -> Result<Skeleton, AssetError> {
    parse_skeleton(&read_text(path)?, path)
}

pub fn save_skeleton(path: &Path, skeleton: &Skeleton) -> Result<(), AssetError> {
    let f = SkeletonFile {
        joints: skeleton
            .joints()
            .iter()
            .map(|j| JointEntry {
                name: j.name.clone(),
                parent: j.parent,
                rotation: j.bind_local.rotation_wxyz(),
                translation: j.bind_local.translation.into(),
            })
            .collect(),
    };
    write_file(path, serde_json::to_string_pretty(&f).unwrap().as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipFrame {
    /// Per-joint local Euler angles in radians.
    pub rotations: Vec<[f64; 3]>,
    #[serde(default)]
    pub root_rotation: [f64; 3],
    #[serde(default)]
    pub root_translation: [f64; 3],
}

fn default_order() -> String {
    "XYZ".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipFile {
    pub fps: f64,
    /// Only `"XYZ"` (rotation about x first) is supported.
    #[serde(default = "default_order")]
    pub euler_order: String,
    pub frames: Vec<ClipFrame>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseClip {
    pub fps: f64,
    pub frames: Vec<Pose>,
}

impl PoseClip {
    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.joint_rotations.len())
    }
}

pub fn parse_clip(text: &str, path: &Path) -> Result<PoseClip, AssetError> {
    let f: ClipFile = parse(text, path)?;
    if f.euler_order != "XYZ" {
        return Err(invalid(path, format!("unsupported euler order {}", f.euler_order)));
    }
    if !(f.fps > 0.0 && f.fps.is_finite()) {
        return Err(invalid(path, format!("fps {} must be positive", f.fps)));
    }
    if f.frames.is_empty() {
        return Err(invalid(path, "clip has no frames"));
    }
    let jc = f.frames[0].rotations.len();
    let mut frames = Vec::with_capacity(f.frames.len());
    for (i, fr) in f.frames.into_iter().enumerate() {
        if fr.rotations.len() != jc {
            return Err(invalid(
                path,
                format!("frame {i} has {} joints, frame 0 has {jc}", fr.rotations.len()),
            ));
        }
        let pose = Pose::new(
            fr.rotations.into_iter().map(Vec3::from).collect(),
            Vec3::from(fr.root_rotation),
            Vec3::from(fr.root_translation),
        )
        .map_err(|e| invalid(path, format!("frame {i}: {e}")))?;
        frames.push(pose);
    }
    Ok(PoseClip { fps: f.fps, frames })
}

pub fn load_clip(path: &Path) -> Result<PoseClip, AssetError> {
    parse_clip(&read_text(path)?, path)
}

pub fn save_clip(path: &Path, clip: &PoseClip) -> Result<(), AssetError> {
    let f = ClipFile {
        fps: clip.fps,
        euler_order: default_order(),
        frames: clip
            .frames
            .iter()
            .map(|p| ClipFrame {
                rotations: p.joint_rotations.iter().map(|r| (*r).into()).collect(),
                root_rotation: p.root_rotation.into(),
                root_translation: p.root_translation.into(),
            })
            .collect(),
    };
    write_file(path, serde_json::to_string_pretty(&f).unwrap().as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 3]>,
    /// Per vertex, `[joint, weight]` pairs.
    pub weights: Vec<Vec<(u16, f64)>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    weights: Vec<Vec<(u16, f64)>>,
}

pub fn parse_mesh_json(text: &str, path: &Path) -> Result<SkinnedMesh, AssetError> {
    let f: MeshFile = parse(text, path)?;
    SkinnedMesh::new(f.vertices.into_iter().map(Vec3::from).collect(), f.weights)
        .map_err(|e| invalid(path, e.to_string()))
}

pub fn parse_weights_json(text: &str, path: &Path) -> Result<Vec<Vec<(u16, f64)>>, AssetError> {
    Ok(parse::<WeightsFile>(text, path)?.weights)
}

pub fn load_weights_json(path: &Path) -> Result<Vec<Vec<(u16, f64)>>, AssetError> {
    parse_weights_json(&read_text(path)?, path)
}

/// Vertex positions of an OBJ file. Faces are validated against the vertex
/// count; normals, texture coordinates, groups and materials are skipped.
pub fn parse_obj_vertices(text: &str, path: &Path) -> Result<Vec<Vec3>, AssetError> {
    let mut verts = Vec::new();
    let mut faces: Vec<(usize, i64)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let bad = |m: &str| invalid(path, format!("line {}: {m}", ln + 1));
        match tag {
            "v" => {
                let c: Vec<f64> = it
                    .map(|t| t.parse::<f64>().map_err(|_| bad("bad coordinate")))
                    .collect::<Result<_, _>>()?;
                if !(3..=4).contains(&c.len()) || c.iter().any(|v| !v.is_finite()) {
                    return Err(bad("vertex needs three finite coordinates"));
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                let mut n = 0;
                for t in it {
                    let idx = t.split('/').next().unwrap();
                    let v: i64 = idx.parse().map_err(|_| bad("bad face index"))?;
                    faces.push((ln + 1, v));
                    n += 1;
                }
                if n < 3 {
                    return Err(bad("face needs at least three vertices"));
                }
            }
            "vn" | "vt" | "vp" | "o" | "g" | "s" | "usemtl" | "mtllib" | "l" => {}
            other => return Err(bad(&format!("unsupported statement {other:?}"))),
        }
    }
    for (ln, v) in faces {
        let ok = (v > 0 && v as usize <= verts.len()) || (v < 0 && (-v) as usize <= verts.len());
        if !ok {
            return Err(invalid(path, format!("line {ln}: face index {v} out of range")));
        }
    }
    Ok(verts)
}

pub fn load_obj_vertices(path: &Path) -> Result<Vec<Vec3>, AssetError> {
    parse_obj_vertices(&read_text(path)?, path)
}

/// Loads a skinning source: a `.mesh.json`, or an `.obj` with a separate
/// weights file.
pub fn load_mesh(path: &Path, weights: Option<&Path>) -> Result<SkinnedMesh, AssetError> {
    let is_obj = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
    if is_obj {
        let wpath = weights.ok_or_else(|| invalid(path, "an OBJ mesh needs a weights file"))?;
        let verts = load_obj_vertices(path)?;
        let w = load_weights_json(wpath)?;
        SkinnedMesh::new(verts, w).map_err(|e| invalid(path, e.to_string()))
    } else {
        parse_mesh_json(&read_text(path)?, path)
    }
}

pub fn save_mesh(path: &Path, mesh: &MeshFile) -> Result<(), AssetError> {
    write_file(path, serde_json::to_string(mesh).unwrap().as_bytes())
}
