//! Per-connection state and the message loop.

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket};
use futures::{SinkExt, StreamExt};
use nvol::geometry::{Camera, RigidTransform, Vec3};
use nvol::render::{render_png, FrameRequest, RenderOptions};
use nvol::rigging::Pose;
use nvol::{Asset, Error, ErrorCategory};
use tokio::task::JoinHandle;

use crate::protocol::{ClientMessage, Extrinsics, JointInfo, Orbit, ServerMessage, StageMillis};
use crate::AppState;

pub const DEFAULT_SIZE: u32 = 512;
pub const DEFAULT_FOV_Y: f64 = 0.7;

/// Orbit framing the whole asset grid from a three-quarter view.
pub fn default_orbit(asset: &Asset) -> Orbit {
    let g = asset.grid();
    let extent = g.cell_size() * g.resolution() as f64;
    Orbit {
        azimuth: 0.6,
        elevation: 0.35,
        radius: 1.6 * extent,
        target: g.center().into(),
    }
}

pub fn orbit_camera(orbit: &Orbit, fov_y: f64, width: u32, height: u32) -> Result<Camera, Error> {
    Ok(Camera::orbit(
        orbit.azimuth,
        orbit.elevation,
        orbit.radius,
        Vec3::from(orbit.target),
        fov_y,
        width,
        height,
    )?)
}

#[derive(Clone, Debug)]
pub struct SessionState {
    pub pose: Option<Pose>,
    pub orbit: Orbit,
    pub world_to_camera: Option<RigidTransform>,
    pub width: u32,
    pub height: u32,
    pub fov_y: f64,
    pub options: RenderOptions,
    pub scale: f64,
    pub last_seq: Option<u64>,
}

fn invalid(m: impl Into<String>) -> Error {
    Error::InvalidArgument(m.into())
}

impl SessionState {
    pub fn new(asset: &Asset) -> Self {
        Self {
            pose: None,
            orbit: default_orbit(asset),
            world_to_camera: None,
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            fov_y: DEFAULT_FOV_Y,
            options: RenderOptions::default(),
            scale: 1.0,
            last_seq: None,
        }
    }

    pub fn camera(&self) -> Result<Camera, Error> {
        match &self.world_to_camera {
            Some(w2c) => {
                let f = 0.5 * self.height as f64 / (0.5 * self.fov_y).tan();
                Ok(Camera::new(
                    f,
                    f,
                    0.5 * self.width as f64,
                    0.5 * self.height as f64,
                    self.width,
                    self.height,
                    *w2c,
                )?)
            }
            None => orbit_camera(&self.orbit, self.fov_y, self.width, self.height),
        }
    }

    pub fn frame_request(&self) -> Result<FrameRequest, Error> {
        Ok(FrameRequest {
            pose: self.pose.clone(),
            camera: self.camera()?,
            options: self.options.clone(),
            scale: self.scale,
        })
    }

    /// Applies a state message. On error the state is left unchanged.
    pub fn apply(&mut self, msg: ClientMessage, asset: &Asset) -> Result<(), Error> {
        match msg {
            ClientMessage::SetPose {
                rotations,
                root_rotation,
                root_translation,
            } => {
                if rotations.len() != asset.joint_count() {
                    return Err(nvol::rigging::RigError::JointCountMismatch {
                        skeleton: asset.joint_count(),
                        pose: rotations.len(),
                    }
                    .into());
                }
                self.pose = Some(Pose::new(
                    rotations.into_iter().map(Vec3::from).collect(),
                    Vec3::from(root_rotation),
                    Vec3::from(root_translation),
                )?);
            }
            ClientMessage::SetCamera {
                orbit,
                world_to_camera,
                width,
                height,
                fov_y,
            } => {
                let mut next = self.clone();
                if let Some(o) = orbit {
                    next.orbit = o;
                    next.world_to_camera = None;
                }
                if let Some(Extrinsics { rotation, translation }) = world_to_camera {
                    let norm = rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if !((norm - 1.0).abs() <= 1e-4) || translation.iter().any(|v| !v.is_finite()) {
                        return Err(invalid(format!("extrinsics must be finite with a unit rotation (norm {norm})")));
                    }
                    next.world_to_camera = Some(RigidTransform::from_wxyz(rotation, translation));
                }
                next.width = width.unwrap_or(next.width);
                next.height = height.unwrap_or(next.height);
                next.fov_y = fov_y.unwrap_or(next.fov_y);
                if next.width == 0 || next.height == 0 || next.width > 4096 || next.height > 4096 {
                    return Err(invalid(format!("image size {}x{} outside 1..=4096", next.width, next.height)));
                }
                if !(next.fov_y > 0.0 && next.fov_y < std::f64::consts::PI) {
                    return Err(invalid(format!("fov_y {} outside (0, pi)", next.fov_y)));
                }
                next.camera()?;
                *self = next;
            }
            ClientMessage::SetOptions {
                lambda_th,
                scale,
                early_stop,
                background,
            } => {
                let mut options = self.options.clone();
                options.lambda_th = lambda_th.unwrap_or(options.lambda_th);
                options.early_stop = early_stop.unwrap_or(options.early_stop);
                if let Some(b) = background {
                    options.background = b;
                }
                options.validate()?;
                let scale = scale.unwrap_or(self.scale);
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(invalid(format!("scale {scale} must be positive")));
                }
                self.options = options;
                self.scale = scale;
            }
            ClientMessage::RequestFrame { .. } | ClientMessage::GetSkeleton => {
                return Err(invalid("not a state message"));
            }
        }
        Ok(())
    }
}

pub fn skeleton_message(app: &AppState) -> ServerMessage {
    let joints = match &app.asset.rig {
        Some(rig) => rig
            .skeleton
            .joints()
            .iter()
            .map(|j| JointInfo {
                name: j.name.clone(),
                parent: j.parent,
            })
            .collect(),
        None => vec![JointInfo {
            name: "root".into(),
            parent: None,
        }],
    };
    ServerMessage::Skeleton {
        asset_id: app.asset_id.clone(),
        voxels: app.asset.len(),
        joints,
    }
}

fn error_message(seq: Option<u64>, category: ErrorCategory, message: impl Into<String>) -> ServerMessage {
    ServerMessage::Error {
        seq,
        category: category.to_string(),
        message: message.into(),
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

type RenderOutcome = Result<(Vec<u8>, ServerMessage), Error>;

fn spawn_render(app: &Arc<AppState>, seq: u64, req: FrameRequest) -> (u64, JoinHandle<RenderOutcome>) {
    let app = app.clone();
    let handle = tokio::task::spawn_blocking(move || {
        let start = Instant::now();
        app.pool.install(|| render_png(&app.asset, &req)).map(|(png, fb, t)| {
            let meta = ServerMessage::FrameMeta {
                seq,
                render_ms: ms(start.elapsed()),
                width: fb.width,
                height: fb.height,
                stages: StageMillis {
                    warp: ms(t.warp),
                    build_octree: ms(t.build_octree),
                    volume_render: ms(t.volume_render),
                },
            };
            (png, meta)
        })
    });
    (seq, handle)
}

/// Runs one session until the client disconnects. State messages apply in
/// arrival order; a frame request snapshots the state, and requests that
/// arrive while a render is in flight replace each other, the replaced
/// ones being answered `superseded`.
pub async fn run_session(socket: WebSocket, app: Arc<AppState>) {
    let (mut tx, mut rx) = socket.split();
    let mut state = SessionState::new(&app.asset);
    let mut in_flight: Option<(u64, JoinHandle<RenderOutcome>)> = None;
    let mut pending: Option<(u64, FrameRequest)> = None;

    loop {
        let mut out: Vec<Message> = Vec::new();
        tokio::select! {
            biased;
            incoming = rx.next() => {
                let text = match incoming {
                    None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Binary(_))) => {
                        out.push(Message::Text(
                            error_message(None, ErrorCategory::InvalidInput, "binary messages are not accepted").to_json(),
                        ));
                        String::new()
                    }
                    Some(Ok(_)) => continue,
                };
                if !text.is_empty() {
                    match serde_json::from_str::<ClientMessage>(&text) {
                        Err(e) => out.push(Message::Text(
                            error_message(None, ErrorCategory::InvalidInput, format!("malformed message: {e}")).to_json(),
                        )),
                        Ok(ClientMessage::GetSkeleton) => out.push(Message::Text(skeleton_message(&app).to_json())),
                        Ok(ClientMessage::RequestFrame { seq }) => {
                            if state.last_seq.is_some_and(|last| seq <= last) {
                                out.push(Message::Text(
                                    error_message(
                                        Some(seq),
                                        ErrorCategory::InvalidInput,
                                        format!("sequence number {seq} does not increase"),
                                    )
                                    .to_json(),
                                ));
                            } else {
                                state.last_seq = Some(seq);
                                match state.frame_request() {
                                    Err(e) => out.push(Message::Text(
                                        error_message(Some(seq), e.category(), e.to_string()).to_json(),
                                    )),
                                    Ok(req) if in_flight.is_none() => in_flight = Some(spawn_render(&app, seq, req)),
                                    Ok(req) => {
                                        if let Some((old, _)) = pending.replace((seq, req)) {
                                            out.push(Message::Text(ServerMessage::Superseded { seq: old }.to_json()));
                                        }
                                    }
                                }
                            }
                        }
                        Ok(m) => {
                            if let Err(e) = state.apply(m, &app.asset) {
                                out.push(Message::Text(error_message(None, e.category(), e.to_string()).to_json()));
                            }
                        }
                    }
                }
            }
            done = async { (&mut in_flight.as_mut().expect("guarded").1).await }, if in_flight.is_some() => {
                let seq = in_flight.take().expect("guarded").0;
                match done {
                    Ok(Ok((png, meta))) => {
                        log::debug!("frame {seq}: {} bytes", png.len());
                        out.push(Message::Text(meta.to_json()));
                        out.push(Message::Binary(png));
                    }
                    Ok(Err(e)) => {
                        out.push(Message::Text(error_message(Some(seq), e.category(), e.to_string()).to_json()))
                    }
                    Err(e) => {
                        log::error!("render task for frame {seq} failed: {e}");
                        out.push(Message::Text(
                            error_message(Some(seq), ErrorCategory::Volume, format!("render task failed: {e}")).to_json(),
                        ));
                    }
                }
                if let Some((seq, req)) = pending.take() {
                    in_flight = Some(spawn_render(&app, seq, req));
                }
            }
        }
        for m in out {
            if tx.send(m).await.is_err() {
                return;
            }
        }
    }
}
