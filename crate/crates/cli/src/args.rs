use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Parses `a,b,c`.
fn triple<T: std::str::FromStr>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<T> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| "expected three comma-separated values".to_string())
}

#[derive(Parser, Debug)]
#[command(name = "nvol", version, about = "Sparse voxel volumes for articulated characters")]
pub struct Cli {
    /// Worker threads for every parallel stage [default: available parallelism]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit progress, reports and errors as JSON lines
    #[arg(long, global = true)]
    pub json_logs: bool,
    /// Reproducible gradient accumulation: identical outputs across runs and thread counts (default)
    #[arg(long, global = true, conflicts_with = "fast")]
    pub deterministic: bool,
    /// Faster gradient accumulation whose results may differ in the last bits between runs
    #[arg(long, global = true)]
    pub fast: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Clone, Copy, Debug)]
pub struct Global {
    pub json: bool,
    pub fast: bool,
    pub threads: Option<usize>,
}

impl Cli {
    pub fn global(&self) -> Global {
        Global {
            json: self.json_logs,
            fast: self.fast,
            threads: self.threads,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Carve a voxel set from a scene's silhouettes and write an initialized asset
    Carve(CarveArgs),
    /// Bake skinning weights from a weighted mesh and attach a skeleton
    Bake(BakeArgs),
    /// Fit an asset's feature table to a scene's images
    Fit(FitArgs),
    /// Render one frame to PNG (and optionally a depth raster)
    Render(RenderArgs),
    /// Render every frame of a pose clip and report per-stage timings
    Animate(AnimateArgs),
    /// Octree build and render throughput sweeps on random voxels
    Bench(BenchArgs),
    /// Serve frames of an asset over a WebSocket at /session
    Serve(ServeArgs),
    /// Generate a synthetic multi-view scene with ground-truth images
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct CarveArgs {
    /// Scene manifest (.scene.json)
    #[arg(long)]
    pub scene: PathBuf,
    /// Output asset (.nvo) holding the carved voxels and an initialized table
    #[arg(long)]
    pub out: PathBuf,
    /// Grid cells per axis (power of two)
    #[arg(long, default_value_t = 64)]
    pub resolution: u32,
    /// Spherical-harmonic degree of the feature table (0-4)
    #[arg(long, default_value_t = 2)]
    pub sh_degree: u8,
    /// Feature channels
    #[arg(long, default_value_t = 3)]
    pub channels: u8,
    /// Silhouette dilation radius in pixels
    #[arg(long, default_value_t = 5)]
    pub dilation: u32,
    /// Alpha above which a pixel counts as foreground
    #[arg(long, default_value_t = 0.005)]
    pub alpha_threshold: f32,
    /// Keep cells that no camera observes
    #[arg(long)]
    pub keep_unobserved: bool,
    /// Seed for the table initialization
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BlendSignArg {
    /// Closer vertices dominate
    Nearer,
    /// Farther vertices dominate
    Farther,
}

#[derive(Args, Debug)]
pub struct BakeArgs {
    /// Input asset (.nvo)
    #[arg(long)]
    pub asset: PathBuf,
    /// Weighted mesh (.mesh.json) or OBJ vertices (.obj, needs --weights)
    #[arg(long)]
    pub mesh: PathBuf,
    /// Per-vertex weights JSON for an OBJ mesh
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Skeleton (.skel.json)
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Output asset (.nvo)
    #[arg(long)]
    pub out: PathBuf,
    /// Nearest mesh vertices blended per voxel
    #[arg(long, default_value_t = 4)]
    pub neighbors: usize,
    /// Distance weighting of the blended vertices
    #[arg(long, value_enum, default_value_t = BlendSignArg::Nearer)]
    pub blend_sign: BlendSignArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PoseSamplingArg {
    Random,
    Cycle,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Scene manifest (.scene.json)
    #[arg(long)]
    pub scene: PathBuf,
    /// Initial asset from `carve` (and `bake` for posed scenes)
    #[arg(long)]
    pub asset: PathBuf,
    /// Output asset (.nvo)
    #[arg(long)]
    pub out: PathBuf,
    /// Optimizer iterations
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    /// Rays per batch, drawn from the views of one sampled pose
    #[arg(long, default_value_t = 4096)]
    pub rays_per_batch: usize,
    /// Step size for spherical-harmonic coefficients
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Step size for densities [default: lr / cell size]
    #[arg(long)]
    pub density_lr: Option<f64>,
    /// Weight of the collision regularizer
    #[arg(long, default_value_t = 0.01)]
    pub lambda_vrt: f64,
    /// Seed for ray and pose sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Held-out PSNR every this many iterations (0: only at the end)
    #[arg(long, default_value_t = 100)]
    pub probe_every: usize,
    /// Pose schedule: a random pose per iteration, or all poses in turn
    #[arg(long, value_enum, default_value_t = PoseSamplingArg::Random)]
    pub pose_sampling: PoseSamplingArg,
    /// Per-iteration JSON-lines log [default: <out>.fit.jsonl]
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CameraArgs {
    /// Take the camera from this scene manifest
    #[arg(long, conflicts_with_all = ["azimuth", "elevation", "radius", "target"])]
    pub scene: Option<PathBuf>,
    /// Camera index within --scene
    #[arg(long, default_value_t = 0, requires = "scene")]
    pub camera: usize,
    /// Orbit azimuth in radians from +x towards +y [default: 0.6]
    #[arg(long, allow_hyphen_values = true)]
    pub azimuth: Option<f64>,
    /// Orbit elevation in radians [default: 0.35]
    #[arg(long, allow_hyphen_values = true)]
    pub elevation: Option<f64>,
    /// Orbit distance [default: 1.6 x grid extent]
    #[arg(long)]
    pub radius: Option<f64>,
    /// Orbit target as x,y,z [default: grid center]
    #[arg(long, value_parser = triple::<f64>, allow_hyphen_values = true)]
    pub target: Option<[f64; 3]>,
    /// Image width [default: 512, or the scene camera's]
    #[arg(long)]
    pub width: Option<u32>,
    /// Image height [default: 512, or the scene camera's]
    #[arg(long)]
    pub height: Option<u32>,
    /// Vertical field of view in radians for orbit cameras
    #[arg(long, default_value_t = nvol_service::DEFAULT_FOV_Y)]
    pub fov: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RenderOptionArgs {
    /// Early-stop threshold: rays stop once alpha exceeds 1 - lambda_th
    #[arg(long, default_value_t = nvol::render::DEFAULT_LAMBDA_TH)]
    pub lambda_th: f64,
    /// Integrate every pierced voxel
    #[arg(long)]
    pub no_early_stop: bool,
    /// Composite over a solid r,g,b background in [0, 1]
    #[arg(long, value_parser = triple::<f32>)]
    pub background: Option<[f32; 3]>,
    /// Uniform scale of the character about the origin
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Asset (.nvo)
    #[arg(long)]
    pub asset: PathBuf,
    /// Output PNG
    #[arg(long)]
    pub out: PathBuf,
    /// Also write depth (.dpt)
    #[arg(long)]
    pub depth: Option<PathBuf>,
    /// Pose clip (.clip.json); without it the canonical pose is rendered
    #[arg(long)]
    pub clip: Option<PathBuf>,
    /// Frame of --clip
    #[arg(long, default_value_t = 0, requires = "clip")]
    pub frame: usize,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub options: RenderOptionArgs,
}

#[derive(Args, Debug)]
pub struct AnimateArgs {
    /// Asset (.nvo)
    #[arg(long)]
    pub asset: PathBuf,
    /// Pose clip (.clip.json)
    #[arg(long)]
    pub clip: PathBuf,
    /// Directory for frame_NNNN.png
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Timed frames (cycling through the clip); medians need at least 20
    #[arg(long, default_value_t = 20)]
    pub timed_frames: usize,
    /// Untimed warmup frames
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    #[command(flatten)]
    pub camera: CameraArgs,
    #[command(flatten)]
    pub options: RenderOptionArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Random voxels per sweep
    #[arg(long, default_value_t = 1_000_000)]
    pub voxels: usize,
    /// Grid cells per axis (power of two)
    #[arg(long, default_value_t = 256)]
    pub resolution: u32,
    /// Thread counts for the octree build sweep
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub threads_list: Vec<usize>,
    /// Timed repetitions per measurement (medians are reported)
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    /// Square frame size for the render stage
    #[arg(long, default_value_t = 256)]
    pub render_size: u32,
    /// Joints of the random rig used for the warp stage
    #[arg(long, default_value_t = 8)]
    pub joints: usize,
    /// Seed for the random voxels, rig and poses
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Asset (.nvo)
    #[arg(long)]
    pub asset: PathBuf,
    /// Bind address
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Static files served at / (the pose preview UI)
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SynthKind {
    /// Fuzzy sphere, canonical pose only
    Sphere,
    /// Two-bone capsule with density noise and bent poses
    Capsule,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Sphere)]
    pub kind: SynthKind,
    /// Output directory
    #[arg(long)]
    pub out_dir: PathBuf,
    /// File name stem
    #[arg(long, default_value = "scene")]
    pub stem: String,
    /// Grid resolution the scene targets (sets the marcher step)
    #[arg(long, default_value_t = 64)]
    pub resolution: u32,
    /// Square image size
    #[arg(long, default_value_t = 128)]
    pub image_size: u32,
    /// Cameras on a sphere around the subject
    #[arg(long, default_value_t = 24)]
    pub views: usize,
    /// Cameras held out for probing
    #[arg(long, default_value_t = 4)]
    pub holdout: usize,
    /// Bent poses rendered in addition to the canonical one (capsule)
    #[arg(long, default_value_t = 2)]
    pub poses: usize,
    /// Marcher step = cell size / this
    #[arg(long, default_value_t = 64.0)]
    pub step_divisor: f64,
}
