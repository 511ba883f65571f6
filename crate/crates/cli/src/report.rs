use std::time::Duration;

use nvol::ErrorCategory;
use serde_json::json;

/// Failure surfaced as `error[<category>]: <message>`.
#[derive(Debug)]
pub struct CliError {
    pub category: String,
    pub message: String,
}

impl CliError {
    pub fn new(category: ErrorCategory, message: impl Into<String>) -> Self {
        Self {
            category: category.to_string(),
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCategory::InvalidInput, message)
    }
}

impl From<nvol::Error> for CliError {
    fn from(e: nvol::Error) -> Self {
        Self::new(e.category(), e.to_string())
    }
}

impl From<nvol::assetio::AssetError> for CliError {
    fn from(e: nvol::assetio::AssetError) -> Self {
        nvol::Error::from(e).into()
    }
}

impl From<nvol::rigging::RigError> for CliError {
    fn from(e: nvol::rigging::RigError) -> Self {
        nvol::Error::from(e).into()
    }
}

impl From<nvol::geometry::GeometryError> for CliError {
    fn from(e: nvol::geometry::GeometryError) -> Self {
        nvol::Error::from(e).into()
    }
}

impl From<nvol_service::ServiceError> for CliError {
    fn from(e: nvol_service::ServiceError) -> Self {
        Self::new(e.category(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(ErrorCategory::Io, e.to_string())
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Median per-stage milliseconds over a run of frames.
#[derive(Clone, Copy, Debug)]
pub struct StageMedians {
    pub frames: usize,
    pub warp: f64,
    pub build_octree: f64,
    pub volume_render: f64,
    pub total: f64,
}

impl StageMedians {
    pub fn from_timings(t: &[nvol::render::StageTimings]) -> Self {
        let col = |f: &dyn Fn(&nvol::render::StageTimings) -> Duration| {
            let mut v: Vec<f64> = t.iter().map(|x| ms(f(x))).collect();
            median(&mut v)
        };
        Self {
            frames: t.len(),
            warp: col(&|x| x.warp),
            build_octree: col(&|x| x.build_octree),
            volume_render: col(&|x| x.volume_render),
            total: col(&|x| x.total()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "frames": self.frames,
            "median_ms": {
                "warp": self.warp,
                "build_octree": self.build_octree,
                "volume_render": self.volume_render,
                "total": self.total,
            }
        })
    }

    pub fn table(&self) -> String {
        format!(
            "stage           median ms ({} frames)\n\
             warp            {:>10.3}\n\
             build-octree    {:>10.3}\n\
             volume-render   {:>10.3}\n\
             total           {:>10.3}",
            self.frames, self.warp, self.build_octree, self.volume_render, self.total
        )
    }
}
