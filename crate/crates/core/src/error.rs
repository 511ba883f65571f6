use crate::assetio::AssetError;
use crate::fit::FitError;
use crate::geometry::GeometryError;
use crate::rigging::RigError;
use crate::volume::VolumeError;

/// Coarse error class, printed as a stable prefix by the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    InvalidInput,
    Geometry,
    CarvedEmpty,
    Volume,
    Rig,
    Format,
    Io,
    Fit,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::InvalidInput => "invalid-input",
            ErrorCategory::Geometry => "geometry",
            ErrorCategory::CarvedEmpty => "carved-empty",
            ErrorCategory::Volume => "volume",
            ErrorCategory::Rig => "rig",
            ErrorCategory::Format => "format",
            ErrorCategory::Io => "io",
            ErrorCategory::Fit => "fit",
        }
    }
}

impl std::fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Geometry(_) => ErrorCategory::Geometry,
            Error::Volume(VolumeError::CarvedEmpty { .. }) => ErrorCategory::CarvedEmpty,
            Error::Volume(_) => ErrorCategory::Volume,
            Error::Rig(_) => ErrorCategory::Rig,
            Error::Asset(AssetError::Io { .. }) => ErrorCategory::Io,
            Error::Asset(_) => ErrorCategory::Format,
            Error::Fit(_) => ErrorCategory::Fit,
            Error::InvalidArgument(_) | Error::DimensionMismatch(_) => ErrorCategory::InvalidInput,
        }
    }
}
