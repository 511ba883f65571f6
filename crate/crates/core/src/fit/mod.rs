//! Gradient-based fitting of the feature table to posed RGBA images.

mod adam;
mod backward;
mod loss;
mod train;

pub use adam::SparseAdam;
pub use backward::{backward, backward_ray, GradBuffer, Reduction};
pub use loss::{l1_sign, loss_rgba, loss_rgba_with_grad, loss_vrt, psnr, vrt_backward, RayGradient, RayTarget};
pub use train::{
    fit, probe_psnr, FitConfig, FitDataset, FitError, FitOutcome, LossReport, PoseSampling, ProbeView,
    TrainFrame, TrainView,
};
