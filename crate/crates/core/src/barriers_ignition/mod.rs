//! Ignition barriers: the moving supersolution `Φ^k` for `s < 1/2`, the
//! certified bump `u_θ` and the expanding subsolution built on it.

mod bump;
mod mollify;
mod self_similar;
mod sequences;
mod supersolution;

pub use bump::{build_bump, build_bump_with, radial_residuals, BumpProfile, BumpSettings, BumpShape, ScaledBump};
pub use mollify::{kernel, kernel_cdf, smooth_step, smooth_step_derivative, smoothed_ramp};
pub use self_similar::{build_self_similar_sub, SelfSimilarSub};
pub use sequences::{build_sequences, window_log2, Sequences};
pub use supersolution::{build_supersolution, IgnitionSuperBarrier, PhiSlice};
