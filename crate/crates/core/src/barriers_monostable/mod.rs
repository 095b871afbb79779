//! Expanding subsolution `Ψ_θ` for α-monostable reactions with `α > 1`.

mod barrier;
mod lemma81;
mod smoothing;

pub use barrier::{
    build_monostable_sub, build_monostable_sub_with, find_t_theta, MonostableBarrier, MonostableSlice, TraceEntry,
};
pub use lemma81::{
    estimate_lemma81_constants, estimate_lemma81_constants_with, lemma81_slack, Lemma81Constants, PowerProfile,
    SweepGrid,
};
pub use smoothing::{build_smoothing, Smoothing};
