//! Two independent evaluations of `(-Δ)^s`: a Fourier multiplier on periodic
//! grids and a principal-value quadrature for closed-form profiles, plus the
//! fractional heat semigroup.

mod calibrate;
mod gauss;
mod grid;
mod profiles;
mod quadrature;
mod spectral;

pub use calibrate::calibrate_constant;
pub use gauss::{gauss_kronrod, gauss_legendre};
pub use grid::{GridField, TOL_BOX};
pub use profiles::{Constant, Gaussian, PiecewiseLinear, Radial, RadialShape};
pub use quadrature::{
    quadrature_apply_at, AlgebraicDecay, Breakpoint, Profile1d, Profile2d, ProfileRef, QuadValue,
    QuadratureScheme, Tail, DEFAULT_NODES_PER_DECADE, DEFAULT_OUTER_CUTOFF,
};
pub use spectral::{semigroup_step, spectral_apply, wavenumbers, FourierMultiplier};
