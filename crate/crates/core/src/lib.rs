//! Stability of linear multi-delay differential equations through Taylor expansion of the
//! delay terms about a single reference delay, with spectral and time-stepping ground truth.

pub mod approx;
pub mod compare23;
pub mod error;
pub mod integrator;
pub mod lambert;
pub mod moments;
pub mod queue_sim;
pub mod spectral;
pub mod sweep;
pub mod types;

pub use approx::{
    classify_by_approx, critical_delay, taylor_coeffs, ApproxKind, CosineForm, OmegaRoot,
    TaylorCoeffs,
};
pub use error::{
    ApproxError, Error, IntegrateError, ModelError, Result, SpectralError, SweepError,
};
pub use spectral::{classify_spectral, rightmost_root};
pub use sweep::{GridSpec, GroundTruthMethod};
pub use types::{
    DelayDistribution, DeltaStarRule, LinearModel, QueueModel, StabilityClass, StabilityVerdict,
};
