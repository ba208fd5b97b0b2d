//! Sampled signals, quadrature and special functions.

mod hermite;
mod signal;
mod special;
mod spectral;

pub use hermite::hermite_signal;
pub use signal::{inner, pairwise_sum, Grid, SampledSignal};
pub use special::{loc_integral, theta, theta_truncation_bound, ThetaConfig};
pub use spectral::{spectral_derivative, Interpolant};
