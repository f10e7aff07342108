//! Spectral estimator and its asymptotic overlap.

pub mod estimate;
pub mod law;
pub mod model;
pub mod optimal;

pub use estimate::{spectral_estimate, spectral_estimate_op, SpectralEstimate, SpectralOptions};
pub use law::JointLaw;
pub use model::{SpectralModel, SpectralPrediction};
pub use optimal::{delta_u, linear_degeneracy_integral, optimal_t_bar, optimal_t_star};
