//! Signal priors, output channels, preprocessing maps and random instances.

pub mod channel;
pub mod instance;
pub mod preprocessing;
pub mod prior;

pub use channel::{Channel, PhaseRetrieval, PosteriorMoments};
pub use instance::{sample_instance, Instance};
pub use preprocessing::Preprocessing;
pub use prior::{BinaryPrior, DiscretePrior, GaussianPrior, Prior};
