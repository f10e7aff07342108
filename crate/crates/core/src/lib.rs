//! Spectral estimators and approximate message passing for generalized
//! linear models `y_i = q(<a_i, x>, w_i)`.

pub mod error;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};
pub use rng::Rng;
pub mod models;
pub mod spectral;
pub mod se;
pub mod gamp;
pub mod complex;
pub mod experiments;
