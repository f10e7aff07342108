//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use specamp::models::{sample_instance, Channel, GaussianPrior, Instance, PhaseRetrieval, Prior};
use specamp::Rng;

/// Gaussian-prior noiseless phase-retrieval instance.
pub fn noiseless_instance(d: usize, delta: f64, seed: u64) -> Instance {
    let prior: Arc<dyn Prior> = Arc::new(GaussianPrior);
    let channel: Arc<dyn Channel> = Arc::new(PhaseRetrieval::Noiseless);
    sample_instance(prior, channel, d, delta, &mut Rng::new(seed)).expect("valid dimensions")
}
