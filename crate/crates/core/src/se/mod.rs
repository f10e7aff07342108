//! State evolution for GAMP and the denoisers it drives.

pub mod bayes;
pub mod denoisers;
pub mod recursion;

pub use bayes::{bayes_f_star, bayes_h_star, BayesOutput, BayesSignal};
pub use denoisers::{
    DenoiserSchedule, Identity, LinearSignal, OutputDenoiser, OutputKind, SignalDenoiser, SignalKind,
    StandardSchedule, ZeroOutput,
};
pub use recursion::{
    mse_from_se, output_moments, overlap_from_se, se_fixed_point, se_init, se_step, se_step_with,
    signal_moments, OutputMoments, SeOutcome, SeState, SeStep, SeTrace, SignalMoments,
};
