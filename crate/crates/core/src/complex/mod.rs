//! Complex-valued phase retrieval: coded diffraction patterns, the Bessel
//! posterior denoiser, single-parameter state evolution and complex GAMP.

mod bessel;
mod cdp;
mod denoiser;
mod gamp;
pub mod image;
mod se;
mod spectral;

pub use bessel::{bessel_i0e, bessel_i1e, bessel_ratio};
pub use cdp::{zeroed_row_count, CdpOperator};
pub use denoiser::{ComplexHStar, ComplexPosterior};
pub use gamp::{
    complex_gamp_run, phase_aligned_overlap, sample_complex_gaussian, ComplexGampConfig, ComplexGampTrace,
    ComplexInstance, ComplexStart, MuSource, Sensing,
};
pub use spectral::{complex_prediction, complex_t_bar, COMPLEX_DELTA_U};
pub use se::{
    complex_overlap, complex_se_init, complex_se_run, complex_se_step, expected_h_star_sq, ComplexSeTrace,
    COMPLEX_PERFECT_RECOVERY,
};
