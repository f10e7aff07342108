//! Generalized approximate message passing with spectral initialization.

mod artificial;
mod run;

pub use artificial::{
    artificial_init, artificial_run, phase1_functions, phase1_se, ArtificialConfig, ArtificialTrace, Phase1Output,
    Phase1State,
};

pub use run::{
    empirical_pl2, gamp_init_spectral, gamp_run, gamp_step, GampConfig, GampState, GampTrace, Onsager,
    OnsagerMode, SpectralStart, StopReason,
};
