//! Parameter sweeps, presets and CSV output for the experiment front end.

pub mod config;
pub mod csv_io;
pub mod harness;
pub mod selftest;
pub mod sweep;

pub use config::{parse_delta_grid, ChannelSpec, ExperimentConfig, Preset, PriorSpec};
pub use csv_io::{emit_csv, format_sig, read_csv, write_csv, SWEEP_HEADER};
pub use harness::{artificial_check, ArtificialReport};
pub use selftest::{selftest, SelfCheck};
pub use sweep::{
    complex_se_overlap, complex_spectral_setup, real_design_delta, real_se_overlap, real_spectral_setup, run_sweep,
    SweepRow, SWEEP_RULE_ORDER,
};
