//! Off-grid channel estimation for hybrid-beamforming MIMO links.
//!
//! The beamspace representation of a multi-antenna channel is sparse only
//! when path angles sit exactly on the DFT grid; a path between grid points
//! smears into a two-dimensional Dirichlet kernel. This crate models that
//! structure and exploits it for recovery:
//!
//! * [`channel`] - ULA geometry, multipath channels, DFT dictionaries, and
//!   the beamspace transform;
//! * [`kernel`] - the Dirichlet kernel, its phase-exact continuum, and
//!   single-path atoms at continuous virtual locations;
//! * [`measurement`] - random analog beamformers, the Kronecker sensing
//!   matrix, and reproducible noisy observations;
//! * [`estimators`] - grid-constrained OMP plus three pursuit variants that
//!   walk to the kernel peak (lobe-ratio, three-sample, local search);
//! * [`analysis`] - power-capture analysis, scenario generation, NMSE, and
//!   paired Monte-Carlo sweep drivers.
//!
//! All randomness flows from explicit seeds through one splitting rule
//! ([`measurement::derive_seed`]), so every experiment is reproducible
//! bit-for-bit, including under trial-level parallelism.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod linalg;
pub mod measurement;

pub use analysis::{
    generate_offgrid_scenario, generate_ongrid_scenario, nmse, power_capture_closed_form,
    power_capture_oracle, split_measurements, sweep_measurements, sweep_snr, AggregateRecord,
    GainModel, ScenarioSpec, SweepResult, TrialMetrics, TrialRecord,
};
pub use channel::{
    array_response_bs, array_response_ue, beamspace_of, build_channel, dft_dictionary,
    from_beamspace, to_beamspace, BeamspaceMatrix, MultipathComponent, PhysicalChannel, UlaConfig,
};
pub use error::{Error, Result};
pub use estimators::{
    domp_lo, domp_mlb, domp_mslb, match_step, mlb_offset, mslb_offset, neighborhood_ls,
    omp_standard, peak_strength, EstimateResult, Estimator, EstimatorConfig, SensingOperator,
};
pub use kernel::{
    dirichlet_atom, dirichlet_kernel, dirichlet_ratio, dtft_spectrum, peak_from_aoa,
    peak_from_aod, steering_from_peak, VirtualPeak,
};
pub use measurement::{
    derive_seed, measure, mix64, random_beamformers, sensing_matrix, Observation, SensingSetup,
};

pub use num_complex::Complex64;
