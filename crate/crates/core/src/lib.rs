//! Mean freshness of Poisson-sampled finite-state CTMC sources.
//!
//! Three notions of freshness are supported: exact-match (FWE), proximity
//! weighted (FWC) and fresh-since-sample (FWS). For reversible sources FWE and
//! FWC reduce to rational functions of the sampling rate, which the
//! water-filling optimizer uses to split a total sampling budget.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ctmc;
pub mod error;
pub mod freshness;
pub mod optimizer;
pub mod oracle;
pub mod scenarios;
pub mod simulator;

pub use ctmc::{
    build_birth_death, check_reversibility, spectral_decomposition, stationary_distribution,
    transition_intensity, Generator, SpectralForm, StationaryDist,
};
pub use error::{Error, Result};
pub use freshness::{
    fwc_rational, fwe_mean_general, fwe_rational, fws_rational, proximity_band, Model,
    ProximityMatrix, RationalFreshness, Term,
};
pub use optimizer::{
    grid_oracle, kkt_check, two_state_single_shot, water_fill, water_fill_with, AllocationResult,
    InnerStep, KktReport, SourceSpec,
};
pub use oracle::{fws_chain_solve, joint_chain_solve};
pub use scenarios::{
    baseline_allocation, run_experiment, system_freshness, ExperimentReport, Policy, ScenarioSpec,
};
pub use simulator::{simulate_freshness, simulate_shared, SimEstimate};
