//! Heteroscedastic Bayesian optimisation.
//!
//! A most-likely heteroscedastic Gaussian process surrogate models
//! input-dependent observation noise, and the het-AEI and ANPEI acquisition
//! functions steer the search away from noisy regions. The crate also ships
//! the benchmark problems and the sequential optimisation driver used by the
//! `hetbo` command-line tool.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod bo;
mod error;
pub mod gp;
pub mod mlhgp;
pub mod numerics;
pub mod objectives;

pub use acquisition::{
    anpei, augmented_ei, expected_improvement, het_augmented_ei, maximise_acquisition, AcquisitionKind,
    AcquisitionSpec, Domain, Incumbent, Sense, Surrogate,
};
pub use bo::{
    parse_method, run_campaign, run_replicates, CampaignConfig, CampaignRecord, CampaignRow, ReplicateSummary,
    SurrogateKind,
};
pub use error::{AcquisitionError, CampaignError, GpError, ObjectiveError};
pub use gp::{fit_gp, nlpd, Dataset, GPModel, Kernel, NoiseMode, PredictiveDistribution};
pub use mlhgp::{fit_mlhgp, HetGPModel};
pub use numerics::RandomSource;
pub use objectives::{NoisyObjective, Objective, TabularObjective};
